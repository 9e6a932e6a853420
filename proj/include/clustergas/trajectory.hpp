#pragma once

#include "clustergas/geometry.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

namespace clustergas {

template <int D>
struct Breakpoint {
  double t;
  Vec<D> x;  // wrapped position at t
  Vec<D> v;  // outgoing velocity on [t, next breakpoint)
};

// Piecewise-linear path on the torus; breakpoints start at t=0 and end at the
// run horizon, with velocity changes only at collision breakpoints.
template <int D>
struct Trajectory {
  int particle_id = 0;
  std::vector<Breakpoint<D>> points;

  double start_time() const { return points.front().t; }
  double end_time() const { return points.back().t; }

  // Index of the breakpoint governing time t (last one with t_k <= t).
  std::size_t segment_index(double t) const {
    auto it = std::upper_bound(points.begin(), points.end(), t,
                               [](double a, const Breakpoint<D>& b) { return a < b.t; });
    if (it == points.begin()) return 0;
    return static_cast<std::size_t>(it - points.begin()) - 1;
  }

  Vec<D> position_at(double t) const {
    const Breakpoint<D>& b = points[segment_index(t)];
    return wrap_position<D>(b.x + (t - b.t) * b.v);
  }

  // Right-continuous velocity.
  Vec<D> velocity_at(double t) const { return points[segment_index(t)].v; }
};

template <int D>
using TrajectorySet = std::vector<Trajectory<D>>;

template <int D>
struct LoggedCollision {
  double t = 0.0;
  int i = 0;
  int j = 0;
  Vec<D> omega = Vec<D>::Zero();  // (x_i - x_j)/eps at contact
  Vec<D> vi_pre = Vec<D>::Zero();
  Vec<D> vj_pre = Vec<D>::Zero();
  Vec<D> vi_post = Vec<D>::Zero();
  Vec<D> vj_post = Vec<D>::Zero();
};

template <int D>
using CollisionLog = std::vector<LoggedCollision<D>>;

namespace detail {

// First time in [t0, t1] at which |r0 + s*u| <= eps for s in [0, t1-t0],
// where r0 is re-wrapped to the nearest image at the sub-step start. Sub-steps
// keep the swept range short enough that the nearest image stays valid.
template <int D>
std::optional<double> linear_contact_in(const Vec<D>& xi, const Vec<D>& vi, const Vec<D>& xj,
                                        const Vec<D>& vj, double eps, double span,
                                        Vec<D>* omega_out) {
  const Vec<D> u = vi - vj;
  const double speed = u.norm();
  const double sub = speed > 0.0 ? std::min(span, 0.2 / speed) : span;
  double s0 = 0.0;
  Vec<D> base_i = xi;
  Vec<D> base_j = xj;
  while (s0 < span || s0 == 0.0) {
    const double dt = std::min(sub, span - s0);
    const Vec<D> r0 = torus_displacement<D>(base_j, base_i);
    const double dist = r0.norm();
    if (dist <= eps) {
      if (omega_out) *omega_out = dist > 0.0 ? Vec<D>(r0 / dist) : Vec<D>::Unit(0);
      return s0;
    }
    if (dist - eps <= speed * dt) {
      const double a = u.squaredNorm();
      const double b = r0.dot(u);
      const double c = r0.squaredNorm() - eps * eps;
      const double disc = b * b - a * c;
      if (b < 0.0 && disc > 0.0) {
        const double s = c / (-b + std::sqrt(disc));
        if (s >= 0.0 && s <= dt) {
          if (omega_out) *omega_out = (r0 + s * u).normalized();
          return s0 + s;
        }
      }
    }
    if (dt <= 0.0) break;
    s0 += dt;
    base_i = wrap_position<D>(base_i + dt * vi);
    base_j = wrap_position<D>(base_j + dt * vj);
    if (s0 >= span) break;
  }
  return std::nullopt;
}

}  // namespace detail

// Infimum time in [t0, t1] at which the two recorded paths come within eps
// (torus distance), found on the merged breakpoint grid. Both paths must
// cover the window. Returns t0 itself when the paths already touch there.
template <int D>
std::optional<ContactEvent<D>> first_contact_time(const Trajectory<D>& pi,
                                                  const Trajectory<D>& pj, double eps, double t0,
                                                  double t1) {
  {
    const Vec<D> a = pi.position_at(t0);
    const Vec<D> b = pj.position_at(t0);
    const Vec<D> r = torus_displacement<D>(b, a);
    const double dist = r.norm();
    if (dist <= eps) {
      ContactEvent<D> ev;
      ev.t = t0;
      ev.omega = dist > 0.0 ? Vec<D>(r / dist) : Vec<D>::Unit(0);
      ev.i = pi.particle_id;
      ev.j = pj.particle_id;
      return ev;
    }
  }
  // Merged grid of both paths' breakpoints inside (t0, t1).
  std::vector<double> grid;
  grid.push_back(t0);
  for (const auto& b : pi.points)
    if (b.t > t0 && b.t < t1) grid.push_back(b.t);
  for (const auto& b : pj.points)
    if (b.t > t0 && b.t < t1) grid.push_back(b.t);
  grid.push_back(t1);
  std::sort(grid.begin(), grid.end());
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    const double s0 = grid[g];
    const double s1 = grid[g + 1];
    if (s1 <= s0) continue;
    const Vec<D> xi = pi.position_at(s0);
    const Vec<D> xj = pj.position_at(s0);
    const Vec<D> vi = pi.velocity_at(s0);
    const Vec<D> vj = pj.velocity_at(s0);
    Vec<D> omega;
    if (auto s = detail::linear_contact_in<D>(xi, vi, xj, vj, eps, s1 - s0, &omega)) {
      ContactEvent<D> ev;
      ev.t = s0 + *s;
      ev.omega = omega;
      ev.i = pi.particle_id;
      ev.j = pj.particle_id;
      return ev;
    }
  }
  return std::nullopt;
}

template <int D>
double total_kinetic_energy_at(const TrajectorySet<D>& trajs, double t) {
  double e = 0.0;
  for (const auto& tr : trajs) e += kinetic_energy<D>(tr.velocity_at(t));
  return e;
}

template <int D>
Vec<D> total_momentum_at(const TrajectorySet<D>& trajs, double t) {
  Vec<D> p = Vec<D>::Zero();
  for (const auto& tr : trajs) p += tr.velocity_at(t);
  return p;
}

}  // namespace clustergas
