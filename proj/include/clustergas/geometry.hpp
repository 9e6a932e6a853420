#pragma once

#include "clustergas/common.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace clustergas {

// Radial speeds below this at contact count as grazing and produce no collision.
inline constexpr double kGrazingTol = 1e-12;

template <int D>
struct PhasePoint {
  Vec<D> x;  // position in [0,1)^D
  Vec<D> v;  // velocity, torus lengths per unit time
};

template <int D>
struct ContactEvent {
  double t = 0.0;
  Vec<D> omega = Vec<D>::Zero();  // unit vector along x_i - x_j at contact
  int i = 0;
  int j = 0;
};

inline double wrap_coordinate(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y = 0.0;  // rounding can land exactly on 1
  return y;
}

template <int D>
Vec<D> wrap_position(const Vec<D>& x) {
  Vec<D> y;
  for (int c = 0; c < D; ++c) y[c] = wrap_coordinate(x[c]);
  return y;
}

// Representative of b - a with each component in [-1/2, 1/2); the antipodal
// tie is broken toward -1/2 so the result is a deterministic function of (a,b).
template <int D>
Vec<D> torus_displacement(const Vec<D>& a, const Vec<D>& b) {
  Vec<D> d;
  for (int c = 0; c < D; ++c) {
    double r = b[c] - a[c];
    r -= std::floor(r + 0.5);
    if (r < -0.5) r += 1.0;
    if (r >= 0.5) r -= 1.0;
    d[c] = r;
  }
  return d;
}

template <int D>
double torus_distance(const Vec<D>& a, const Vec<D>& b) {
  return torus_displacement(a, b).norm();
}

template <int D>
PhasePoint<D> free_flight(const PhasePoint<D>& z, double dt) {
  return {wrap_position<D>(z.x + dt * z.v), z.v};
}

template <int D>
std::pair<Vec<D>, Vec<D>> scatter(const Vec<D>& vi, const Vec<D>& vj, const Vec<D>& omega) {
  const double c = (vi - vj).dot(omega);
  return {vi - c * omega, vj + c * omega};
}

// Earliest contact of the pair in (0, horizon], nearest periodic image only.
// The caller guarantees that within the horizon no other image can reach
// distance eps (the event engine enforces this through its cell geometry; see
// the image-scanning variant below for an unconditional solver).
//
// Contacts with radial speed below kGrazingTol are ignored.
template <int D>
std::optional<ContactEvent<D>> pair_collision_time(const PhasePoint<D>& zi,
                                                   const PhasePoint<D>& zj, double eps,
                                                   double horizon, int i = 0, int j = 1) {
  const Vec<D> r0 = torus_displacement<D>(zj.x, zi.x);  // x_i - x_j
  const Vec<D> u = zi.v - zj.v;
  const double c = r0.squaredNorm() - eps * eps;
  if (c < -2e-9 * eps * eps) {
    throw CorruptState("pair_collision_time: initial separation below diameter");
  }
  const double a = u.squaredNorm();
  const double b = r0.dot(u);
  if (a <= 0.0 || b >= 0.0) return std::nullopt;  // relative rest or receding
  const double disc = b * b - a * c;
  if (disc <= 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  if (sq < kGrazingTol * eps) return std::nullopt;  // grazing contact
  const double t = c / (-b + sq);                   // stable first root
  if (t <= 0.0 || t > horizon) return std::nullopt;
  ContactEvent<D> ev;
  ev.t = t;
  ev.omega = (r0 + t * u).normalized();
  ev.i = i;
  ev.j = j;
  return ev;
}

// Unconditional variant scanning every periodic image reachable within the
// horizon. Used by the quadratic-time reference engine and wherever no cell
// geometry bounds the swept range.
template <int D>
std::optional<ContactEvent<D>> pair_collision_time_images(const PhasePoint<D>& zi,
                                                          const PhasePoint<D>& zj, double eps,
                                                          double horizon, int i = 0, int j = 1) {
  const Vec<D> r0 = torus_displacement<D>(zj.x, zi.x);
  const Vec<D> u = zi.v - zj.v;
  if (r0.squaredNorm() < eps * eps * (1.0 - 2e-9)) {
    throw CorruptState("pair_collision_time_images: initial separation below diameter");
  }
  const double a = u.squaredNorm();
  if (a <= 0.0) return std::nullopt;
  const double reach = std::sqrt(a) * horizon + r0.norm() + eps;
  const int K = static_cast<int>(std::floor(reach)) + 1;
  std::optional<ContactEvent<D>> best;
  Vec<D> k = Vec<D>::Zero();
  const auto consider = [&](const Vec<D>& offset) {
    const Vec<D> r = r0 + offset;
    const double c = r.squaredNorm() - eps * eps;
    const double b = r.dot(u);
    if (b >= 0.0) return;
    const double disc = b * b - a * c;
    if (disc <= 0.0) return;
    const double sq = std::sqrt(disc);
    if (sq < kGrazingTol * eps) return;
    const double t = c / (-b + sq);
    if (t <= 0.0 || t > horizon) return;
    if (!best || t < best->t) {
      ContactEvent<D> ev;
      ev.t = t;
      ev.omega = (r + t * u).normalized();
      ev.i = i;
      ev.j = j;
      best = ev;
    }
  };
  if constexpr (D == 2) {
    for (int k0 = -K; k0 <= K; ++k0)
      for (int k1 = -K; k1 <= K; ++k1) {
        k << k0, k1;
        consider(k);
      }
  } else {
    for (int k0 = -K; k0 <= K; ++k0)
      for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = -K; k2 <= K; ++k2) {
          k << k0, k1, k2;
          consider(k);
        }
  }
  return best;
}

template <int D>
double kinetic_energy(const Vec<D>& v) {
  return 0.5 * v.squaredNorm();
}

}  // namespace clustergas
