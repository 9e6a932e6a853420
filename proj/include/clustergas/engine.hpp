#pragma once

#include "clustergas/initial.hpp"
#include "clustergas/trajectory.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace clustergas {

template <int D>
struct RunResult {
  TrajectorySet<D> trajectories;
  CollisionLog<D> log;
  std::size_t max_queue = 0;  // peak event-queue length
};

namespace detail {

// Shared collision bookkeeping: advance both partners to the contact time,
// nudge the pair to separation exactly eps along omega (drift control for
// long event chains), scatter, and log. Positions enter wrapped.
template <int D>
LoggedCollision<D> apply_collision(double t, double eps, int i, int j, Vec<D>& xi, Vec<D>& xj,
                                   Vec<D>& vi, Vec<D>& vj) {
  if (j < i) return apply_collision<D>(t, eps, j, i, xj, xi, vj, vi);
  const Vec<D> disp = torus_displacement<D>(xj, xi);  // x_i - x_j
  const Vec<D> omega = disp.normalized();
  const Vec<D> mid = wrap_position<D>(xj + 0.5 * disp);
  xi = wrap_position<D>(mid + (0.5 * eps) * omega);
  xj = wrap_position<D>(mid - (0.5 * eps) * omega);
  LoggedCollision<D> rec;
  rec.t = t;
  rec.i = i;
  rec.j = j;
  rec.omega = omega;
  rec.vi_pre = vi;
  rec.vj_pre = vj;
  auto [vi2, vj2] = scatter<D>(vi, vj, omega);
  vi = vi2;
  vj = vj2;
  rec.vi_post = vi;
  rec.vj_post = vj;
  return rec;
}

}  // namespace detail

// Exact event-driven hard-sphere flow on [0,T]. Collision and cell-crossing
// events share one time-ordered queue; stale events are recognised by
// per-particle version counters that advance only at collisions. Cell side is
// at least eps, so pair prediction over the 3^D neighbourhood is exhaustive,
// and pair horizons are capped at the partners' next cell crossings, which
// keeps the nearest-image root valid. Falls back to all-pair prediction with
// image scanning when the box is too coarse for cells (eps > 1/8).
template <int D>
class EventEngine {
 public:
  EventEngine(const Configuration<D>& config, double T) : eps_(config.eps), T_(T) {
    const int n = static_cast<int>(config.particles.size());
    states_.resize(n);
    for (int i = 0; i < n; ++i) {
      states_[i].x = config.particles[i].x;
      states_[i].v = config.particles[i].v;
      states_[i].t = 0.0;
      states_[i].version = 0;
    }
    const int by_eps = static_cast<int>(std::floor(1.0 / eps_));
    const int by_n = static_cast<int>(std::ceil(std::pow(std::max(n, 1), 1.0 / D)));
    m_ = std::min(by_eps, std::max(8, by_n));
    dense_ = m_ < 8;
    if (!dense_) {
      side_ = 1.0 / m_;
      cells_.resize(cell_count());
      for (int i = 0; i < n; ++i) {
        cell_of(states_[i].x, states_[i].cell);
        cells_[linear_cell(states_[i].cell)].push_back(i);
      }
    }
  }

  RunResult<D> run() {
    const int n = static_cast<int>(states_.size());
    RunResult<D> result;
    result.trajectories.resize(n);
    for (int i = 0; i < n; ++i) {
      result.trajectories[i].particle_id = i;
      result.trajectories[i].points.push_back({0.0, states_[i].x, states_[i].v});
    }
    if (n > 0) init_schedule();
    const std::size_t storm = 1000 * static_cast<std::size_t>(std::max(n, 1));
    while (!queue_.empty()) {
      result.max_queue = std::max(result.max_queue, queue_.size());
      Event ev = queue_.top();
      queue_.pop();
      if (ev.t > T_) break;
      if (ev.kind == Event::Collision) {
        if (states_[ev.i].version != ev.vi || states_[ev.j].version != ev.vj) continue;
        advance_to(ev.i, ev.t);
        advance_to(ev.j, ev.t);
        auto rec = detail::apply_collision<D>(ev.t, eps_, ev.i, ev.j, states_[ev.i].x,
                                              states_[ev.j].x, states_[ev.i].v, states_[ev.j].v);
        result.log.push_back(rec);
        if (result.log.size() > storm)
          throw EventStorm("event-driven run: event budget exceeded");
        ++states_[ev.i].version;
        ++states_[ev.j].version;
        result.trajectories[ev.i].points.push_back({ev.t, states_[ev.i].x, states_[ev.i].v});
        result.trajectories[ev.j].points.push_back({ev.t, states_[ev.j].x, states_[ev.j].v});
        if (dense_) {
          predict_dense(ev.i, ev.t);
          predict_dense(ev.j, ev.t);
        } else {
          schedule_crossing(ev.i, ev.t);
          schedule_crossing(ev.j, ev.t);
          predict_neighbourhood(ev.i, ev.t);
          predict_neighbourhood(ev.j, ev.t);
        }
      } else {  // cell crossing
        if (states_[ev.i].version != ev.vi) continue;
        advance_to(ev.i, ev.t);
        move_cell(ev.i, ev.dim, ev.dir);
        schedule_crossing(ev.i, ev.t);
        predict_neighbourhood(ev.i, ev.t);
      }
    }
    for (int i = 0; i < n; ++i) {
      advance_to(i, T_);
      result.trajectories[i].points.push_back({T_, states_[i].x, states_[i].v});
    }
    return result;
  }

 private:
  struct PState {
    Vec<D> x;
    Vec<D> v;
    double t = 0.0;
    std::uint32_t version = 0;
    std::array<int, D> cell{};
    double next_cross = std::numeric_limits<double>::infinity();
  };

  struct Event {
    double t;
    enum Kind : int { Collision = 0, Crossing = 1 } kind;
    int i;
    int j;  // -1 for crossings
    std::uint32_t vi, vj;
    int dim, dir;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      if (kind != o.kind) return kind > o.kind;
      if (i != o.i) return i > o.i;
      return j > o.j;
    }
  };

  std::size_t cell_count() const {
    std::size_t c = 1;
    for (int d = 0; d < D; ++d) c *= static_cast<std::size_t>(m_);
    return c;
  }

  void cell_of(const Vec<D>& x, std::array<int, D>& cell) const {
    for (int c = 0; c < D; ++c)
      cell[c] = std::min(m_ - 1, static_cast<int>(std::floor(x[c] * m_)));
  }

  std::size_t linear_cell(const std::array<int, D>& cell) const {
    std::size_t idx = 0;
    for (int c = 0; c < D; ++c) idx = idx * m_ + static_cast<std::size_t>(cell[c]);
    return idx;
  }

  void advance_to(int i, double t) {
    PState& s = states_[i];
    if (t > s.t) {
      s.x = wrap_position<D>(s.x + (t - s.t) * s.v);
      s.t = t;
    }
  }

  PhasePoint<D> state_at(int i, double t) const {
    const PState& s = states_[i];
    return {wrap_position<D>(s.x + (t - s.t) * s.v), s.v};
  }

  void move_cell(int i, int dim, int dir) {
    PState& s = states_[i];
    auto& cell = cells_[linear_cell(s.cell)];
    for (std::size_t k = 0; k < cell.size(); ++k)
      if (cell[k] == i) {
        cell[k] = cell.back();
        cell.pop_back();
        break;
      }
    s.cell[dim] = (s.cell[dim] + dir + m_) % m_;
    cells_[linear_cell(s.cell)].push_back(i);
  }

  void schedule_crossing(int i, double now) {
    PState& s = states_[i];
    double best = std::numeric_limits<double>::infinity();
    int bdim = -1, bdir = 0;
    for (int c = 0; c < D; ++c) {
      const double vc = s.v[c];
      if (vc == 0.0) continue;
      const int dir = vc > 0.0 ? 1 : -1;
      const double boundary = dir > 0 ? (s.cell[c] + 1) * side_ : s.cell[c] * side_;
      double dist = dir > 0 ? boundary - s.x[c] : s.x[c] - boundary;
      if (dist > 0.5) dist -= 1.0;  // wrap-adjacent rounding
      if (dist < -0.5) dist += 1.0;
      if (dist < 0.0) dist = 0.0;
      const double dt = dist / std::abs(vc);
      if (dt < best) {
        best = dt;
        bdim = c;
        bdir = dir;
      }
    }
    s.next_cross = bdim >= 0 ? now + best : std::numeric_limits<double>::infinity();
    if (bdim >= 0 && s.next_cross <= T_) {
      queue_.push(Event{s.next_cross, Event::Crossing, i, -1, s.version, 0, bdim, bdir});
    }
  }

  void predict_pair(int i, int j, double now) {
    const double window = std::min({states_[i].next_cross, states_[j].next_cross, T_});
    const double horizon = window - now;
    if (horizon <= 0.0) return;
    const auto ev =
        pair_collision_time<D>(state_at(i, now), state_at(j, now), eps_, horizon, i, j);
    if (ev) {
      queue_.push(Event{now + ev->t, Event::Collision, i, j, states_[i].version,
                        states_[j].version, 0, 0});
    }
  }

  void predict_pair_dense(int i, int j, double now) {
    const double horizon = T_ - now;
    if (horizon <= 0.0) return;
    const auto ev =
        pair_collision_time_images<D>(state_at(i, now), state_at(j, now), eps_, horizon, i, j);
    if (ev) {
      queue_.push(Event{now + ev->t, Event::Collision, i, j, states_[i].version,
                        states_[j].version, 0, 0});
    }
  }

  void predict_dense(int i, double now) {
    for (int j = 0; j < static_cast<int>(states_.size()); ++j)
      if (j != i) predict_pair_dense(std::min(i, j), std::max(i, j), now);
  }

  template <typename Fn>
  void for_each_neighbour(const std::array<int, D>& cell, Fn&& fn) const {
    std::array<int, D> nb{};
    for_each_neighbour_rec(cell, nb, 0, fn);
  }

  template <typename Fn>
  void for_each_neighbour_rec(const std::array<int, D>& cell, std::array<int, D>& nb, int dim,
                              Fn&& fn) const {
    if (dim == D) {
      for (int p : cells_[linear_cell(nb)]) fn(p);
      return;
    }
    for (int o = -1; o <= 1; ++o) {
      nb[dim] = (cell[dim] + o + m_) % m_;
      for_each_neighbour_rec(cell, nb, dim + 1, fn);
    }
  }

  void predict_neighbourhood(int i, double now) {
    for_each_neighbour(states_[i].cell, [&](int j) {
      if (j != i) predict_pair(std::min(i, j), std::max(i, j), now);
    });
  }

  void init_schedule() {
    const int n = static_cast<int>(states_.size());
    if (dense_) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) predict_pair_dense(i, j, 0.0);
      return;
    }
    for (int i = 0; i < n; ++i) schedule_crossing(i, 0.0);
    for (int i = 0; i < n; ++i) {
      for_each_neighbour(states_[i].cell, [&](int j) {
        if (j > i) predict_pair(i, j, 0.0);
      });
    }
  }

  double eps_;
  double T_;
  int m_ = 1;
  double side_ = 1.0;
  bool dense_ = false;
  std::vector<PState> states_;
  std::vector<std::vector<int>> cells_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
};

template <int D>
RunResult<D> run(const Configuration<D>& config, double T) {
  EventEngine<D> engine(config, T);
  return engine.run();
}

// Quadratic-time reference: after every event the earliest contact among all
// O(N^2) pairs is recomputed from scratch with the image-scanning solver. No
// spatial index, no event queue. Serves as the validation oracle for run().
template <int D>
RunResult<D> naive_run(const Configuration<D>& config, double T) {
  const int n = static_cast<int>(config.particles.size());
  RunResult<D> result;
  result.trajectories.resize(n);
  std::vector<Vec<D>> x(n), v(n);
  for (int i = 0; i < n; ++i) {
    x[i] = config.particles[i].x;
    v[i] = config.particles[i].v;
    result.trajectories[i].particle_id = i;
    result.trajectories[i].points.push_back({0.0, x[i], v[i]});
  }
  const std::size_t storm = 1000 * static_cast<std::size_t>(std::max(n, 1));
  double t = 0.0;
  while (t < T) {
    std::optional<ContactEvent<D>> best;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const auto ev =
            pair_collision_time_images<D>({x[i], v[i]}, {x[j], v[j]}, config.eps, T - t, i, j);
        if (ev && (!best || ev->t < best->t ||
                   (ev->t == best->t && (ev->i < best->i || (ev->i == best->i && ev->j < best->j)))))
          best = ev;
      }
    if (!best) break;
    const double tc = t + best->t;
    for (int i = 0; i < n; ++i) x[i] = wrap_position<D>(x[i] + best->t * v[i]);
    auto rec = detail::apply_collision<D>(tc, config.eps, best->i, best->j, x[best->i],
                                          x[best->j], v[best->i], v[best->j]);
    result.log.push_back(rec);
    if (result.log.size() > storm) throw EventStorm("naive run: event budget exceeded");
    result.trajectories[best->i].points.push_back({tc, x[best->i], v[best->i]});
    result.trajectories[best->j].points.push_back({tc, x[best->j], v[best->j]});
    t = tc;
  }
  for (int i = 0; i < n; ++i) {
    x[i] = wrap_position<D>(x[i] + (T - t) * v[i]);
    result.trajectories[i].points.push_back({T, x[i], v[i]});
  }
  return result;
}

}  // namespace clustergas
