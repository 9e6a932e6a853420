#pragma once

#include "clustergas/cluster.hpp"
#include "clustergas/estimator.hpp"
#include "clustergas/initial.hpp"
#include "clustergas/quadrature.hpp"
#include "clustergas/trees.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace clustergas {

// Limiting cluster path: decorated tree graph plus the realized member paths.
// Members free-stream between the ordered collision times; velocities change
// only by scattering at those times.
template <int D>
struct LimitCluster {
  struct Member {
    int id = 0;  // global particle label
    Vec<D> x = Vec<D>::Zero();
    Vec<D> v = Vec<D>::Zero();
    std::vector<Breakpoint<D>> history;  // (t, x, v) at 0 and at scatterings
  };
  std::vector<Member> members;
  std::vector<std::pair<int, int>> edges;  // global ids, clustering order
  std::vector<double> times;               // strictly increasing
  std::vector<Vec<D>> omegas;
  Vec<D> root = Vec<D>::Zero();  // circular mean of the t=0 positions
  double t_state = 0.0;          // members are synchronized at this time

  int size() const { return static_cast<int>(members.size()); }
  double formed_at() const { return times.empty() ? 0.0 : times.back(); }
  double energy() const {
    double e = 0.0;
    for (const auto& mb : members) e += kinetic_energy<D>(mb.v);
    return e;
  }

  static LimitCluster singleton(int id, const PhasePoint<D>& z) {
    LimitCluster c;
    Member mb;
    mb.id = id;
    mb.x = z.x;
    mb.v = z.v;
    mb.history.push_back({0.0, z.x, z.v});
    c.members.push_back(mb);
    c.root = z.x;
    return c;
  }

  void advance_to(double t) {
    if (t <= t_state) return;
    for (auto& mb : members) mb.x = wrap_position<D>(mb.x + (t - t_state) * mb.v);
    t_state = t;
  }

  const Member* find_member(int id) const {
    for (const auto& mb : members)
      if (mb.id == id) return &mb;
    return nullptr;
  }
};

namespace detail {

template <int D>
std::size_t coag_cell_index(const Vec<D>& x, int m) {
  std::size_t idx = 0;
  for (int c = 0; c < D; ++c) {
    const int k = std::min(m - 1, static_cast<int>(std::floor(x[c] * m)));
    idx = idx * m + static_cast<std::size_t>(k);
  }
  return idx;
}

// Componentwise circular mean; the root is translation bookkeeping only.
template <int D>
Vec<D> torus_mean(const std::vector<Vec<D>>& xs) {
  Vec<D> mean = Vec<D>::Zero();
  for (int c = 0; c < D; ++c) {
    double s = 0.0, co = 0.0;
    for (const auto& x : xs) {
      s += std::sin(2.0 * M_PI * x[c]);
      co += std::cos(2.0 * M_PI * x[c]);
    }
    mean[c] = wrap_coordinate(std::atan2(s, co) / (2.0 * M_PI));
  }
  return mean;
}

}  // namespace detail

// Merges two limit clusters through a collision of members i (of a) and j
// (of b) at time t with deflection omega: reordered union of collision times
// plus t, aggregated tree with the new edge, recomputed root, velocities of
// i and j scattered. Symmetric in (a, b).
template <int D>
LimitCluster<D> merge_clusters(const LimitCluster<D>& a, const LimitCluster<D>& b, int i, int j,
                               double t, const Vec<D>& omega) {
  for (double tau : a.times)
    if (tau >= t) throw TimeOrderViolation("merge_clusters: input collision time beyond merge");
  for (double tau : b.times)
    if (tau >= t) throw TimeOrderViolation("merge_clusters: input collision time beyond merge");
  LimitCluster<D> merged = a;
  merged.advance_to(t);
  LimitCluster<D> bb = b;
  bb.advance_to(t);
  merged.members.insert(merged.members.end(), bb.members.begin(), bb.members.end());

  // Reordered union of the collision decorations plus the new edge.
  std::vector<std::pair<int, int>> edges;
  std::vector<double> times;
  std::vector<Vec<D>> omegas;
  std::size_t ia = 0, ib = 0;
  while (ia < a.times.size() || ib < b.times.size()) {
    const bool take_a = ib >= b.times.size() || (ia < a.times.size() && a.times[ia] <= b.times[ib]);
    if (take_a) {
      edges.push_back(a.edges[ia]);
      times.push_back(a.times[ia]);
      omegas.push_back(a.omegas[ia]);
      ++ia;
    } else {
      edges.push_back(b.edges[ib]);
      times.push_back(b.times[ib]);
      omegas.push_back(b.omegas[ib]);
      ++ib;
    }
  }
  edges.emplace_back(i, j);
  times.push_back(t);
  omegas.push_back(omega);
  merged.edges = std::move(edges);
  merged.times = std::move(times);
  merged.omegas = std::move(omegas);

  typename LimitCluster<D>::Member* mi = nullptr;
  typename LimitCluster<D>::Member* mj = nullptr;
  for (auto& mb : merged.members) {
    if (mb.id == i) mi = &mb;
    if (mb.id == j) mj = &mb;
  }
  auto [vi, vj] = scatter<D>(mi->v, mj->v, omega);
  mi->v = vi;
  mj->v = vj;
  mi->history.push_back({t, mi->x, mi->v});
  mj->history.push_back({t, mj->x, mj->v});

  std::vector<Vec<D>> initial;
  for (const auto& mb : merged.members) initial.push_back(mb.history.front().x);
  merged.root = detail::torus_mean<D>(initial);
  return merged;
}

template <int D>
struct CoagulationParams {
  std::size_t particles = 100000;  // M
  double cell_side = 0.05;         // mollification delta_x, rounded to 1/m
  double time_step = 0.01;
  double horizon = 0.2;
  bool kernel_on = true;  // false: pure free transport
  std::vector<double> sample_times;
};

struct SizeLawSample {
  double t = 0.0;
  Histogram sizes;
  double largest_fraction = 0.0;
  double mean_size = 0.0;
  std::uint64_t total_particles = 0;
  double total_energy = 0.0;
};

template <int D>
struct CoagulationResult {
  std::vector<SizeLawSample> samples;
  std::vector<std::pair<double, std::uint64_t>> merge_events;  // per-step counts
  int majorant_doublings = 0;
};

// Marcus-Lushnikov dynamics on limit clusters: members free-stream; each
// unordered particle pair from distinct clusters sharing a mollification cell
// merges at rate (1/M) delta_x^{-d} kappa_d |v_i - v_j|, with omega drawn
// proportional to (v_rel . omega)_+. Candidates are thinned per cell against
// a running majorant; a breach doubles the majorant and redraws the step's
// candidates before any merge is applied.
template <int D>
CoagulationResult<D> coagulation_run(const InitialModel& model,
                                     const CoagulationParams<D>& params, CounterRng& rng) {
  const int m = std::max(1, static_cast<int>(std::lround(1.0 / params.cell_side)));
  const std::size_t M = params.particles;
  std::vector<LimitCluster<D>> clusters;
  clusters.reserve(M);
  std::vector<int> cluster_of(M);
  double vmax = 0.0;
  for (std::size_t p = 0; p < M; ++p) {
    const PhasePoint<D> z = sample_f0<D>(model, rng);
    clusters.push_back(LimitCluster<D>::singleton(static_cast<int>(p), z));
    cluster_of[p] = static_cast<int>(p);
    vmax = std::max(vmax, z.v.norm());
  }

  std::vector<double> sample_times = params.sample_times;
  if (sample_times.empty()) sample_times = {params.horizon};
  std::sort(sample_times.begin(), sample_times.end());

  CoagulationResult<D> result;
  std::size_t n_cells = 1;
  for (int c = 0; c < D; ++c) n_cells *= static_cast<std::size_t>(m);
  const double cell_volume = std::pow(1.0 / m, D);

  const auto measure = [&](double t) {
    SizeLawSample s;
    s.t = t;
    std::uint64_t total = 0;
    std::uint64_t largest = 0;
    std::uint64_t count = 0;
    for (const auto& cl : clusters) {
      if (cl.members.empty()) continue;
      ++count;
      const std::uint64_t sz = cl.members.size();
      s.sizes.add(static_cast<long long>(sz));
      total += sz;
      largest = std::max(largest, sz);
      s.total_energy += cl.energy();
    }
    s.total_particles = total;
    s.largest_fraction = static_cast<double>(largest) / static_cast<double>(total);
    s.mean_size = static_cast<double>(total) / static_cast<double>(count);
    return s;
  };

  std::size_t next_sample = 0;
  const auto maybe_sample = [&](double t) {
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t + 1e-12) {
      result.samples.push_back(measure(sample_times[next_sample]));
      ++next_sample;
    }
  };
  maybe_sample(0.0);

  struct Candidate {
    double tau;
    int pi, pj;  // particle ids
    double accept_u;
  };
  std::vector<std::vector<std::uint32_t>> cells(n_cells);

  for (double t = 0.0; t < params.horizon - 1e-12;) {
    const double step = std::min(params.time_step, params.horizon - t);
    for (auto& cl : clusters) cl.advance_to(t);
    std::uint64_t merges_this_step = 0;
    if (params.kernel_on && M > 1) {
      for (auto& c : cells) c.clear();
      std::vector<const Vec<D>*> pos(M);
      std::vector<const Vec<D>*> vel(M);
      for (const auto& cl : clusters)
        for (const auto& mb : cl.members) {
          pos[mb.id] = &mb.x;
          vel[mb.id] = &mb.v;
        }
      for (std::size_t p = 0; p < M; ++p)
        cells[detail::coag_cell_index<D>(*pos[p], m)].push_back(static_cast<std::uint32_t>(p));

      // Two passes: candidates are drawn and breach-checked against the
      // step-start velocities before any merge mutates the state.
      std::vector<Candidate> cands;
      for (bool redo = true; redo;) {
        redo = false;
        cands.clear();
        const double majorant = kappa_d(D) * 2.0 * vmax;
        for (std::size_t c = 0; c < n_cells && !redo; ++c) {
          const auto& occ = cells[c];
          const double nc = static_cast<double>(occ.size());
          if (nc < 2) continue;
          const double mean_cand =
              0.5 * nc * (nc - 1.0) / static_cast<double>(M) / cell_volume * majorant * step;
          const std::uint64_t n_cand = rng.poisson(mean_cand);
          for (std::uint64_t k = 0; k < n_cand; ++k) {
            const std::size_t a = std::min(static_cast<std::size_t>(rng.uniform() * nc),
                                           occ.size() - 1);
            std::size_t b = std::min(static_cast<std::size_t>(rng.uniform() * (nc - 1.0)),
                                     occ.size() - 2);
            if (b >= a) ++b;
            const int pi = static_cast<int>(occ[a]);
            const int pj = static_cast<int>(occ[b]);
            const double rate = kappa_d(D) * (*vel[pi] - *vel[pj]).norm();
            if (rate > majorant) {
              vmax *= 2.0;
              ++result.majorant_doublings;
              if (result.majorant_doublings > 64)
                throw MajorantBreach("coagulation_run: runaway majorant doubling");
              redo = true;
              break;
            }
            Candidate cand;
            cand.tau = t + rng.uniform() * step;
            cand.pi = pi;
            cand.pj = pj;
            cand.accept_u = rng.uniform() * majorant;
            if (cand.accept_u < rate) cands.push_back(cand);
          }
        }
      }
      std::sort(cands.begin(), cands.end(),
                [](const Candidate& x, const Candidate& y) { return x.tau < y.tau; });
      for (const auto& cand : cands) {
        const int ca = cluster_of[cand.pi];
        const int cb = cluster_of[cand.pj];
        if (ca == cb) continue;  // merged earlier this step, or same cluster
        LimitCluster<D>& A = clusters[ca];
        LimitCluster<D>& B = clusters[cb];
        A.advance_to(cand.tau);
        B.advance_to(cand.tau);
        const auto* mi = A.find_member(cand.pi);
        const auto* mj = B.find_member(cand.pj);
        const Vec<D> vrel = mi->v - mj->v;
        if (vrel.norm() <= 0.0) continue;
        const Vec<D> omega = rng.flux_weighted_direction<D>(vrel);
        LimitCluster<D> merged = merge_clusters<D>(A, B, cand.pi, cand.pj, cand.tau, omega);
        clusters[ca] = std::move(merged);
        clusters[cb].members.clear();
        for (const auto& mb : clusters[ca].members) cluster_of[mb.id] = ca;
        for (const auto& mb : clusters[ca].members) vmax = std::max(vmax, mb.v.norm());
        ++merges_this_step;
      }
    }
    t += step;
    result.merge_events.emplace_back(t, merges_this_step);
    maybe_sample(t);
  }
  return result;
}

// Cluster-size law of an MD partition; mergeable across runs, to be
// normalized by mu_eps (the coagulation samples carry their own histograms,
// normalized by M).
template <int D>
struct SizeLaw {
  Histogram sizes;
  std::map<long long, Estimator> energy_by_size;

  void merge(const SizeLaw& o) {
    sizes.merge(o.sizes);
    for (const auto& [k, est] : o.energy_by_size) energy_by_size[k].merge(est);
  }
};

template <int D>
SizeLaw<D> cluster_size_law(const std::vector<ClusterPath<D>>& paths) {
  SizeLaw<D> law;
  for (const auto& p : paths) {
    law.sizes.add(p.size());
    law.energy_by_size[p.size()].update(p.energy);
  }
  return law;
}

}  // namespace clustergas
