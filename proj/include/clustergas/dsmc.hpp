#pragma once

#include "clustergas/initial.hpp"
#include "clustergas/quadrature.hpp"
#include "clustergas/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace clustergas {

template <int D>
struct DsmcParams {
  std::size_t particles = 100000;  // computational particles M
  double cell_side = 0.05;         // delta_x, rounded to 1/m
  double time_step = 0.01;         // delta_t
  double horizon = 0.2;
  bool collisions = true;              // false: free transport reference mode
  double statistical_weight = 1.0;     // physical-per-computational ratio
  std::vector<double> sample_times;    // defaults to {horizon}
};

template <int D>
struct DsmcCellMoments {
  double density = 0.0;  // cell count / (M delta_x^d); 1 at uniform density
  Vec<D> mean_v = Vec<D>::Zero();
  double energy = 0.0;  // kinetic energy density in the cell
};

template <int D>
struct DsmcSample {
  double t = 0.0;
  std::vector<DsmcCellMoments<D>> cells;
  Vec<D> momentum = Vec<D>::Zero();  // per-particle mean
  double energy = 0.0;               // mean kinetic energy
  double fourth_moment = 0.0;        // mean |v|^4
  std::vector<double> mode_re;       // (1/M) sum cos(2 pi k x_1), k = 1..3
  std::vector<double> mode_im;       // -(1/M) sum sin(2 pi k x_1)
};

template <int D>
struct DsmcResult {
  std::vector<DsmcSample<D>> samples;
  std::uint64_t candidates = 0;
  std::uint64_t collisions = 0;
  int majorant_doublings = 0;
};

namespace detail {

template <int D>
std::size_t dsmc_cell_index(const Vec<D>& x, int m) {
  std::size_t idx = 0;
  for (int c = 0; c < D; ++c) {
    const int k = std::min(m - 1, static_cast<int>(std::floor(x[c] * m)));
    idx = idx * m + static_cast<std::size_t>(k);
  }
  return idx;
}

template <int D>
DsmcSample<D> dsmc_measure(double t, const std::vector<PhasePoint<D>>& parts, int m) {
  DsmcSample<D> s;
  s.t = t;
  std::size_t n_cells = 1;
  for (int c = 0; c < D; ++c) n_cells *= static_cast<std::size_t>(m);
  s.cells.resize(n_cells);
  std::vector<std::size_t> counts(n_cells, 0);
  const double M = static_cast<double>(parts.size());
  const double cell_volume = std::pow(1.0 / m, D);
  s.mode_re.assign(3, 0.0);
  s.mode_im.assign(3, 0.0);
  for (const auto& z : parts) {
    const std::size_t c = dsmc_cell_index<D>(z.x, m);
    ++counts[c];
    s.cells[c].mean_v += z.v;
    s.cells[c].energy += kinetic_energy<D>(z.v);
    s.momentum += z.v;
    const double e = kinetic_energy<D>(z.v);
    s.energy += e;
    s.fourth_moment += 4.0 * e * e;
    for (int k = 1; k <= 3; ++k) {
      s.mode_re[k - 1] += std::cos(2.0 * M_PI * k * z.x[0]);
      s.mode_im[k - 1] -= std::sin(2.0 * M_PI * k * z.x[0]);
    }
  }
  for (std::size_t c = 0; c < n_cells; ++c) {
    if (counts[c] > 0) s.cells[c].mean_v /= static_cast<double>(counts[c]);
    s.cells[c].density = static_cast<double>(counts[c]) / (M * cell_volume);
    s.cells[c].energy /= M * cell_volume;
  }
  s.momentum /= M;
  s.energy /= M;
  s.fourth_moment /= M;
  for (int k = 0; k < 3; ++k) {
    s.mode_re[k] /= M;
    s.mode_im[k] /= M;
  }
  return s;
}

}  // namespace detail

// Majorant (null-collision) DSMC for the hard-sphere Boltzmann equation:
// exact free transport plus Bird-style per-cell candidate counts against a
// running majorant rate kappa_d * 2 * vmax. A candidate whose true rate
// exceeds the majorant doubles it and the whole collision step is redone.
template <int D>
DsmcResult<D> dsmc_run(const InitialModel& model, const DsmcParams<D>& params, CounterRng& rng) {
  const int m = std::max(1, static_cast<int>(std::lround(1.0 / params.cell_side)));
  const std::size_t M = params.particles;
  std::vector<PhasePoint<D>> parts(M);
  double vmax = 0.0;
  for (auto& z : parts) {
    z = sample_f0<D>(model, rng);
    vmax = std::max(vmax, z.v.norm());
  }
  std::vector<double> sample_times = params.sample_times;
  if (sample_times.empty()) sample_times = {params.horizon};
  std::sort(sample_times.begin(), sample_times.end());

  DsmcResult<D> result;
  std::size_t n_cells = 1;
  for (int c = 0; c < D; ++c) n_cells *= static_cast<std::size_t>(m);
  std::vector<std::vector<std::uint32_t>> cells(n_cells);

  std::size_t next_sample = 0;
  const auto maybe_sample = [&](double t) {
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t + 1e-12) {
      result.samples.push_back(detail::dsmc_measure<D>(sample_times[next_sample], parts, m));
      ++next_sample;
    }
  };
  maybe_sample(0.0);

  const double dt = params.time_step;
  const double cell_volume = std::pow(1.0 / m, D);
  for (double t = 0.0; t < params.horizon - 1e-12;) {
    const double step = std::min(dt, params.horizon - t);
    for (auto& z : parts) z.x = wrap_position<D>(z.x + step * z.v);
    if (params.collisions && M > 1) {
      for (auto& c : cells) c.clear();
      for (std::uint32_t i = 0; i < M; ++i)
        cells[detail::dsmc_cell_index<D>(parts[i].x, m)].push_back(i);
      const std::vector<PhasePoint<D>> snapshot = parts;
      for (bool redo = true; redo;) {
        redo = false;
        std::uint64_t pass_candidates = 0, pass_collisions = 0;
        const double majorant = kappa_d(D) * 2.0 * vmax;
        for (std::size_t c = 0; c < n_cells && !redo; ++c) {
          const auto& occupants = cells[c];
          const double nc = static_cast<double>(occupants.size());
          if (nc < 2) continue;
          const double mean_cand =
              0.5 * nc * (nc - 1.0) / static_cast<double>(M) / cell_volume * majorant * step;
          const std::uint64_t n_cand = rng.poisson(mean_cand);
          pass_candidates += n_cand;
          for (std::uint64_t k = 0; k < n_cand; ++k) {
            const std::size_t a = static_cast<std::size_t>(rng.uniform() * nc);
            std::size_t b = static_cast<std::size_t>(rng.uniform() * (nc - 1.0));
            if (b >= a) ++b;
            auto& zi = parts[occupants[std::min(a, occupants.size() - 1)]];
            auto& zj = parts[occupants[std::min(b, occupants.size() - 1)]];
            const double rate = kappa_d(D) * (zi.v - zj.v).norm();
            if (rate > majorant) {
              vmax *= 2.0;
              ++result.majorant_doublings;
              if (result.majorant_doublings > 64)
                throw MajorantBreach("dsmc_run: runaway majorant doubling");
              parts = snapshot;
              redo = true;
              break;
            }
            if (rng.uniform() * majorant < rate) {
              const Vec<D> omega = rng.flux_weighted_direction<D>(zi.v - zj.v);
              auto [vi, vj] = scatter<D>(zi.v, zj.v, omega);
              zi.v = vi;
              zj.v = vj;
              vmax = std::max({vmax, zi.v.norm(), zj.v.norm()});
              ++pass_collisions;
            }
          }
        }
        if (!redo) {
          result.candidates += pass_candidates;
          result.collisions += pass_collisions;
        }
      }
    }
    t += step;
    maybe_sample(t);
  }
  return result;
}

}  // namespace clustergas
