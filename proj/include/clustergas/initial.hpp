#pragma once

#include "clustergas/geometry.hpp"
#include "clustergas/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace clustergas {

// Spatial factor of f^0: uniform, or 1 + a cos(2 pi x_1) with |a| < 1.
struct SpatialProfile {
  enum class Kind { Uniform, Cosine };
  Kind kind = Kind::Uniform;
  double a = 0.0;

  template <int D>
  double value(const Vec<D>& x) const {
    if (kind == Kind::Uniform) return 1.0;
    return 1.0 + a * std::cos(2.0 * M_PI * x[0]);
  }
  double max_value() const { return kind == Kind::Uniform ? 1.0 : 1.0 + std::abs(a); }
};

inline double maxwellian_density(double beta, double speed_sq, int dim) {
  return std::pow(beta / (2.0 * M_PI), 0.5 * dim) * std::exp(-0.5 * beta * speed_sq);
}

struct InitialModel {
  double beta = 1.0;
  SpatialProfile profile;
  double envelope_c0 = 1.0;  // f^0 <= C0 M_beta pointwise

  static InitialModel uniform(double beta) {
    InitialModel m;
    m.beta = beta;
    m.profile.kind = SpatialProfile::Kind::Uniform;
    m.envelope_c0 = 1.0;
    return m;
  }
  static InitialModel cosine(double beta, double a) {
    InitialModel m;
    m.beta = beta;
    m.profile.kind = SpatialProfile::Kind::Cosine;
    m.profile.a = a;
    m.envelope_c0 = 1.0 + std::abs(a);
    return m;
  }

  // Profile positivity, unit mass (trapezoid quadrature to 1e-6) and the
  // Gaussian envelope on a phase-space test grid.
  void validate() const {
    if (beta <= 0.0) throw ConfigError("initial model: beta must be positive");
    if (profile.kind == SpatialProfile::Kind::Cosine && std::abs(profile.a) >= 1.0)
      throw ConfigError("initial model: cosine amplitude must satisfy |a| < 1");
    const int n = 4096;
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      Vec<2> x;
      x << (i + 0.5) / n, 0.0;
      const double p = profile.value<2>(x);
      if (p < 0.0) throw ConfigError("initial model: profile is negative");
      mass += p / n;
    }
    if (std::abs(mass - 1.0) > 1e-6) throw ConfigError("initial model: profile mass is not 1");
    for (int i = 0; i < 64; ++i) {
      Vec<2> x;
      x << i / 64.0, 0.0;
      if (profile.value<2>(x) > envelope_c0 * (1.0 + 1e-12))
        throw ConfigError("initial model: envelope constant C0 too small");
    }
  }

  template <int D>
  double evaluate_f0(const PhasePoint<D>& z) const {
    return profile.value<D>(z.x) * maxwellian_density(beta, z.v.squaredNorm(), D);
  }
};

template <int D>
Vec<D> sample_maxwellian(double beta, CounterRng& rng) {
  const double s = 1.0 / std::sqrt(beta);
  Vec<D> v;
  for (int c = 0; c < D; ++c) v[c] = s * rng.normal();
  return v;
}

template <int D>
Vec<D> sample_profile_position(const SpatialProfile& profile, CounterRng& rng) {
  Vec<D> x;
  for (int c = 0; c < D; ++c) x[c] = rng.uniform();
  if (profile.kind == SpatialProfile::Kind::Cosine) {
    const double bound = profile.max_value();
    for (;;) {
      x[0] = rng.uniform();
      if (rng.uniform() * bound <= profile.template value<D>(x)) break;
    }
  }
  return x;
}

template <int D>
PhasePoint<D> sample_f0(const InitialModel& model, CounterRng& rng) {
  return {sample_profile_position<D>(model.profile, rng), sample_maxwellian<D>(model.beta, rng)};
}

template <int D>
struct Configuration {
  std::vector<PhasePoint<D>> particles;
  double eps = 0.0;
};

template <int D>
bool satisfies_hard_core(const Configuration<D>& config) {
  const std::size_t n = config.particles.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (torus_distance<D>(config.particles[i].x, config.particles[j].x) < config.eps)
        return false;
  return true;
}

namespace detail {

// Occupancy grid for O(N) exclusion checks; cell side >= eps.
template <int D>
class ExclusionGrid {
 public:
  explicit ExclusionGrid(double eps)
      : eps_(eps), m_(std::clamp(static_cast<int>(std::floor(1.0 / eps)), 1, 64)) {
    cells_.resize(cell_count());
  }

  void clear() {
    for (auto& c : cells_) c.clear();
    points_.clear();
  }

  bool conflicts(const Vec<D>& x) const {
    if (m_ < 3) {  // neighbourhood would wrap onto itself; fall back to all pairs
      for (const auto& p : points_)
        if (torus_distance<D>(p, x) < eps_) return true;
      return false;
    }
    int base[D];
    for (int c = 0; c < D; ++c)
      base[c] = std::min(m_ - 1, static_cast<int>(std::floor(x[c] * m_)));
    int offset[D];
    return scan_neighbours(x, base, offset, 0);
  }

  void insert(const Vec<D>& x) {
    points_.push_back(x);
    if (m_ >= 3) cells_[cell_index(x)].push_back(points_.size() - 1);
  }

 private:
  std::size_t cell_count() const {
    std::size_t n = 1;
    for (int c = 0; c < D; ++c) n *= static_cast<std::size_t>(m_);
    return n;
  }
  std::size_t cell_index(const Vec<D>& x) const {
    std::size_t idx = 0;
    for (int c = 0; c < D; ++c) {
      const int k = std::min(m_ - 1, static_cast<int>(std::floor(x[c] * m_)));
      idx = idx * m_ + static_cast<std::size_t>(k);
    }
    return idx;
  }
  bool scan_neighbours(const Vec<D>& x, const int* base, int* offset, int dim) const {
    if (dim == D) {
      std::size_t idx = 0;
      for (int c = 0; c < D; ++c) {
        int k = (base[c] + offset[c] + m_) % m_;
        idx = idx * m_ + static_cast<std::size_t>(k);
      }
      for (std::size_t p : cells_[idx])
        if (torus_distance<D>(points_[p], x) < eps_) return true;
      return false;
    }
    for (int o = -1; o <= 1; ++o) {
      offset[dim] = o;
      if (scan_neighbours(x, base, offset, dim + 1)) return true;
    }
    return false;
  }

  double eps_;
  int m_;
  std::vector<std::vector<std::size_t>> cells_;
  std::vector<Vec<D>> points_;
};

}  // namespace detail

enum class SamplerMode { ExactRejection, Sequential };

struct SamplerStats {
  std::uint64_t config_attempts = 0;    // whole-configuration draws (exact mode)
  std::uint64_t truncated_draws = 0;    // Poisson draws beyond N_max, redrawn
  std::uint64_t particle_retries = 0;   // per-particle rejections (sequential mode)
};

inline SamplerMode parse_sampler_mode(const std::string& s) {
  if (s == "exact") return SamplerMode::ExactRejection;
  if (s == "sequential") return SamplerMode::Sequential;
  throw ConfigError("unknown sampler mode: " + s);
}

// Draws a time-zero configuration from the grand-canonical hard-core measure.
// Exact-rejection mode samples the measure exactly (accept the whole Poisson
// configuration iff exclusion holds); sequential mode inserts particles one by
// one, which is biased by O(mu^2 eps^d) but usable where exact rejection is
// hopeless.
template <int D>
Configuration<D> sample_initial_config(double mu, double eps, const InitialModel& model,
                                       SamplerMode mode, CounterRng& rng,
                                       SamplerStats* stats = nullptr) {
  const std::uint64_t n_max =
      static_cast<std::uint64_t>(std::ceil(mu + 10.0 * std::sqrt(std::max(mu, 1.0))));
  const auto draw_count = [&]() {
    for (;;) {
      const std::uint64_t n = rng.poisson(mu);
      if (n <= n_max) return n;
      if (stats) ++stats->truncated_draws;
    }
  };

  Configuration<D> config;
  config.eps = eps;
  detail::ExclusionGrid<D> grid(eps);

  if (mode == SamplerMode::ExactRejection) {
    constexpr std::uint64_t kMaxAttempts = 1000000;
    for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
      if (stats) ++stats->config_attempts;
      const std::uint64_t n = draw_count();
      config.particles.clear();
      grid.clear();
      bool ok = true;
      for (std::uint64_t p = 0; p < n; ++p) {
        const PhasePoint<D> z = sample_f0<D>(model, rng);
        if (grid.conflicts(z.x)) {
          ok = false;
          break;
        }
        grid.insert(z.x);
        config.particles.push_back(z);
      }
      if (ok) return config;
    }
    throw PackingFailure("exact-rejection sampler: acceptance too small; use sequential mode");
  }

  // Sequential mode.
  constexpr std::uint64_t kRetryCap = 10000;
  const std::uint64_t n = draw_count();
  for (std::uint64_t p = 0; p < n; ++p) {
    bool placed = false;
    for (std::uint64_t r = 0; r < kRetryCap; ++r) {
      const PhasePoint<D> z = sample_f0<D>(model, rng);
      if (!grid.conflicts(z.x)) {
        grid.insert(z.x);
        config.particles.push_back(z);
        placed = true;
        break;
      }
      if (stats) ++stats->particle_retries;
    }
    if (!placed) throw PackingFailure("sequential sampler: particle retry cap exceeded");
  }
  return config;
}

inline double default_activity(double eps, int dim) {
  return std::pow(eps, -(dim - 1));  // mu_eps = eps^{1-d}
}

}  // namespace clustergas
