#pragma once

#include "clustergas/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace clustergas {

// Philox4x32-10 counter-based generator. A stream is (seed, stream_id); the
// 128-bit counter is split as (block index, stream id), so distinct stream ids
// never share counter blocks and ensembles can hand out one stream per run.
class CounterRng {
 public:
  CounterRng() : CounterRng(0, 0) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_id_(stream_id) {}

  std::uint64_t seed_lo() const { return key_[0] | (static_cast<std::uint64_t>(key_[1]) << 32); }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform double in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0,1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Exact Poisson by product-of-uniforms, chunked so exp(-mean) stays normal.
  std::uint64_t poisson(double mean) {
    std::uint64_t n = 0;
    while (mean > 60.0) {
      n += poisson_small(60.0);
      mean -= 60.0;
    }
    return n + poisson_small(mean);
  }

  template <int D>
  Vec<D> uniform_on_sphere() {
    Vec<D> w;
    if constexpr (D == 2) {
      const double a = 2.0 * M_PI * uniform();
      w << std::cos(a), std::sin(a);
    } else {
      static_assert(D == 3, "dimension must be 2 or 3");
      const double z = uniform(-1.0, 1.0);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = 2.0 * M_PI * uniform();
      w << r * std::cos(a), r * std::sin(a), z;
    }
    return w;
  }

  // Unit vector with density proportional to (axis . w)_+ on the hemisphere.
  template <int D>
  Vec<D> flux_weighted_direction(const Vec<D>& axis) {
    const Vec<D> e = axis.normalized();
    if constexpr (D == 2) {
      const double s = uniform(-1.0, 1.0);
      const double c = std::sqrt(std::max(0.0, 1.0 - s * s));
      Vec<D> perp;
      perp << -e.y(), e.x();
      return c * e + s * perp;
    } else {
      static_assert(D == 3, "dimension must be 2 or 3");
      const double c = std::sqrt(uniform());
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      const double a = 2.0 * M_PI * uniform();
      Vec<D> b1 = e.unitOrthogonal();
      Vec<D> b2 = e.cross(b1);
      return c * e + s * (std::cos(a) * b1 + std::sin(a) * b2);
    }
  }

 private:
  std::uint64_t poisson_small(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t n = 0;
    double prod = 1.0;
    for (;;) {
      prod *= 1.0 - uniform();  // strictly positive factor
      if (prod <= limit) return n;
      ++n;
    }
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(block_);
    std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_id_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_id_ >> 32);
    std::uint32_t k0 = key_[0];
    std::uint32_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ULL * c0;
      const std::uint64_t p1 = 0xCD9E8D57ULL * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += 0x9E3779B9U;
      k1 += 0xBB67AE85U;
    }
    buf_ = {c0, c1, c2, c3};
    buf_pos_ = 0;
    ++block_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace clustergas
