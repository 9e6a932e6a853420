#pragma once

#include "clustergas/common.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace clustergas {

// Streaming central-moment accumulator to fourth order. merge() uses the
// pairwise update formulas, so merging partial accumulators in a fixed order
// reproduces single-stream accumulation exactly; under the documented
// pairwise-tree reduction the results agree to 1e-12.
class Estimator {
 public:
  void update(double x) {
    Estimator single;
    single.n_ = 1;
    single.mean_ = x;
    merge(single);
  }

  void merge(const Estimator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double delta = o.mean_ - mean_;
    const double d2 = delta * delta;
    const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * delta * (na * o.m3_ - nb * m3_) / n;
    const double m3 = m3_ + o.m3_ + d2 * delta * na * nb * (na - nb) / (n * n) +
                      3.0 * delta * (na * o.m2_ - nb * m2_) / n;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    mean_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double sum() const { return mean_ * static_cast<double>(n_); }
  // Central moment sums M_r = sum (x - mean)^r.
  double m2() const { return m2_; }
  double m3() const { return m3_; }
  double m4() const { return m4_; }

  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double stderr_mean() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

  // Unbiased cumulant estimators (k-statistics).
  double k1() const { return mean_; }
  double k2() const { return variance(); }
  double k3() const {
    if (n_ < 3) return 0.0;
    const double n = static_cast<double>(n_);
    return n * m3_ / ((n - 1.0) * (n - 2.0));
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

// Mergeable weighted histogram over integer bins (cluster sizes).
class Histogram {
 public:
  void add(long long bin, double weight = 1.0) {
    counts_[bin] += weight;
    total_ += weight;
  }
  void merge(const Histogram& o) {
    for (const auto& [bin, w] : o.counts_) counts_[bin] += w;
    total_ += o.total_;
  }
  double total() const { return total_; }
  const std::map<long long, double>& counts() const { return counts_; }
  double count(long long bin) const {
    auto it = counts_.find(bin);
    return it == counts_.end() ? 0.0 : it->second;
  }
  // Counts divided by an external normalizer (mu_eps for MD ensembles, M for
  // the coagulation population).
  std::map<long long, double> normalized(double normalizer) const {
    std::map<long long, double> out;
    for (const auto& [bin, w] : counts_) out[bin] = w / normalizer;
    return out;
  }

 private:
  std::map<long long, double> counts_;
  double total_ = 0.0;
};

inline double total_variation(const std::map<long long, double>& a,
                              const std::map<long long, double>& b) {
  double tv = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      tv += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      tv += std::abs(ib->second);
      ++ib;
    } else {
      tv += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * tv;
}

// Least-squares slope with its standard error for log-log scaling fits.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ss += r * r;
    }
    f.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

}  // namespace clustergas
