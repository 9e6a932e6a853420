#pragma once

#include "clustergas/cluster.hpp"
#include "clustergas/engine.hpp"
#include "clustergas/estimator.hpp"
#include "clustergas/quadrature.hpp"
#include "clustergas/trees.hpp"
#include "clustergas/union_find.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace clustergas {

// Test functional on trajectories: either a per-particle sum of h or a
// cluster-level H. The envelope |H| <= c1 n + c2 E must hold with c2 <= beta/4
// (checked at the estimator entry); continuity under the uniform path norm is
// the caller's responsibility.
template <int D>
struct TestFunctional {
  enum class Kind { SingleParticle, ClusterLevel };
  Kind kind = Kind::SingleParticle;
  std::function<double(const Trajectory<D>&)> h;
  std::function<double(const TrajectorySet<D>&)> H;
  double c1 = 0.0;
  double c2 = 0.0;

  static TestFunctional zero() { return {}; }

  bool empty() const { return !h && !H; }

  double evaluate(const TrajectorySet<D>& member_paths) const {
    if (empty()) return 0.0;
    if (kind == Kind::SingleParticle) {
      double acc = 0.0;
      for (const auto& tr : member_paths) acc += h(tr);
      return acc;
    }
    return H(member_paths);
  }
};

// Coordinates of a cluster path under the tube change of variables: ordered
// tree, root (t=0 center of mass), initial velocities, ordered collision
// times and deflection directions. Deflections are stored in the flux
// orientation ((v_first - v_second) . omega > 0 at an admissible collision);
// the geometric contact normal is -omega.
template <int D>
struct DecoratedTreeParams {
  int n = 0;
  OrderedTree tree;
  Vec<D> root = Vec<D>::Zero();
  std::vector<Vec<D>> velocities;
  std::vector<double> times;    // strictly increasing in (0, T]
  std::vector<Vec<D>> omegas;   // unit deflection per tree edge
};

enum class ReconstructDiagnostic {
  Ok,
  OutwardDeflection,  // (v_rel . omega) <= 0 at some edge: zero flux weight
  TimeZeroOverlap,    // prescribed contact needs interpenetration at t = 0
  ReplayMismatch,     // replay produced extra, missing or shifted collisions
};

template <int D>
struct ReconstructOutcome {
  Configuration<D> initial;
  TrajectorySet<D> trajectories;  // replayed exact dynamics of the union
  CollisionLog<D> log;
  double flux_over_pdf = 1.0;  // prod_e (v_rel . omega)_+ / proposal pdf(omega)
  bool compatible = false;
  ReconstructDiagnostic diagnostic = ReconstructDiagnostic::Ok;
};

template <int D>
struct WeightedSample {
  DecoratedTreeParams<D> params;
  double weight = 0.0;  // cross sections times f0 over proposal density
  bool compatible = false;
};

namespace detail {

template <int D>
double sphere_area() {
  return D == 2 ? 2.0 * M_PI : 4.0 * M_PI;
}

// Piecewise-linear particle record in unrigged coordinates: t=0 position plus
// a velocity schedule. Positions are unwrapped reals until the final shift.
template <int D>
struct BuildParticle {
  Vec<D> x0 = Vec<D>::Zero();
  std::vector<std::pair<double, Vec<D>>> schedule;  // (time, outgoing velocity)

  Vec<D> position_at(double t) const {
    Vec<D> x = x0;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
      const double t_end = s + 1 < schedule.size() ? std::min(schedule[s + 1].first, t) : t;
      if (t_end > schedule[s].first) x += (t_end - schedule[s].first) * schedule[s].second;
      if (s + 1 >= schedule.size() || schedule[s + 1].first >= t) break;
    }
    return x;
  }
  const Vec<D>& velocity_before(double t) const {
    for (std::size_t s = schedule.size(); s-- > 0;)
      if (schedule[s].first < t) return schedule[s].second;
    return schedule.front().second;
  }
};

}  // namespace detail

// Inverts the tree parametrization at finite eps: tree edges are processed in
// clustering order; at edge (a,b) the component of b is translated rigidly so
// the pair sits at separation eps with contact normal -omega at the edge
// time, velocities scatter, and the t=0 center of mass is finally moved to
// the root. The union is then replayed with the exact dynamics; the sample is
// compatible iff the replay reproduces exactly the prescribed clustering
// collisions (a min cluster path compatible with the tree).
//
// omega_source(edge_index, v_rel_minus) supplies the deflection and its
// proposal density on the sphere, which allows flux-weighted sampling.
template <int D>
ReconstructOutcome<D> reconstruct_cluster_path(
    DecoratedTreeParams<D>& params, double eps, double T,
    const std::function<std::pair<Vec<D>, double>(int, const Vec<D>&)>& omega_source) {
  const int n = params.n;
  ReconstructOutcome<D> out;
  std::vector<detail::BuildParticle<D>> parts(n);
  for (int i = 0; i < n; ++i) {
    parts[i].x0 = Vec<D>::Zero();
    parts[i].schedule.push_back({0.0, params.velocities[i]});
  }
  UnionFind comp(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> members(n);
  for (int i = 0; i < n; ++i) members[i] = {i};

  params.omegas.resize(std::max(n - 1, 0));
  double flux = 1.0;
  for (int e = 0; e < n - 1; ++e) {
    const auto [a, b] = params.tree.edges[e];
    const double tau = params.times[e];
    const Vec<D> u = parts[a].velocity_before(tau) - parts[b].velocity_before(tau);
    const auto [omega, pdf] = omega_source(e, u);
    params.omegas[e] = omega;
    const double w = u.dot(omega);
    if (w <= 0.0) {
      out.diagnostic = ReconstructDiagnostic::OutwardDeflection;
      out.flux_over_pdf = 0.0;
      return out;
    }
    flux *= w / pdf;
    // Rigid shift of b's component: x_a(tau) - x_b(tau) = -eps * omega.
    const Vec<D> shift = parts[a].position_at(tau) - parts[b].position_at(tau) + eps * omega;
    const std::size_t ra = comp.find(a);
    std::size_t rb = comp.find(b);
    for (int m : members[rb]) parts[m].x0 += shift;
    // Scatter at tau (omega and the contact normal give the same exchange).
    const double c = w;
    Vec<D> va = parts[a].velocity_before(tau) - c * omega;
    Vec<D> vb = parts[b].velocity_before(tau) + c * omega;
    parts[a].schedule.push_back({tau, va});
    parts[b].schedule.push_back({tau, vb});
    comp.unite(ra, rb);
    const std::size_t r = comp.find(a);
    const std::size_t o = r == ra ? rb : ra;
    members[r].insert(members[r].end(), members[o].begin(), members[o].end());
    members[o].clear();
  }
  out.flux_over_pdf = flux;

  // Center of mass at t=0 to the root, then wrap onto the torus.
  Vec<D> com = Vec<D>::Zero();
  for (const auto& p : parts) com += p.x0;
  com /= static_cast<double>(n);
  out.initial.eps = eps;
  out.initial.particles.resize(n);
  for (int i = 0; i < n; ++i) {
    out.initial.particles[i].x = wrap_position<D>(parts[i].x0 - com + params.root);
    out.initial.particles[i].v = params.velocities[i];
  }

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (torus_distance<D>(out.initial.particles[i].x, out.initial.particles[j].x) <
          eps * (1.0 - 1e-12)) {
        out.diagnostic = ReconstructDiagnostic::TimeZeroOverlap;
        return out;
      }

  RunResult<D> replay = naive_run<D>(out.initial, T);
  out.trajectories = std::move(replay.trajectories);
  out.log = std::move(replay.log);

  bool match = static_cast<int>(out.log.size()) == n - 1;
  for (int e = 0; match && e < n - 1; ++e) {
    const auto& ev = out.log[e];
    const auto [a, b] = params.tree.edges[e];
    match = ev.i == a && ev.j == b && std::abs(ev.t - params.times[e]) <= 1e-7 &&
            ev.omega.dot(-params.omegas[e]) >= 1.0 - 1e-7;
  }
  out.compatible = match;
  if (!match) out.diagnostic = ReconstructDiagnostic::ReplayMismatch;
  return out;
}

// Recovers (tree order, times, flux-oriented deflections) from a replayed
// collision log; on compatible samples this is the exact inverse of
// reconstruct_cluster_path.
template <int D>
DecoratedTreeParams<D> extract_params(const ReconstructOutcome<D>& outcome, int n,
                                      const Vec<D>& root) {
  DecoratedTreeParams<D> p;
  p.n = n;
  p.tree.n = n;
  p.root = root;
  for (int i = 0; i < n; ++i) p.velocities.push_back(outcome.trajectories[i].points.front().v);
  for (const auto& ev : outcome.log) {
    p.tree.edges.emplace_back(ev.i, ev.j);
    p.times.push_back(ev.t);
    p.omegas.push_back(-ev.omega);
  }
  return p;
}

enum class OmegaMode { Uniform, FluxWeighted };

struct ExpansionOptions {
  OmegaMode omega_mode = OmegaMode::Uniform;
  double beta_ref_factor = 0.5;  // reference Maxwellian beta_ref = factor * beta
};

template <int D>
struct SampledPath {
  DecoratedTreeParams<D> params;
  ReconstructOutcome<D> outcome;
  double weight = 0.0;  // per-path importance weight, mu-rescaled measure
};

namespace detail {

// Draws one decorated-tree sample of size n and reconstructs it. The returned
// weight estimates the mu-rescaled per-volume cluster-path measure: flux
// factors over proposal, ordered-simplex time density, tree count over n!,
// and the f0-over-reference-Maxwellian ratio, times the compatibility
// indicator. fixed_velocities is a test hook that conditions on the given
// velocities (the velocity proposal ratio is then dropped).
template <int D>
SampledPath<D> sample_cluster_path(int n, double eps, double T, const InitialModel& model,
                                   const ExpansionOptions& opts, CounterRng& rng,
                                   const std::vector<Vec<D>>* fixed_velocities = nullptr) {
  SampledPath<D> s;
  s.params.n = n;
  s.params.tree = n > 1 ? random_ordered_tree(n, rng) : OrderedTree{1, {}};
  for (int c = 0; c < D; ++c) s.params.root[c] = rng.uniform();
  const double beta_ref = opts.beta_ref_factor * model.beta;
  for (int i = 0; i < n; ++i)
    s.params.velocities.push_back(fixed_velocities ? (*fixed_velocities)[i]
                                                   : sample_maxwellian<D>(beta_ref, rng));
  std::vector<double> taus(n - 1);
  for (auto& t : taus) t = T * (1.0 - rng.uniform());  // (0, T]
  std::sort(taus.begin(), taus.end());
  s.params.times = taus;

  const double area = sphere_area<D>();
  std::function<std::pair<Vec<D>, double>(int, const Vec<D>&)> omega_source;
  if (opts.omega_mode == OmegaMode::Uniform) {
    std::vector<Vec<D>> omegas(std::max(n - 1, 0));
    for (auto& w : omegas) w = rng.uniform_on_sphere<D>();
    omega_source = [omegas, area](int e, const Vec<D>&) {
      return std::make_pair(omegas[e], 1.0 / area);
    };
  } else {
    omega_source = [&rng, area](int, const Vec<D>& u) {
      if (u.norm() <= 0.0) return std::make_pair(Vec<D>::Unit(0).eval(), 1.0 / area);
      const Vec<D> w = rng.flux_weighted_direction<D>(u);
      return std::make_pair(w, std::max(u.dot(w), 0.0) / (kappa_d(D) * u.norm()));
    };
  }

  s.outcome = reconstruct_cluster_path<D>(s.params, eps, T, omega_source);
  if (!s.outcome.compatible) {
    s.weight = 0.0;
    return s;
  }
  double w = s.outcome.flux_over_pdf;
  if (n > 1) {
    double time_density = 1.0;  // (n-1)!/T^{n-1}
    for (int f = 2; f <= n - 1; ++f) time_density *= f;
    time_density /= std::pow(T, n - 1);
    w /= time_density;
    w *= static_cast<double>(ordered_tree_count(n));
  }
  double nfact = 1.0;
  for (int f = 2; f <= n; ++f) nfact *= f;
  w /= nfact;
  for (int i = 0; i < n; ++i) {
    const PhasePoint<D>& z = s.outcome.initial.particles[i];
    double ratio = model.profile.value<D>(z.x);
    if (!fixed_velocities)
      ratio *= maxwellian_density(model.beta, z.v.squaredNorm(), D) /
               maxwellian_density(beta_ref, z.v.squaredNorm(), D);
    w *= ratio;
  }
  s.weight = w;
  return s;
}

}  // namespace detail

template <int D>
WeightedSample<D> make_weighted_sample(int n, double eps, double T, const InitialModel& model,
                                       const ExpansionOptions& opts, CounterRng& rng) {
  auto s = detail::sample_cluster_path<D>(n, eps, T, model, opts, rng);
  return {std::move(s.params), s.weight, s.outcome.compatible};
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double compat_rate = 0.0;
  std::uint64_t n_samples = 0;
};

// Monte Carlo value of the mu-rescaled per-volume nu-measure integral of
// e^H over min cluster paths of size n, via the tree-parametrized importance
// sampler. For n=1, H=0 this is exactly 1 in expectation.
template <int D>
MonteCarloEstimate estimate_nu_integral(int n, const TestFunctional<D>& H, double eps, double T,
                                        const InitialModel& model, std::uint64_t n_samples,
                                        CounterRng& rng, const ExpansionOptions& opts = {}) {
  if (n > 7) throw SizeLimit("estimate_nu_integral: tree enumeration bound is n <= 7");
  if (!H.empty() && H.c2 > model.beta / 4.0 + 1e-12)
    throw ConfigError("estimate_nu_integral: test functional violates c2 <= beta/4");
  Estimator acc;
  std::uint64_t compatible = 0;
  for (std::uint64_t k = 0; k < n_samples; ++k) {
    auto s = detail::sample_cluster_path<D>(n, eps, T, model, opts, rng);
    double w = 0.0;
    if (s.outcome.compatible) {
      ++compatible;
      w = s.weight * std::exp(H.evaluate(s.outcome.trajectories));
    }
    acc.update(w);
  }
  MonteCarloEstimate out;
  out.estimate = acc.mean();
  out.std_error = acc.stderr_mean();
  out.compat_rate = static_cast<double>(compatible) / static_cast<double>(n_samples);
  out.n_samples = n_samples;
  return out;
}

template <int D>
struct AggregateEstimate {
  MonteCarloEstimate minimal;    // phi^min-signed minimal-aggregate term
  MonteCarloEstimate remainder;  // (phi - phi^min) cycle/time-zero correction
  double minimal_fraction = 0.0;
  double overlap_fraction = 0.0;
  double time_zero_fraction = 0.0;
};

// k independently sampled cluster paths with sizes as prescribed; the overlap
// graph is evaluated on the realized trajectories, the minimal-aggregate
// contribution carries the sign (-1)^(k-1), and the non-minimal remainder is
// weighted with the exact connected-graph sum phi so the cycle correction can
// be measured. fixed_velocities (one list per path) conditions the sampler
// for oracle tests.
template <int D>
AggregateEstimate<D> estimate_aggregate_term(
    int k, const std::vector<int>& sizes, const TestFunctional<D>& H, double eps, double T,
    const InitialModel& model, std::uint64_t n_samples, CounterRng& rng,
    const ExpansionOptions& opts = {},
    const std::vector<std::vector<Vec<D>>>* fixed_velocities = nullptr) {
  if (k < 2) throw SizeLimit("estimate_aggregate_term: k >= 2 required");
  int total = 0;
  for (int s : sizes) total += s;
  if (static_cast<int>(sizes.size()) != k || total > 8)
    throw SizeLimit("estimate_aggregate_term: size profile must have k entries, sum <= 8");
  const double mu = default_activity(eps, D);
  double scale = std::pow(mu, k - 1);  // mu^{k-1} / k!
  for (int f = 2; f <= k; ++f) scale /= f;
  Estimator acc_min, acc_rem;
  std::uint64_t n_minimal = 0, n_overlap = 0, n_tzero = 0, n_alive = 0;
  for (std::uint64_t it = 0; it < n_samples; ++it) {
    double w = 1.0;
    double hsum = 0.0;
    std::vector<ClusterPath<D>> paths(k);
    bool alive = true;
    for (int p = 0; p < k; ++p) {
      auto s = detail::sample_cluster_path<D>(sizes[p], eps, T, model, opts, rng,
                                              fixed_velocities ? &(*fixed_velocities)[p]
                                                               : nullptr);
      if (!s.outcome.compatible) {
        alive = false;
        break;
      }
      w *= s.weight;
      hsum += H.evaluate(s.outcome.trajectories);
      paths[p].member_ids.resize(sizes[p]);
      for (int i = 0; i < sizes[p]; ++i) paths[p].member_ids[i] = i;
      paths[p].trajectories = s.outcome.trajectories;
    }
    if (!alive || w == 0.0) {
      acc_min.update(0.0);
      acc_rem.update(0.0);
      continue;
    }
    ++n_alive;
    const OverlapGraph<D> og = detect_overlaps<D>(paths, eps, 0.0, T);
    if (!og.edges.empty()) ++n_overlap;
    bool tzero = false;
    for (const auto& e : og.edges) tzero = tzero || e.at_window_start;
    if (tzero) ++n_tzero;
    const auto [cls, tree] = aggregate_connectivity<D>(og);
    if (cls.minimal) ++n_minimal;
    SimpleGraph g(k);
    for (const auto& e : og.edges) g.add_edge(e.p, e.q);
    const long long phi_g = phi(g);
    const double common = w * std::exp(hsum) * scale;
    acc_min.update(common * cls.sign);
    acc_rem.update(common * static_cast<double>(phi_g - cls.sign));
  }
  AggregateEstimate<D> out;
  out.minimal = {acc_min.mean(), acc_min.stderr_mean(),
                 static_cast<double>(n_alive) / n_samples, n_samples};
  out.remainder = {acc_rem.mean(), acc_rem.stderr_mean(),
                   static_cast<double>(n_alive) / n_samples, n_samples};
  out.minimal_fraction = static_cast<double>(n_minimal) / static_cast<double>(n_samples);
  out.overlap_fraction = static_cast<double>(n_overlap) / static_cast<double>(n_samples);
  out.time_zero_fraction = static_cast<double>(n_tzero) / static_cast<double>(n_samples);
  return out;
}

struct LambdaPoint {
  double u = 0.0;
  double value = 0.0;
  double std_error = 0.0;  // jackknife
};

// Empirical exponential moment: mu^{-1} log of the ensemble average of
// exp(u S) where S is the per-run sum of the test functional. Leave-one-out
// jackknife errors; exponents beyond 700 are refused.
inline std::vector<LambdaPoint> empirical_exponential_moment(const std::vector<double>& run_sums,
                                                             double mu_eps,
                                                             const std::vector<double>& u_grid) {
  const std::size_t m = run_sums.size();
  std::vector<LambdaPoint> out;
  out.reserve(u_grid.size());
  for (double u : u_grid) {
    for (double s : run_sums)
      if (std::abs(u * s) > 700.0)
        throw OverflowGuard("empirical_exponential_moment: exponent exceeds 700; shrink u");
    std::vector<double> ex(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      ex[i] = std::exp(u * run_sums[i]);
      sum += ex[i];
    }
    LambdaPoint pt;
    pt.u = u;
    pt.value = std::log(sum / static_cast<double>(m)) / mu_eps;
    if (m > 1) {
      double jmean = 0.0;
      std::vector<double> jk(m);
      for (std::size_t i = 0; i < m; ++i) {
        jk[i] = std::log((sum - ex[i]) / static_cast<double>(m - 1)) / mu_eps;
        jmean += jk[i];
      }
      jmean /= static_cast<double>(m);
      double ss = 0.0;
      for (double v : jk) ss += (v - jmean) * (v - jmean);
      pt.std_error = std::sqrt(ss * static_cast<double>(m - 1) / static_cast<double>(m));
    }
    out.push_back(pt);
  }
  return out;
}

struct CumulantEstimate {
  int order = 0;
  double raw = 0.0;       // k-statistic of the per-run sums
  double rescaled = 0.0;  // raw / mu_eps
  double std_error = 0.0;  // jackknife on raw
};

// k-statistics (unbiased cumulant estimators) of the per-run sums, to order 3.
inline std::vector<CumulantEstimate> cumulant_estimates(const std::vector<double>& run_sums,
                                                        double mu_eps, int max_order = 3) {
  const std::size_t m = run_sums.size();
  const auto kstats = [](double p1, double p2, double p3, double n) {
    const double mean = p1 / n;
    const double s2 = p2 - p1 * p1 / n;
    const double k2 = n > 1 ? s2 / (n - 1.0) : 0.0;
    const double c3 = p3 - 3.0 * mean * p2 + 2.0 * n * mean * mean * mean;
    const double k3 = n > 2 ? n * c3 / ((n - 1.0) * (n - 2.0)) : 0.0;
    return std::array<double, 3>{mean, k2, k3};
  };
  double p1 = 0, p2 = 0, p3 = 0;
  for (double s : run_sums) {
    p1 += s;
    p2 += s * s;
    p3 += s * s * s;
  }
  const auto full = kstats(p1, p2, p3, static_cast<double>(m));
  std::vector<CumulantEstimate> out;
  for (int order = 1; order <= max_order && order <= 3; ++order) {
    CumulantEstimate ce;
    ce.order = order;
    ce.raw = full[order - 1];
    ce.rescaled = ce.raw / mu_eps;
    if (m > 3) {
      double jmean = 0.0;
      std::vector<double> jk(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double s = run_sums[i];
        jk[i] = kstats(p1 - s, p2 - s * s, p3 - s * s * s,
                       static_cast<double>(m - 1))[order - 1];
        jmean += jk[i];
      }
      jmean /= static_cast<double>(m);
      double ss = 0.0;
      for (double v : jk) ss += (v - jmean) * (v - jmean);
      ce.std_error = std::sqrt(ss * static_cast<double>(m - 1) / static_cast<double>(m));
    }
    out.push_back(ce);
  }
  return out;
}

}  // namespace clustergas
