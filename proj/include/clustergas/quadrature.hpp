#pragma once

#include "clustergas/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace clustergas {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights the
// squared first eigenvector components times the zeroth moment.
inline QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, double moment0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    J(i, i + 1) = offdiag[i];
    J(i + 1, i) = offdiag[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = moment0 * v0 * v0;
  }
  return rule;
}

}  // namespace detail

// Gauss-Legendre on [-1, 1].
inline QuadratureRule gauss_legendre(int n) {
  Eigen::VectorXd off(n - 1);
  for (int i = 1; i < n; ++i) off[i - 1] = i / std::sqrt(4.0 * i * i - 1.0);
  return detail::golub_welsch(off, 2.0);
}

// Gauss-Hermite with weight e^{-x^2} (physicists' convention).
inline QuadratureRule gauss_hermite(int n) {
  Eigen::VectorXd off(n - 1);
  for (int i = 1; i < n; ++i) off[i - 1] = std::sqrt(0.5 * i);
  return detail::golub_welsch(off, std::sqrt(M_PI));
}

// Expectation of f under a centered Gaussian with variance sigma^2.
template <typename Fn>
double gauss_expectation(const QuadratureRule& hermite, double sigma, Fn&& f) {
  double acc = 0.0;
  const double norm = 1.0 / std::sqrt(M_PI);
  for (std::size_t i = 0; i < hermite.nodes.size(); ++i)
    acc += hermite.weights[i] * f(std::sqrt(2.0) * sigma * hermite.nodes[i]);
  return norm * acc;
}

// kappa_d = int_{S^{d-1}} (e . w)_+ dw; every collision/overlap rate carries it.
inline double kappa_d(int dim) {
  if (dim == 2) return 2.0;
  if (dim == 3) return M_PI;
  throw ConfigError("kappa_d: dimension must be 2 or 3");
}

}  // namespace clustergas
