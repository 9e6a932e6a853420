#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clustergas {

inline constexpr const char* kVersion = "0.1.0";

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

// Half-open unit torus [0,1)^d throughout; positions are always stored wrapped.

struct CorruptState : std::runtime_error {
  explicit CorruptState(const std::string& what) : std::runtime_error(what) {}
};

struct EventStorm : std::runtime_error {
  explicit EventStorm(const std::string& what) : std::runtime_error(what) {}
};

struct PackingFailure : std::runtime_error {
  explicit PackingFailure(const std::string& what) : std::runtime_error(what) {}
};

struct SizeLimit : std::runtime_error {
  explicit SizeLimit(const std::string& what) : std::runtime_error(what) {}
};

struct DegreeMismatch : std::runtime_error {
  explicit DegreeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct OverflowGuard : std::runtime_error {
  explicit OverflowGuard(const std::string& what) : std::runtime_error(what) {}
};

struct TimeOrderViolation : std::runtime_error {
  explicit TimeOrderViolation(const std::string& what) : std::runtime_error(what) {}
};

struct MajorantBreach : std::runtime_error {
  explicit MajorantBreach(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace clustergas
