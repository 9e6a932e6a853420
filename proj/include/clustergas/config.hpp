#pragma once

#include "clustergas/common.hpp"
#include "clustergas/initial.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace clustergas {

// Flat sectioned key-value configuration; JSON is accepted as an alternative
// input syntax. Serialization is canonical (sorted sections and keys), so
// parse -> serialize -> parse is the identity and the serialized form hashes
// reproducibly.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text);

  std::string serialize() const;
  std::uint64_t hash() const;  // FNV-1a over the canonical serialization

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  double require_double(const std::string& section, const std::string& key) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  static std::string key_path(const std::string& section, const std::string& key);
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Common run parameters shared by every subcommand; mode-specific blocks stay
// in the raw config and are read where needed.
struct RunConfig {
  int dimension = 2;
  double epsilon = 0.01;
  double mu = 0.0;  // defaults to epsilon^{1-d}
  double beta = 1.0;
  std::string profile = "uniform";  // uniform | cosine(a)
  std::string sampler = "exact";
  double horizon = 0.2;  // T
  std::uint64_t n_runs = 1;
  std::uint64_t seed = 0;
  KeyValueConfig raw;

  static RunConfig from_config(const KeyValueConfig& cfg);
  static RunConfig load(const std::string& path);

  void validate() const;
  InitialModel initial_model() const;
  SamplerMode sampler_mode() const { return parse_sampler_mode(sampler); }
};

SpatialProfile parse_profile(const std::string& text);
std::string format_profile(const SpatialProfile& profile);

// 17 significant digits: lossless double round-trip.
std::string format_g17(double x);

}  // namespace clustergas
