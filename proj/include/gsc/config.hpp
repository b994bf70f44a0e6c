#pragma once

// Flat "key = value" run configuration.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gsc/generator.hpp"
#include "gsc/ot.hpp"
#include "gsc/ot_ops.hpp"

namespace gsc {

// Parsed file. '#' starts a comment; blank lines are ignored. Duplicate keys
// and lines without '=' throw ConfigError naming the key or line.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::filesystem::path& source = {});
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::filesystem::path& source() const noexcept { return source_; }

  // Relative paths are resolved against the directory of the config file.
  std::optional<std::filesystem::path> path(const std::string& key) const;
  std::filesystem::path required_path(const std::string& key) const;

  // Typed getters; a malformed value throws ConfigError(key).
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;

  // Keys present in the file but absent from `known`.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path source_;
};

struct TrainConfig {
  std::size_t k = 10;
  double tau = 0.5;
  double beta = 0.05;
  double lambda = 0.5;
  std::size_t negatives = 2;
  std::size_t positives = 1;  // generated positives per anchor
  std::size_t dim = 64;
  double lr = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::size_t ot_subsample = 32;
  std::uint64_t seed = 0;
  int sinkhorn_max_iters = 500;
  double sinkhorn_tol = 1e-6;
  int sinkhorn_accelerate_after = 50;
  ot::PlanGradient plan_gradient = ot::PlanGradient::unrolled;
  Neighborhood neighborhood = Neighborhood::graph;

  ot::SinkhornOptions sinkhorn() const { return {beta, sinkhorn_max_iters, sinkhorn_tol, sinkhorn_accelerate_after}; }

  // Throws ConfigError naming the first offending field.
  void validate() const;
  static TrainConfig from(const ConfigFile& file);
  std::map<std::string, std::string> to_map() const;
};

struct ProbeConfig {
  double lr = 0.01;
  std::size_t steps = 300;
  double l2 = 1e-4;
};

struct SbmConfig {
  std::size_t blocks = 3;
  std::size_t nodes_per_block = 100;
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feat_dim = 16;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  static SbmConfig from(const ConfigFile& file);
};

}  // namespace gsc
