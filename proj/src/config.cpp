#include "gsc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gsc/errors.hpp"
#include "gsc/graph.hpp"

namespace gsc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_as(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "cannot parse '" + value + "'");
  return out;
}

std::size_t nonnegative_size(const ConfigFile& f, const std::string& key, std::size_t fallback) {
  const auto v = f.integer(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError(key, "must be non-negative, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::filesystem::path& source) {
  ConfigFile f;
  f.source_ = source;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value', got '" + body + "'");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
    if (f.values_.count(key)) throw ConfigError(key, "duplicate key at line " + std::to_string(line_no));
    f.values_.emplace(std::move(key), std::move(value));
  }
  return f;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::filesystem::path> ConfigFile::path(const std::string& key) const {
  const auto v = get(key);
  if (!v || v->empty()) return std::nullopt;
  std::filesystem::path p(*v);
  if (p.is_relative() && !source_.empty()) p = source_.parent_path() / p;
  return p;
}

std::filesystem::path ConfigFile::required_path(const std::string& key) const {
  auto p = path(key);
  if (!p) throw ConfigError(key, "required path is missing");
  return *p;
}

double ConfigFile::number(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_as<double>(key, *v) : fallback;
}

std::int64_t ConfigFile::integer(const std::string& key, std::int64_t fallback) const {
  const auto v = get(key);
  return v ? parse_as<std::int64_t>(key, *v) : fallback;
}

std::uint64_t ConfigFile::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  return v ? parse_as<std::uint64_t>(key, *v) : fallback;
}

std::string ConfigFile::text(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::vector<std::string> ConfigFile::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_)
    if (std::find(known.begin(), known.end(), key) == known.end()) out.push_back(key);
  return out;
}

void TrainConfig::validate() const {
  if (k == 0) throw ConfigError("k", "must be positive");
  if (!(tau > 0.0)) throw ConfigError("tau", "must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta", "must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "must lie in [0, 1], got " + format_double(lambda));
  if (negatives == 0) throw ConfigError("negatives", "must be positive");
  if (positives == 0) throw ConfigError("positives", "must be positive");
  if (dim == 0) throw ConfigError("dim", "must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr", "must be positive");
  if (batch_size < 2) throw ConfigError("batch_size", "must be at least 2");
  if (ot_subsample == 0) throw ConfigError("ot_subsample", "must be positive");
  if (ot_subsample > batch_size) throw ConfigError("ot_subsample", "must not exceed batch_size");
  if (sinkhorn_max_iters < 1) throw ConfigError("sinkhorn_max_iters", "must be positive");
  if (!(sinkhorn_tol >= 0.0)) throw ConfigError("sinkhorn_tol", "must be non-negative");
  if (sinkhorn_accelerate_after < 0) throw ConfigError("sinkhorn_accelerate_after", "must be non-negative");
}

TrainConfig TrainConfig::from(const ConfigFile& f) {
  TrainConfig c;
  c.k = nonnegative_size(f, "k", c.k);
  c.tau = f.number("tau", c.tau);
  c.beta = f.number("beta", c.beta);
  c.lambda = f.number("lambda", c.lambda);
  c.negatives = nonnegative_size(f, "negatives", c.negatives);
  c.positives = nonnegative_size(f, "positives", c.positives);
  c.dim = nonnegative_size(f, "dim", c.dim);
  c.lr = f.number("lr", c.lr);
  c.epochs = nonnegative_size(f, "epochs", c.epochs);
  c.batch_size = nonnegative_size(f, "batch_size", c.batch_size);
  c.ot_subsample = nonnegative_size(f, "ot_subsample", c.ot_subsample);
  c.seed = f.unsigned_integer("seed", c.seed);
  c.sinkhorn_max_iters = static_cast<int>(f.integer("sinkhorn_max_iters", c.sinkhorn_max_iters));
  c.sinkhorn_tol = f.number("sinkhorn_tol", c.sinkhorn_tol);
  c.sinkhorn_accelerate_after = static_cast<int>(f.integer("sinkhorn_accelerate_after", c.sinkhorn_accelerate_after));

  const auto plan = f.text("plan_gradient", "unrolled");
  if (plan == "unrolled") c.plan_gradient = ot::PlanGradient::unrolled;
  else if (plan == "fixed") c.plan_gradient = ot::PlanGradient::fixed;
  else throw ConfigError("plan_gradient", "expected unrolled or fixed, got '" + plan + "'");

  const auto nb = f.text("neighborhood", "graph");
  if (nb == "graph") c.neighborhood = Neighborhood::graph;
  else if (nb == "subgraph") c.neighborhood = Neighborhood::subgraph;
  else throw ConfigError("neighborhood", "expected graph or subgraph, got '" + nb + "'");

  c.validate();
  return c;
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"k", std::to_string(k)},
      {"tau", format_double(tau)},
      {"beta", format_double(beta)},
      {"lambda", format_double(lambda)},
      {"negatives", std::to_string(negatives)},
      {"positives", std::to_string(positives)},
      {"dim", std::to_string(dim)},
      {"lr", format_double(lr)},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"ot_subsample", std::to_string(ot_subsample)},
      {"seed", std::to_string(seed)},
      {"sinkhorn_max_iters", std::to_string(sinkhorn_max_iters)},
      {"sinkhorn_tol", format_double(sinkhorn_tol)},
      {"sinkhorn_accelerate_after", std::to_string(sinkhorn_accelerate_after)},
      {"plan_gradient", plan_gradient == ot::PlanGradient::unrolled ? "unrolled" : "fixed"},
      {"neighborhood", neighborhood == Neighborhood::graph ? "graph" : "subgraph"},
  };
}

void SbmConfig::validate() const {
  if (blocks == 0) throw ConfigError("blocks", "must be positive");
  if (nodes_per_block == 0) throw ConfigError("nodes_per_block", "must be positive");
  if (!(p_in >= 0.0 && p_in <= 1.0)) throw ConfigError("p_in", "must lie in [0, 1]");
  if (!(p_out >= 0.0 && p_out <= 1.0)) throw ConfigError("p_out", "must lie in [0, 1]");
  if (!(p_in > p_out)) throw ConfigError("p_in", "must exceed p_out");
  if (feat_dim < blocks) throw ConfigError("feat_dim", "must be at least the number of blocks");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma", "must be non-negative");
}

SbmConfig SbmConfig::from(const ConfigFile& f) {
  SbmConfig c;
  c.blocks = nonnegative_size(f, "blocks", c.blocks);
  c.nodes_per_block = nonnegative_size(f, "nodes_per_block", c.nodes_per_block);
  c.p_in = f.number("p_in", c.p_in);
  c.p_out = f.number("p_out", c.p_out);
  c.feat_dim = nonnegative_size(f, "feat_dim", c.feat_dim);
  c.noise_sigma = f.number("noise_sigma", c.noise_sigma);
  c.seed = f.unsigned_integer("seed", c.seed);
  c.validate();
  return c;
}

}  // namespace gsc
