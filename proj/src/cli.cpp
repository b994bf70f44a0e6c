#include "gsc/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "gsc/checkpoint.hpp"
#include "gsc/config.hpp"
#include "gsc/errors.hpp"
#include "gsc/generator.hpp"
#include "gsc/graph.hpp"
#include "gsc/ot.hpp"
#include "gsc/probe.hpp"
#include "gsc/sampler.hpp"
#include "gsc/synth.hpp"
#include "gsc/trainer.hpp"

namespace gsc {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kKnownKeys = {
    // data
    "edges", "features", "labels", "splits", "checkpoint", "embeddings",
    // training
    "k", "tau", "beta", "lambda", "negatives", "positives", "dim", "lr", "epochs", "batch_size", "ot_subsample", "seed",
    "sinkhorn_max_iters", "sinkhorn_tol", "sinkhorn_accelerate_after", "plan_gradient", "neighborhood",
    // probe
    "probe_lr", "probe_steps", "probe_l2",
    // ot-dist
    "center1", "center2", "pair",
    // gen-synth
    "blocks", "nodes_per_block", "p_in", "p_out", "feat_dim", "noise_sigma"};

struct Invocation {
  std::string command;
  fs::path config_path;
  std::optional<std::uint64_t> seed;
  fs::path out_dir = "gsc_out";
};

class Manifest {
 public:
  Manifest(std::string command, const ConfigFile& cfg) : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["config_file"] = cfg.source().string();
    doc_["config"] = cfg.values();
    doc_["inputs"] = nlohmann::json::object();
    doc_["artifacts"] = nlohmann::json::array();
  }
  void resolved(const std::map<std::string, std::string>& values) {
    for (const auto& [k, v] : values) doc_["config"][k] = v;
  }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void input(const fs::path& p) { doc_["inputs"][p.string()] = sha256_file(p); }
  void artifact(const fs::path& p) { doc_["artifacts"].push_back(p.string()); }
  void write(const fs::path& dir) {
    doc_["timings"]["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << doc_.dump(2) << '\n';
  }

 private:
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

ConfigFile load_config(const Invocation& inv) {
  ConfigFile cfg = ConfigFile::load(inv.config_path);
  const auto unknown = cfg.unknown_keys(kKnownKeys);
  if (!unknown.empty()) throw ConfigError(unknown.front(), "unknown key");
  if (inv.seed) cfg.set("seed", std::to_string(*inv.seed));
  return cfg;
}

Graph load_graph_from(const ConfigFile& cfg, Manifest& manifest, bool with_labels) {
  const auto edges = cfg.required_path("edges");
  const auto features = cfg.required_path("features");
  std::optional<fs::path> labels, splits;
  if (with_labels) {
    labels = cfg.path("labels");
    splits = cfg.path("splits");
  }
  Graph g = load_graph(edges, features, labels, splits);
  for (const auto& p : {std::optional<fs::path>(edges), std::optional<fs::path>(features), labels, splits})
    if (p) manifest.input(*p);
  return g;
}

std::pair<EncoderParams, GeneratorParams> load_params(const fs::path& path) {
  const auto named = load_checkpoint(path);
  return {EncoderParams::from_named(named), GeneratorParams::from_named(named)};
}

int cmd_train(const Invocation& inv, std::ostream& out, std::ostream& err) {
  const ConfigFile file = load_config(inv);
  const TrainConfig cfg = TrainConfig::from(file);
  Manifest manifest("train", file);
  manifest.resolved(cfg.to_map());
  manifest.seed(cfg.seed);
  const Graph g = load_graph_from(file, manifest, true);
  TrainOptions opts;
  opts.out_dir = inv.out_dir;
  opts.progress = &err;
  const TrainResult res = train(g, cfg, opts);
  for (const char* name : {"checkpoint.ckpt", "final.ckpt", "metrics.tsv"}) manifest.artifact(inv.out_dir / name);
  manifest.write(inv.out_dir);
  out << "epochs=" << res.metrics.size() << " best_epoch=" << res.best_epoch << " selection=" << res.selection;
  if (!res.metrics.empty()) out << " final_total=" << format_double(res.metrics.back().total);
  out << '\n';
  return kExitOk;
}

int cmd_embed(const Invocation& inv, std::ostream& out, std::ostream&) {
  const ConfigFile file = load_config(inv);
  Manifest manifest("embed", file);
  const Graph g = load_graph_from(file, manifest, false);
  const auto ckpt = file.required_path("checkpoint");
  const auto [encoder, generator] = load_params(ckpt);
  manifest.input(ckpt);
  const Matrix h = embed(g, encoder);
  fs::create_directories(inv.out_dir);
  const fs::path target = inv.out_dir / "embeddings.csv";
  write_features(target, h);
  manifest.artifact(target);
  manifest.write(inv.out_dir);
  out << "embeddings=" << target.string() << " rows=" << h.rows << " cols=" << h.cols << '\n';
  return kExitOk;
}

int cmd_eval(const Invocation& inv, std::ostream& out, std::ostream&) {
  const ConfigFile file = load_config(inv);
  Manifest manifest("eval", file);
  const auto emb_path = file.required_path("embeddings");
  const auto labels_path = file.required_path("labels");
  const auto splits_path = file.required_path("splits");
  const Matrix emb = read_features(emb_path);
  const auto labels = read_labels(labels_path, emb.rows);
  const auto splits = read_splits(splits_path, emb.rows);
  for (const auto& p : {emb_path, labels_path, splits_path}) manifest.input(p);
  ProbeConfig pc;
  pc.lr = file.number("probe_lr", pc.lr);
  pc.steps = static_cast<std::size_t>(file.unsigned_integer("probe_steps", pc.steps));
  pc.l2 = file.number("probe_l2", pc.l2);
  manifest.resolved({{"probe_lr", format_double(pc.lr)},
                     {"probe_steps", std::to_string(pc.steps)},
                     {"probe_l2", format_double(pc.l2)}});
  const ProbeResult r = linear_probe(emb, labels, splits, pc);
  manifest.write(inv.out_dir);
  out << "accuracy=" << format_double(r.accuracy) << " micro_f1=" << format_double(r.micro_f1)
      << " evaluated=" << r.evaluated << '\n';
  return kExitOk;
}

int cmd_ot_dist(const Invocation& inv, std::ostream& out, std::ostream&) {
  const ConfigFile file = load_config(inv);
  TrainConfig cfg = TrainConfig::from(file);
  Manifest manifest("ot-dist", file);
  manifest.resolved(cfg.to_map());
  manifest.seed(cfg.seed);
  const Graph g = load_graph_from(file, manifest, false);

  EncoderParams encoder;
  GeneratorParams generator;
  if (const auto ckpt = file.path("checkpoint")) {
    std::tie(encoder, generator) = load_params(*ckpt);
    manifest.input(*ckpt);
  } else {
    Rng rng = derive_stream(cfg.seed, std::numeric_limits<std::uint64_t>::max());
    encoder = EncoderParams::init(g.feature_dim(), cfg.dim, rng);
    generator = GeneratorParams::init(cfg.dim, rng);
  }
  if (encoder.in_dim() != g.feature_dim())
    throw CheckpointError("ot-dist: checkpoint expects " + std::to_string(encoder.in_dim()) + " input features");

  auto center = [&](const char* key) {
    const auto v = file.integer(key, -1);
    if (v < 0 || static_cast<std::size_t>(v) >= g.n_nodes())
      throw ConfigError(key, "must name a node in [0, " + std::to_string(g.n_nodes()) + ")");
    return static_cast<std::uint32_t>(v);
  };
  const std::uint32_t c1 = center("center1");
  const std::uint32_t c2 = center("center2");
  const std::string pair = file.text("pair", "sampled");
  if (pair != "sampled" && pair != "generated") throw ConfigError("pair", "expected sampled or generated");

  ad::Tape tape;
  const ad::Tensor h = encode_propagated(tape, propagate_features(normalize_adjacency(g), g.features()), encoder);
  const Matrix hm = h.to_matrix();
  auto sample = [&](std::uint32_t c) {
    Rng rng = derive_stream(cfg.seed, 0, 1 + static_cast<std::uint64_t>(c));
    const Subgraph s = bfs_sample(g, c, cfg.k, rng);
    return induced_subgraph(g, s.nodes, hm);
  };
  const Subgraph s1 = sample(c1);
  const Subgraph s2 = sample(c2);
  Matrix emb2 = s2.node_embeddings;
  Matrix adj2 = s2.adjacency;
  if (pair == "generated") {
    const auto gen = generate_subgraph(tape, s2, g, h, generator, cfg.neighborhood);
    emb2 = gen.node_embeddings.to_matrix();
    adj2 = gen.adjacency.to_matrix();
  }

  const Matrix cost = ot::node_cost_matrix(s1.node_embeddings, emb2, cfg.tau);
  const auto u = ot::uniform_marginal(cost.rows);
  const auto v = ot::uniform_marginal(cost.cols);
  const auto res = ot::sinkhorn(cost, u, v, cfg.sinkhorn());
  const double dw = ot::wasserstein(cost, res.plan);
  const double dgw = ot::gromov_wasserstein(ot::intra_distances(s1.adjacency, cfg.tau),
                                            ot::intra_distances(adj2, cfg.tau), res.plan);
  manifest.write(inv.out_dir);
  out << "D_w=" << format_double(dw) << " D_gw=" << format_double(dgw)
      << " marginal_violation=" << format_double(res.marginal_violation) << " iterations=" << res.iterations
      << " converged=" << (res.converged ? "true" : "false") << '\n';
  return kExitOk;
}

int cmd_gen_synth(const Invocation& inv, std::ostream& out, std::ostream&) {
  const ConfigFile file = load_config(inv);
  const SbmConfig cfg = SbmConfig::from(file);
  Manifest manifest("gen-synth", file);
  manifest.resolved({{"blocks", std::to_string(cfg.blocks)},
                     {"nodes_per_block", std::to_string(cfg.nodes_per_block)},
                     {"p_in", format_double(cfg.p_in)},
                     {"p_out", format_double(cfg.p_out)},
                     {"feat_dim", std::to_string(cfg.feat_dim)},
                     {"noise_sigma", format_double(cfg.noise_sigma)}});
  manifest.seed(cfg.seed);
  const Graph g = gen_synth_sbm(cfg);
  const auto paths = write_dataset(inv.out_dir, g);
  for (const auto& p : {paths.edges, paths.features, paths.labels, paths.splits}) manifest.artifact(p);
  manifest.write(inv.out_dir);
  out << "nodes=" << g.n_nodes() << " edges=" << g.n_edges() << " dir=" << inv.out_dir.string() << '\n';
  return kExitOk;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generative subgraph contrast"};
  app.require_subcommand(1);
  Invocation inv;
  std::string seed_text;
  for (const char* name : {"train", "embed", "eval", "ot-dist", "gen-synth"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", inv.config_path, "key = value config file")->required();
    sub->add_option("--seed", seed_text, "override the config seed");
    sub->add_option("--out", inv.out_dir, "artifact directory");
  }

  std::vector<const char*> argv;
  argv.push_back("gsc");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }
  inv.command = app.get_subcommands().front()->get_name();

  try {
    if (!seed_text.empty()) {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), s);
      if (ec != std::errc() || ptr != seed_text.data() + seed_text.size())
        throw ConfigError("seed", "cannot parse '" + seed_text + "'");
      inv.seed = s;
    }
    if (inv.command == "train") return cmd_train(inv, out, err);
    if (inv.command == "embed") return cmd_embed(inv, out, err);
    if (inv.command == "eval") return cmd_eval(inv, out, err);
    if (inv.command == "ot-dist") return cmd_ot_dist(inv, out, err);
    return cmd_gen_synth(inv, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << inv.config_path.string() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const IngestionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIngestion;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace gsc
