#include "gsc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "gsc/contrastive.hpp"
#include "gsc/errors.hpp"
#include "gsc/ot_ops.hpp"
#include "gsc/sampler.hpp"

namespace gsc {

namespace {

constexpr std::uint64_t kInitStream = std::numeric_limits<std::uint64_t>::max();

struct SampledView {
  Subgraph subgraph;
  ad::Tensor node_embeddings;
  ad::Tensor intra;
};

struct PoolView {
  ad::Tensor node_embeddings;
  ad::Tensor intra;
};

std::vector<NamedTensor> snapshot(const std::vector<NamedTensor>& named) {
  std::vector<NamedTensor> out;
  for (const auto& nt : named) {
    auto copy = ad::Tensor::parameter(nt.tensor.shape(), std::vector<double>(nt.tensor.values().begin(),
                                                                             nt.tensor.values().end()));
    out.push_back({nt.name, copy});
  }
  return out;
}

bool has_validation(const Graph& g) {
  if (!g.labels() || !g.splits()) return false;
  const auto& s = *g.splits();
  return std::find(s.begin(), s.end(), Split::train) != s.end() && std::find(s.begin(), s.end(), Split::val) != s.end();
}

}  // namespace

void GeneratedPositives::begin_epoch(ad::Tape& tape, const EpochContext& ctx) {
  proj_ = project_attention(tape, ctx.embeddings, ctx.generator);
}

PositiveView GeneratedPositives::make(ad::Tape& tape, const EpochContext& ctx, const Subgraph& anchor) {
  auto gen = generate_subgraph(tape, anchor, ctx.graph, ctx.embeddings, proj_, ctx.config.neighborhood);
  return {gen.node_embeddings, gen.adjacency};
}

std::string format_metrics_line(const EpochMetrics& m) {
  return std::to_string(m.epoch) + '\t' + format_double(m.l1) + '\t' + format_double(m.l2) + '\t' +
         format_double(m.total) + '\t' + format_double(m.mean_dw_pos) + '\t' + format_double(m.mean_dw_neg) + '\t' +
         format_double(m.seconds);
}

Trainer::Trainer(const Graph& g, TrainConfig cfg, std::shared_ptr<PositiveSource> source)
    : graph_(g), cfg_(std::move(cfg)), source_(std::move(source)) {
  cfg_.validate();
  Rng rng = derive_stream(cfg_.seed, kInitStream);
  encoder_ = EncoderParams::init(g.feature_dim(), cfg_.dim, rng);
  generator_ = GeneratorParams::init(cfg_.dim, rng);
  if (!source_) source_ = std::make_shared<GeneratedPositives>();
  propagated_ = propagate_features(normalize_adjacency(g), g.features());
  adam_ = std::make_unique<ad::Adam>(parameters(), ad::AdamOptions{.lr = cfg_.lr});
}

Trainer::Trainer(const Graph& g, TrainConfig cfg, EncoderParams encoder, GeneratorParams generator,
                 std::shared_ptr<PositiveSource> source)
    : graph_(g), cfg_(std::move(cfg)), encoder_(std::move(encoder)), generator_(std::move(generator)),
      source_(std::move(source)) {
  cfg_.validate();
  if (encoder_.in_dim() != g.feature_dim() || encoder_.out_dim() != cfg_.dim || generator_.dim() != cfg_.dim)
    throw CheckpointError("trainer: parameter shapes do not match features " + std::to_string(g.feature_dim()) +
                          " and dim " + std::to_string(cfg_.dim));
  if (!source_) source_ = std::make_shared<GeneratedPositives>();
  propagated_ = propagate_features(normalize_adjacency(g), g.features());
  adam_ = std::make_unique<ad::Adam>(parameters(), ad::AdamOptions{.lr = cfg_.lr});
}

std::vector<ad::Tensor> Trainer::parameters() const {
  auto out = encoder_.tensors();
  for (const auto& t : generator_.tensors()) out.push_back(t);
  return out;
}

std::vector<NamedTensor> Trainer::named_parameters() const {
  std::vector<NamedTensor> out;
  encoder_.append_named(out);
  generator_.append_named(out);
  return out;
}

EpochLoss Trainer::epoch_loss(ad::Tape& tape, std::size_t epoch) {
  const std::size_t n = graph_.n_nodes();
  if (n < 2) throw ContractViolation("train: graph needs at least 2 nodes");
  const double tau = cfg_.tau;

  const ad::Tensor h = encode_propagated(tape, propagated_, encoder_);
  const EpochContext ctx{graph_, cfg_, encoder_, generator_, h, epoch};

  Rng batch_rng = derive_stream(cfg_.seed, epoch, 0);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  const std::size_t batch = std::min(cfg_.batch_size, n);
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(batch_rng)]);
  }
  order.resize(batch);
  const std::size_t anchors = std::min(cfg_.ot_subsample, batch);
  const ContrastBatch pairs = build_pairs(order, batch_rng, cfg_.negatives);

  std::unordered_map<std::size_t, SampledView> sampled;
  std::unordered_map<std::size_t, PoolView> positives;
  source_->begin_epoch(tape, ctx);

  auto sampled_view = [&](std::size_t i) -> const SampledView& {
    auto it = sampled.find(i);
    if (it != sampled.end()) return it->second;
    const std::uint32_t center = order[i];
    Rng rng = derive_stream(cfg_.seed, epoch, 1 + static_cast<std::uint64_t>(center));
    SampledView v;
    v.subgraph = bfs_sample(graph_, center, cfg_.k, rng);
    const std::vector<std::size_t> rows(v.subgraph.nodes.begin(), v.subgraph.nodes.end());
    v.node_embeddings = tape.gather_rows(h, rows);
    v.intra = ad::Tensor::from_matrix(ot::intra_distances(v.subgraph.adjacency, tau));
    return sampled.emplace(i, std::move(v)).first->second;
  };
  auto positive_view = [&](std::size_t i) -> const PoolView& {
    auto it = positives.find(i);
    if (it != positives.end()) return it->second;
    const PositiveView pv = source_->make(tape, ctx, sampled_view(i).subgraph);
    PoolView v{pv.node_embeddings, ot::intra_cost(tape, pv.adjacency, tau)};
    return positives.emplace(i, std::move(v)).first->second;
  };

  // Positive q ≥ 1 of an anchor is generated from an independent BFS sample
  // of the same center.
  auto extra_positive = [&](std::size_t i, std::size_t q) {
    const std::uint32_t center = order[i];
    Rng rng = derive_stream(cfg_.seed, epoch, 1 + static_cast<std::uint64_t>(q * n + center));
    const PositiveView pv = source_->make(tape, ctx, bfs_sample(graph_, center, cfg_.k, rng));
    return PoolView{pv.node_embeddings, ot::intra_cost(tape, pv.adjacency, tau)};
  };

  // Pairs of anchor a: the positives first, then the negatives.
  std::vector<ad::Tensor> costs;
  std::vector<ad::Tensor> c1s, c2s;
  for (std::size_t a = 0; a < anchors; ++a) {
    const SampledView& anchor = sampled_view(a);
    const PoolView& pos = positive_view(a);
    costs.push_back(ot::node_cost(tape, anchor.node_embeddings, pos.node_embeddings, tau));
    c1s.push_back(anchor.intra);
    c2s.push_back(pos.intra);
    for (std::size_t q = 1; q < cfg_.positives; ++q) {
      const PoolView extra = extra_positive(a, q);
      costs.push_back(ot::node_cost(tape, anchor.node_embeddings, extra.node_embeddings, tau));
      c1s.push_back(anchor.intra);
      c2s.push_back(extra.intra);
    }
    for (const auto& ref : pairs.negatives[a]) {
      ad::Tensor emb, intra;
      if (ref.pool == Pool::sampled) {
        const SampledView& other = sampled_view(ref.index);
        emb = other.node_embeddings;
        intra = other.intra;
      } else {
        const PoolView& other = positive_view(ref.index);
        emb = other.node_embeddings;
        intra = other.intra;
      }
      costs.push_back(ot::node_cost(tape, anchor.node_embeddings, emb, tau));
      c1s.push_back(anchor.intra);
      c2s.push_back(intra);
    }
  }

  std::vector<ot::PlanStats> stats;
  const auto plans = ot::sinkhorn_plans(tape, costs, cfg_.sinkhorn(), cfg_.plan_gradient, &stats);
  std::vector<ot::GromovTerm> terms;
  std::vector<ad::Tensor> dw;
  for (std::size_t p = 0; p < costs.size(); ++p) {
    dw.push_back(ot::wasserstein(tape, costs[p], plans[p]));
    terms.push_back({c1s[p], c2s[p], plans[p]});
  }
  const auto dgw = ot::gromov_wasserstein(tape, terms);

  const std::size_t n_pos = cfg_.positives;
  const std::size_t per_anchor = n_pos + cfg_.negatives;
  std::vector<std::vector<ad::Tensor>> wd_pos(anchors), wd_neg(anchors), gw_pos(anchors), gw_neg(anchors);
  EpochLoss out;
  double pos_sum = 0.0, neg_sum = 0.0;
  for (std::size_t a = 0; a < anchors; ++a) {
    const std::size_t base = a * per_anchor;
    for (std::size_t q = 0; q < n_pos; ++q) {
      wd_pos[a].push_back(dw[base + q]);
      gw_pos[a].push_back(dgw[base + q]);
      pos_sum += dw[base + q].item();
    }
    for (std::size_t m = n_pos; m < per_anchor; ++m) {
      wd_neg[a].push_back(dw[base + m]);
      gw_neg[a].push_back(dgw[base + m]);
      neg_sum += dw[base + m].item();
    }
  }
  out.l1 = ad::contrastive_loss(tape, wd_pos, wd_neg, tau);
  out.l2 = ad::contrastive_loss(tape, gw_pos, gw_neg, tau);
  out.total = ad::total_loss(tape, out.l1, out.l2, cfg_.lambda);
  out.anchors = anchors;
  out.mean_dw_pos = pos_sum / static_cast<double>(anchors * n_pos);
  out.mean_dw_neg = neg_sum / static_cast<double>(anchors * cfg_.negatives);
  for (const auto& s : stats)
    if (!s.converged) ++out.unconverged_plans;
  return out;
}

EpochMetrics Trainer::step(std::size_t epoch, const std::function<void(const EpochMetrics&)>& before_update) {
  const auto start = std::chrono::steady_clock::now();
  ad::Tape tape;
  const EpochLoss loss = epoch_loss(tape, epoch);
  EpochMetrics m;
  m.epoch = epoch + 1;
  m.l1 = loss.l1.item();
  m.l2 = loss.l2.item();
  m.total = loss.total.item();
  m.mean_dw_pos = loss.mean_dw_pos;
  m.mean_dw_neg = loss.mean_dw_neg;
  m.unconverged_plans = loss.unconverged_plans;
  if (before_update) before_update(m);

  tape.backward(loss.total);
  for (auto t : parameters()) t.ensure_grad();
  adam_->step();
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

Matrix embed(const Graph& g, const EncoderParams& p) {
  if (p.in_dim() != g.feature_dim())
    throw CheckpointError("embed: checkpoint expects " + std::to_string(p.in_dim()) + " input features, graph has " +
                          std::to_string(g.feature_dim()));
  ad::Tape tape;
  return encode_propagated(tape, propagate_features(normalize_adjacency(g), g.features()), p).to_matrix();
}

void write_metrics_log(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& m : metrics) out << format_metrics_line(m) << '\n';
}

TrainResult train(const Graph& g, const TrainConfig& cfg, const TrainOptions& opts) {
  Trainer trainer(g, cfg, opts.source);
  TrainResult res;
  const bool use_val = has_validation(g);
  res.selection = use_val ? "val" : "loss";
  res.best = snapshot(trainer.named_parameters());
  double best_score = -std::numeric_limits<double>::infinity();
  auto val_accuracy = [&] {
    return linear_probe(embed(g, trainer.encoder()), *g.labels(), *g.splits(), ProbeConfig{}, Split::val).accuracy;
  };
  if (use_val) best_score = val_accuracy();

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    auto m = trainer.step(e, [&](const EpochMetrics& pre) {
      if (!use_val && -pre.total > best_score) {
        best_score = -pre.total;
        res.best = snapshot(trainer.named_parameters());
        res.best_epoch = pre.epoch - 1;
      }
    });
    if (use_val) {
      const double acc = val_accuracy();
      if (acc > best_score) {
        best_score = acc;
        res.best = snapshot(trainer.named_parameters());
        res.best_epoch = m.epoch;
      }
    }
    if (opts.progress)
      *opts.progress << "epoch " << m.epoch << " total " << format_double(m.total) << " unconverged "
                     << m.unconverged_plans << '\n';
    res.metrics.push_back(m);
  }

  res.encoder = trainer.encoder();
  res.generator = trainer.generator();
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    save_checkpoint(opts.out_dir / "checkpoint.ckpt", res.best);
    save_checkpoint(opts.out_dir / "final.ckpt", trainer.named_parameters());
    write_metrics_log(opts.out_dir / "metrics.tsv", res.metrics);
  }
  return res;
}

}  // namespace gsc
