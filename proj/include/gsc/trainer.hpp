#pragma once

// Self-supervised training loop.
//
// Each epoch encodes the whole graph, draws batch_size distinct centers,
// BFS-samples their subgraphs and contrasts the first ot_subsample of them
// against their positives and M negatives from the batch. Every random draw
// comes from a stream derived from (seed, epoch, purpose), so an epoch's loss
// depends only on the seed, the epoch index and the current parameters.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gsc/adam.hpp"
#include "gsc/checkpoint.hpp"
#include "gsc/config.hpp"
#include "gsc/encoder.hpp"
#include "gsc/generator.hpp"
#include "gsc/graph.hpp"
#include "gsc/probe.hpp"

namespace gsc {

struct EpochContext {
  const Graph& graph;
  const TrainConfig& config;
  const EncoderParams& encoder;
  const GeneratorParams& generator;
  ad::Tensor embeddings;  // N×F, this epoch's encoding
  std::size_t epoch;
};

// Counterpart of a sampled subgraph used as its positive and as a member of
// the generated negative pool.
struct PositiveView {
  ad::Tensor node_embeddings;  // k'×F
  ad::Tensor adjacency;        // k'×k', the values entering exp(-A/τ)
};

class PositiveSource {
 public:
  virtual ~PositiveSource() = default;
  virtual void begin_epoch(ad::Tape& tape, const EpochContext& ctx) = 0;
  virtual PositiveView make(ad::Tape& tape, const EpochContext& ctx, const Subgraph& anchor) = 0;
};

// Attention-interpolated generated subgraphs.
class GeneratedPositives final : public PositiveSource {
 public:
  void begin_epoch(ad::Tape& tape, const EpochContext& ctx) override;
  PositiveView make(ad::Tape& tape, const EpochContext& ctx, const Subgraph& anchor) override;

 private:
  AttentionProjections proj_;
};

struct EpochLoss {
  ad::Tensor l1;
  ad::Tensor l2;
  ad::Tensor total;
  double mean_dw_pos = 0.0;
  double mean_dw_neg = 0.0;
  std::size_t anchors = 0;
  std::size_t unconverged_plans = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  double mean_dw_pos = 0.0;
  double mean_dw_neg = 0.0;
  double seconds = 0.0;
  std::size_t unconverged_plans = 0;
};

// "epoch\tl1\tl2\ttotal\tmean_Dw_pos\tmean_Dw_neg\tseconds"
std::string format_metrics_line(const EpochMetrics& m);

class Trainer {
 public:
  // Parameters initialised from the config seed.
  Trainer(const Graph& g, TrainConfig cfg, std::shared_ptr<PositiveSource> source = nullptr);
  Trainer(const Graph& g, TrainConfig cfg, EncoderParams encoder, GeneratorParams generator,
          std::shared_ptr<PositiveSource> source = nullptr);

  // Forward pass of epoch `epoch` (0-based) on `tape`.
  EpochLoss epoch_loss(ad::Tape& tape, std::size_t epoch);

  // Forward, backward and one Adam update. `before_update` sees the loss
  // while the parameters still hold the values that produced it.
  EpochMetrics step(std::size_t epoch, const std::function<void(const EpochMetrics&)>& before_update = {});

  const EncoderParams& encoder() const noexcept { return encoder_; }
  const GeneratorParams& generator() const noexcept { return generator_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  std::vector<ad::Tensor> parameters() const;
  std::vector<NamedTensor> named_parameters() const;

 private:
  const Graph& graph_;
  TrainConfig cfg_;
  ad::Tensor propagated_;
  EncoderParams encoder_;
  GeneratorParams generator_;
  std::shared_ptr<PositiveSource> source_;
  std::unique_ptr<ad::Adam> adam_;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: nothing is written
  std::shared_ptr<PositiveSource> source;
  std::ostream* progress = nullptr;
};

struct TrainResult {
  EncoderParams encoder;  // final parameters
  GeneratorParams generator;
  std::vector<EpochMetrics> metrics;
  std::vector<NamedTensor> best;  // selected checkpoint
  std::size_t best_epoch = 0;     // 0 = initial parameters
  std::string selection;          // "val" or "loss"
};

// Writes checkpoint.ckpt (selected), final.ckpt and metrics.tsv into out_dir.
// Selection uses validation probe accuracy when the graph has labels with
// train and val nodes, the lowest epoch loss otherwise.
TrainResult train(const Graph& g, const TrainConfig& cfg, const TrainOptions& opts = {});

// N×F embeddings; throws CheckpointError when the encoder input width does
// not match the features.
Matrix embed(const Graph& g, const EncoderParams& p);

void write_metrics_log(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics);

}  // namespace gsc
