#pragma once

// Perturbation baseline: the positive of a subgraph is the same node set
// encoded on a copy of the graph with a fixed fraction of edges removed.

#include <algorithm>
#include <cmath>
#include <memory>

#include "gsc/encoder.hpp"
#include "gsc/sampler.hpp"
#include "gsc/trainer.hpp"

namespace gsc::testing {

class EdgeDropPositives final : public PositiveSource {
 public:
  explicit EdgeDropPositives(double rate) : rate_(rate) {}

  void begin_epoch(ad::Tape& tape, const EpochContext& ctx) override {
    auto edges = ctx.graph.edge_list();
    Rng rng = derive_stream(ctx.config.seed, ctx.epoch, std::uint64_t{1} << 63);
    std::shuffle(edges.begin(), edges.end(), rng);
    const auto drop = static_cast<std::size_t>(std::floor(rate_ * static_cast<double>(edges.size())));
    edges.erase(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(drop));
    perturbed_ = std::make_unique<Graph>(Graph::from_edges(ctx.graph.n_nodes(), edges, ctx.graph.features()));
    const auto norm = normalize_adjacency(*perturbed_);
    embeddings_ = encode_propagated(tape, propagate_features(norm, perturbed_->features()), ctx.encoder);
  }

  PositiveView make(ad::Tape& tape, const EpochContext&, const Subgraph& anchor) override {
    const std::vector<std::size_t> rows(anchor.nodes.begin(), anchor.nodes.end());
    return {tape.gather_rows(embeddings_, rows),
            ad::Tensor::from_matrix(induced_adjacency(*perturbed_, anchor.nodes))};
  }

 private:
  double rate_;
  std::unique_ptr<Graph> perturbed_;
  ad::Tensor embeddings_;
};

}  // namespace gsc::testing
