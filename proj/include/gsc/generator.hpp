#pragma once

// Adaptive subgraph generation.
//
// Every node i of a sampled subgraph is replaced by an attention-weighted
// interpolation of its neighbors' embeddings,
//
//   ĥ_i = Σ_{j∈N(i)} a_j h_j,   a = softmax_j θ(h_i, h_j),
//   θ(h_i, h_j) = LeakyReLU_0.2(W_θ [W_φ h_i ‖ W_φ h_j]),
//
// and the generated edges are the pairwise cosine similarities of the ĥ rows.

#include <cstdint>
#include <span>
#include <vector>

#include "gsc/checkpoint.hpp"
#include "gsc/graph.hpp"
#include "gsc/sampler.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

struct GeneratorParams {
  ad::Tensor w_theta;  // 1×2F
  ad::Tensor w_phi;    // F×F

  static GeneratorParams init(std::size_t dim, Rng& rng);
  std::size_t dim() const { return w_phi.rows(); }
  std::vector<ad::Tensor> tensors() const { return {w_theta, w_phi}; }
  void append_named(std::vector<NamedTensor>& out) const;
  static GeneratorParams from_named(const std::vector<NamedTensor>& tensors);
};

// Which nodes a subgraph node interpolates from.
enum class Neighborhood {
  graph,     // full 1-hop neighborhood in the graph
  subgraph,  // 1-hop neighbors that are also inside the sampled subgraph
};

// θ(h_i, h_j) for two 1×F rows; returns 1×1.
ad::Tensor attention_score(ad::Tape& tape, const ad::Tensor& h_i, const ad::Tensor& h_j, const GeneratorParams& p);

// W_θ splits into a source half acting on W_φ h_i and a target half acting on
// W_φ h_j, so θ(h_i, h_j) = LeakyReLU(source_i + target_j). Both are N×1 and
// are computed once per forward pass for every node.
struct AttentionProjections {
  ad::Tensor source;
  ad::Tensor target;
};
AttentionProjections project_attention(ad::Tape& tape, const ad::Tensor& embeddings, const GeneratorParams& p);

// N(i) under the chosen rule. An isolated node (or one with no neighbor inside
// the subgraph) falls back to {i}.
std::vector<std::uint32_t> interpolation_neighborhood(const Graph& g, std::uint32_t node, Neighborhood rule,
                                                      std::span<const std::uint32_t> subgraph_nodes = {});

// softmax over `neighbors` of θ(h_node, h_j); |neighbors|×1.
ad::Tensor relation_weights(ad::Tape& tape, std::uint32_t node, std::span<const std::uint32_t> neighbors,
                            const AttentionProjections& proj);
ad::Tensor relation_weights(ad::Tape& tape, std::uint32_t node, const Graph& g, const ad::Tensor& embeddings,
                            const GeneratorParams& p);

// Σ_j w_j rows_j for weights d×1 and rows d×F; returns 1×F.
ad::Tensor interpolate_node(ad::Tape& tape, const ad::Tensor& weights, const ad::Tensor& neighbor_rows);

// Cosine-similarity adjacency of k×F node rows; zero rows give 0 entries and
// are counted in *zero_rows.
ad::Tensor generate_edges(ad::Tape& tape, const ad::Tensor& node_embeddings, std::size_t* zero_rows = nullptr);

struct GeneratedSubgraph {
  std::uint32_t center = 0;
  std::vector<std::uint32_t> nodes;       // source nodes, index-aligned with the embedding rows
  ad::Tensor node_embeddings;             // k×F, row i generated for nodes[i]
  ad::Tensor adjacency;                   // k×k cosine similarities
  std::vector<ad::Tensor> weights;        // per node, the relation weights used
  std::size_t zero_norm_rows = 0;

  std::size_t size() const noexcept { return nodes.size(); }
};

GeneratedSubgraph generate_subgraph(ad::Tape& tape, const Subgraph& s, const Graph& g, const ad::Tensor& embeddings,
                                    const AttentionProjections& proj, Neighborhood rule = Neighborhood::graph);
GeneratedSubgraph generate_subgraph(ad::Tape& tape, const Subgraph& s, const Graph& g, const ad::Tensor& embeddings,
                                    const GeneratorParams& p, Neighborhood rule = Neighborhood::graph);

}  // namespace gsc
