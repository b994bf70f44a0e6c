#include "gsc/generator.hpp"

#include <algorithm>

#include "gsc/encoder.hpp"
#include "gsc/errors.hpp"

namespace gsc {

GeneratorParams GeneratorParams::init(std::size_t dim, Rng& rng) {
  GeneratorParams p;
  p.w_theta = glorot(1, 2 * dim, rng);
  p.w_phi = glorot(dim, dim, rng);
  return p;
}

void GeneratorParams::append_named(std::vector<NamedTensor>& out) const {
  out.push_back({"generator.w_theta", w_theta});
  out.push_back({"generator.w_phi", w_phi});
}

GeneratorParams GeneratorParams::from_named(const std::vector<NamedTensor>& tensors) {
  GeneratorParams p;
  for (const auto& nt : tensors) {
    if (nt.name == "generator.w_theta") p.w_theta = nt.tensor;
    if (nt.name == "generator.w_phi") p.w_phi = nt.tensor;
  }
  if (!p.w_theta.defined() || !p.w_phi.defined()) throw CheckpointError("checkpoint lacks generator tensors");
  if (p.w_phi.rank() != 2 || p.w_phi.rows() != p.w_phi.cols() || p.w_theta.numel() != 2 * p.w_phi.rows())
    throw CheckpointError("generator tensors have inconsistent shapes");
  return p;
}

ad::Tensor attention_score(ad::Tape& tape, const ad::Tensor& h_i, const ad::Tensor& h_j, const GeneratorParams& p) {
  if (h_i.rows() != 1 || h_j.rows() != 1 || h_i.cols() != p.dim() || h_j.cols() != p.dim())
    throw DimensionError("attention_score", "expected two 1x" + std::to_string(p.dim()) + " rows");
  const ad::Tensor pi = tape.matmul_nt(h_i, p.w_phi);
  const ad::Tensor pj = tape.matmul_nt(h_j, p.w_phi);
  return tape.leaky_relu(tape.matmul_nt(tape.concat_cols(pi, pj), p.w_theta), 0.2);
}

AttentionProjections project_attention(ad::Tape& tape, const ad::Tensor& embeddings, const GeneratorParams& p) {
  const std::size_t f = p.dim();
  if (embeddings.cols() != f)
    throw DimensionError("project_attention", "embedding dim " + std::to_string(embeddings.cols()) + " vs " +
                                                  std::to_string(f));
  const ad::Tensor projected = tape.matmul_nt(embeddings, p.w_phi);  // rows are (W_φ h)ᵀ
  AttentionProjections out;
  out.source = tape.matmul_nt(projected, tape.slice_cols(p.w_theta, 0, f));
  out.target = tape.matmul_nt(projected, tape.slice_cols(p.w_theta, f, 2 * f));
  return out;
}

std::vector<std::uint32_t> interpolation_neighborhood(const Graph& g, std::uint32_t node, Neighborhood rule,
                                                      std::span<const std::uint32_t> subgraph_nodes) {
  std::vector<std::uint32_t> out;
  const auto nb = g.neighbors(node);
  if (rule == Neighborhood::graph) {
    out.assign(nb.begin(), nb.end());
  } else {
    for (auto j : nb)
      if (std::find(subgraph_nodes.begin(), subgraph_nodes.end(), j) != subgraph_nodes.end()) out.push_back(j);
  }
  if (out.empty()) out.push_back(node);
  return out;
}

ad::Tensor relation_weights(ad::Tape& tape, std::uint32_t node, std::span<const std::uint32_t> neighbors,
                            const AttentionProjections& proj) {
  if (neighbors.empty()) throw ContractViolation("relation_weights: empty neighborhood");
  const std::size_t self[] = {node};
  const std::vector<std::size_t> idx(neighbors.begin(), neighbors.end());
  const ad::Tensor src = tape.gather_rows(proj.source, self);
  const ad::Tensor dst = tape.gather_rows(proj.target, idx);
  return tape.softmax(tape.leaky_relu(tape.add_broadcast(dst, src), 0.2));
}

ad::Tensor relation_weights(ad::Tape& tape, std::uint32_t node, const Graph& g, const ad::Tensor& embeddings,
                            const GeneratorParams& p) {
  const auto nbrs = interpolation_neighborhood(g, node, Neighborhood::graph);
  return relation_weights(tape, node, nbrs, project_attention(tape, embeddings, p));
}

ad::Tensor interpolate_node(ad::Tape& tape, const ad::Tensor& weights, const ad::Tensor& neighbor_rows) {
  if (weights.numel() != neighbor_rows.rows())
    throw ContractViolation("interpolate_node: " + std::to_string(weights.numel()) + " weights for " +
                            std::to_string(neighbor_rows.rows()) + " rows");
  const ad::Tensor row = weights.rows() == 1 ? weights : tape.transpose(weights);
  return tape.matmul(row, neighbor_rows);
}

ad::Tensor generate_edges(ad::Tape& tape, const ad::Tensor& node_embeddings, std::size_t* zero_rows) {
  return ad::cosine_matrix(tape, node_embeddings, node_embeddings, zero_rows);
}

GeneratedSubgraph generate_subgraph(ad::Tape& tape, const Subgraph& s, const Graph& g, const ad::Tensor& embeddings,
                                    const AttentionProjections& proj, Neighborhood rule) {
  if (s.nodes.empty()) throw ContractViolation("generate_subgraph: empty subgraph");
  if (embeddings.rows() != g.n_nodes())
    throw DimensionError("generate_subgraph", "embedding rows " + std::to_string(embeddings.rows()) + " vs nodes " +
                                                  std::to_string(g.n_nodes()));
  GeneratedSubgraph out;
  out.center = s.center;
  out.nodes = s.nodes;
  std::vector<ad::Tensor> rows;
  rows.reserve(s.nodes.size());
  for (auto node : s.nodes) {
    const auto nbrs = interpolation_neighborhood(g, node, rule, s.nodes);
    const std::vector<std::size_t> idx(nbrs.begin(), nbrs.end());
    ad::Tensor w = relation_weights(tape, node, nbrs, proj);
    rows.push_back(interpolate_node(tape, w, tape.gather_rows(embeddings, idx)));
    out.weights.push_back(std::move(w));
  }
  out.node_embeddings = tape.concat_rows(rows);
  out.adjacency = generate_edges(tape, out.node_embeddings, &out.zero_norm_rows);
  return out;
}

GeneratedSubgraph generate_subgraph(ad::Tape& tape, const Subgraph& s, const Graph& g, const ad::Tensor& embeddings,
                                    const GeneratorParams& p, Neighborhood rule) {
  return generate_subgraph(tape, s, g, embeddings, project_attention(tape, embeddings, p), rule);
}

}  // namespace gsc
