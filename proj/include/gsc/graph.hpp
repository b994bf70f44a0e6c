#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsc/kernels.hpp"
#include "gsc/matrix.hpp"

namespace gsc {

enum class Split : std::uint8_t { none, train, val, test };

std::string_view split_name(Split s);

// Immutable undirected attributed graph. Adjacency is a symmetric 0/1 CSR
// structure with sorted neighbor lists and an empty diagonal.
class Graph {
 public:
  Graph() = default;

  // Validates and builds the graph. Edges may repeat or appear in both
  // directions; self loops and out-of-range ids throw ContractViolation.
  static Graph from_edges(std::size_t n_nodes, std::span<const std::pair<std::uint32_t, std::uint32_t>> edges,
                          Matrix features, std::optional<std::vector<int>> labels = std::nullopt,
                          std::optional<std::vector<Split>> splits = std::nullopt);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_edges() const noexcept { return adjacency_.nnz() / 2; }
  std::size_t feature_dim() const noexcept { return features_.cols; }

  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {adjacency_.col_idx.data() + adjacency_.row_ptr[i], adjacency_.row_ptr[i + 1] - adjacency_.row_ptr[i]};
  }
  std::size_t degree(std::size_t i) const { return adjacency_.row_ptr[i + 1] - adjacency_.row_ptr[i]; }
  bool has_edge(std::size_t i, std::size_t j) const { return adjacency_.at(i, j) != 0.0; }

  const kernels::CsrMatrix& adjacency() const noexcept { return adjacency_; }
  const Matrix& features() const noexcept { return features_; }
  const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }
  const std::optional<std::vector<Split>>& splits() const noexcept { return splits_; }

  // Undirected edge list with src < dst, in row-major order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const;

 private:
  std::size_t n_nodes_ = 0;
  kernels::CsrMatrix adjacency_;
  Matrix features_;
  std::optional<std::vector<int>> labels_;
  std::optional<std::vector<Split>> splits_;
};

// Reads the text formats:
//   edges     "src<TAB>dst" per line, 0-based, undirected
//   features  N lines of C comma-separated floats
//   labels    N lines, one integer each
//   splits    N lines "node_id<TAB>train|val|test"
// Throws IngestionError naming the file and line.
Graph load_graph(const std::filesystem::path& edges_path, const std::filesystem::path& features_path,
                 const std::optional<std::filesystem::path>& labels_path = std::nullopt,
                 const std::optional<std::filesystem::path>& splits_path = std::nullopt);

Matrix read_features(const std::filesystem::path& path);
std::vector<int> read_labels(const std::filesystem::path& path, std::size_t n_nodes);
std::vector<Split> read_splits(const std::filesystem::path& path, std::size_t n_nodes);

void write_edges(const std::filesystem::path& path, const Graph& g);
void write_features(const std::filesystem::path& path, const Matrix& features);
void write_labels(const std::filesystem::path& path, std::span<const int> labels);
void write_splits(const std::filesystem::path& path, std::span<const Split> splits);

// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I.
kernels::CsrMatrix normalize_adjacency(const Graph& g);

// Ordered node list with its induced 0/1 adjacency. node_embeddings rows follow
// the node order when populated.
struct Subgraph {
  std::uint32_t center = 0;
  std::vector<std::uint32_t> nodes;
  Matrix adjacency;
  Matrix node_embeddings;

  std::size_t size() const noexcept { return nodes.size(); }
};

Matrix induced_adjacency(const Graph& g, std::span<const std::uint32_t> nodes);

// Adjacency restricted to `nodes` in the listed order, embedding rows gathered
// in the same order. Pass an empty matrix to skip the gather.
Subgraph induced_subgraph(const Graph& g, std::span<const std::uint32_t> nodes, const Matrix& embeddings);

// Shortest round-trip decimal rendering used by every text writer.
std::string format_double(double v);

}  // namespace gsc
