#include "gsc/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "gsc/errors.hpp"

namespace gsc {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IngestionError(path.string(), 0, "cannot open file");
  return f;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && !tok.empty();
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::none: break;
  }
  return "none";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------

Graph Graph::from_edges(std::size_t n_nodes, std::span<const std::pair<std::uint32_t, std::uint32_t>> edges,
                        Matrix features, std::optional<std::vector<int>> labels,
                        std::optional<std::vector<Split>> splits) {
  if (features.rows != n_nodes)
    throw ContractViolation("feature rows " + std::to_string(features.rows) + " != n_nodes " + std::to_string(n_nodes));
  if (labels && labels->size() != n_nodes) throw ContractViolation("label count does not match n_nodes");
  if (splits && splits->size() != n_nodes) throw ContractViolation("split count does not match n_nodes");

  std::vector<std::vector<std::uint32_t>> adj(n_nodes);
  for (const auto& [u, v] : edges) {
    if (u >= n_nodes || v >= n_nodes)
      throw ContractViolation("edge (" + std::to_string(u) + "," + std::to_string(v) + ") outside node range");
    if (u == v) throw ContractViolation("self loop on node " + std::to_string(u));
    adj[u].push_back(v);
    adj[v].push_back(u);
  }

  Graph g;
  g.n_nodes_ = n_nodes;
  auto& csr = g.adjacency_;
  csr.rows = csr.cols = n_nodes;
  csr.row_ptr.assign(n_nodes + 1, 0);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto& nb = adj[i];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    csr.col_idx.insert(csr.col_idx.end(), nb.begin(), nb.end());
    csr.row_ptr[i + 1] = csr.col_idx.size();
  }
  csr.values.assign(csr.col_idx.size(), 1.0);
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.splits_ = std::move(splits);
  return g;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Graph::edge_list() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(n_edges());
  for (std::size_t i = 0; i < n_nodes_; ++i)
    for (auto j : neighbors(i))
      if (i < j) out.emplace_back(static_cast<std::uint32_t>(i), j);
  return out;
}

// ---------------------------------------------------------------------------
// Readers

Matrix read_features(const std::filesystem::path& path) {
  auto f = open_input(path);
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(f, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    std::size_t count = 0, start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      const auto tok = body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      double v = 0.0;
      if (!parse_number(tok, v)) throw IngestionError(path.string(), line_no, "bad float '" + std::string(tok) + "'");
      if (!std::isfinite(v)) throw IngestionError(path.string(), line_no, "non-finite feature value");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols)
      throw IngestionError(path.string(), line_no,
                           "expected " + std::to_string(cols) + " columns, got " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw IngestionError(path.string(), 0, "no feature rows");
  return Matrix(rows, cols, std::move(values));
}

std::vector<int> read_labels(const std::filesystem::path& path, std::size_t n_nodes) {
  auto f = open_input(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    int y = 0;
    if (!parse_number(body, y) || y < 0)
      throw IngestionError(path.string(), line_no, "bad label '" + std::string(body) + "'");
    labels.push_back(y);
  }
  if (labels.size() != n_nodes)
    throw IngestionError(path.string(), 0,
                         "expected " + std::to_string(n_nodes) + " labels, got " + std::to_string(labels.size()));
  return labels;
}

std::vector<Split> read_splits(const std::filesystem::path& path, std::size_t n_nodes) {
  auto f = open_input(path);
  std::vector<Split> splits(n_nodes, Split::none);
  std::vector<bool> seen(n_nodes, false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto toks = split_ws(body);
    long long id = -1;
    if (toks.size() != 2 || !parse_number(toks[0], id))
      throw IngestionError(path.string(), line_no, "expected 'node_id<TAB>split'");
    if (id < 0 || static_cast<std::size_t>(id) >= n_nodes)
      throw IngestionError(path.string(), line_no, "node id " + std::to_string(id) + " out of range");
    Split s;
    if (toks[1] == "train") s = Split::train;
    else if (toks[1] == "val") s = Split::val;
    else if (toks[1] == "test") s = Split::test;
    else throw IngestionError(path.string(), line_no, "unknown split '" + std::string(toks[1]) + "'");
    if (seen[static_cast<std::size_t>(id)])
      throw IngestionError(path.string(), line_no, "node " + std::to_string(id) + " listed twice");
    seen[static_cast<std::size_t>(id)] = true;
    splits[static_cast<std::size_t>(id)] = s;
  }
  return splits;
}

Graph load_graph(const std::filesystem::path& edges_path, const std::filesystem::path& features_path,
                 const std::optional<std::filesystem::path>& labels_path,
                 const std::optional<std::filesystem::path>& splits_path) {
  Matrix features = read_features(features_path);
  const std::size_t n = features.rows;

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  auto f = open_input(edges_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto toks = split_ws(body);
    long long u = 0, v = 0;
    if (toks.size() != 2 || !parse_number(toks[0], u) || !parse_number(toks[1], v))
      throw IngestionError(edges_path.string(), line_no, "expected 'src<TAB>dst'");
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
      throw IngestionError(edges_path.string(), line_no,
                           "node id out of range [0," + std::to_string(n) + "): " + std::to_string(u) + " " +
                               std::to_string(v));
    if (u == v) throw IngestionError(edges_path.string(), line_no, "self loop on node " + std::to_string(u));
    edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
  }

  std::optional<std::vector<int>> labels;
  if (labels_path) labels = read_labels(*labels_path, n);
  std::optional<std::vector<Split>> splits;
  if (splits_path) splits = read_splits(*splits_path, n);
  return Graph::from_edges(n, edges, std::move(features), std::move(labels), std::move(splits));
}

// ---------------------------------------------------------------------------
// Writers

void write_edges(const std::filesystem::path& path, const Graph& g) {
  auto f = open_output(path);
  for (const auto& [u, v] : g.edge_list()) f << u << '\t' << v << '\n';
}

void write_features(const std::filesystem::path& path, const Matrix& features) {
  auto f = open_output(path);
  std::string line;
  for (std::size_t i = 0; i < features.rows; ++i) {
    line.clear();
    for (std::size_t j = 0; j < features.cols; ++j) {
      if (j) line += ',';
      line += format_double(features(i, j));
    }
    line += '\n';
    f << line;
  }
}

void write_labels(const std::filesystem::path& path, std::span<const int> labels) {
  auto f = open_output(path);
  for (int y : labels) f << y << '\n';
}

void write_splits(const std::filesystem::path& path, std::span<const Split> splits) {
  auto f = open_output(path);
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] != Split::none) f << i << '\t' << split_name(splits[i]) << '\n';
}

// ---------------------------------------------------------------------------

kernels::CsrMatrix normalize_adjacency(const Graph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));

  kernels::CsrMatrix out;
  out.rows = out.cols = n;
  out.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    bool placed_self = false;
    for (auto j : g.neighbors(i)) {
      if (!placed_self && j > i) {
        out.col_idx.push_back(static_cast<std::uint32_t>(i));
        out.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
        placed_self = true;
      }
      out.col_idx.push_back(j);
      out.values.push_back(inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!placed_self) {
      out.col_idx.push_back(static_cast<std::uint32_t>(i));
      out.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
    }
    out.row_ptr[i + 1] = out.col_idx.size();
  }
  return out;
}

Matrix induced_adjacency(const Graph& g, std::span<const std::uint32_t> nodes) {
  const std::size_t k = nodes.size();
  std::unordered_set<std::uint32_t> seen;
  for (auto v : nodes) {
    if (v >= g.n_nodes()) throw ContractViolation("induced_subgraph: node " + std::to_string(v) + " out of range");
    if (!seen.insert(v).second) throw ContractViolation("induced_subgraph: duplicate node " + std::to_string(v));
  }
  Matrix a(k, k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = p + 1; q < k; ++q)
      if (g.has_edge(nodes[p], nodes[q])) a(p, q) = a(q, p) = 1.0;
  return a;
}

Subgraph induced_subgraph(const Graph& g, std::span<const std::uint32_t> nodes, const Matrix& embeddings) {
  if (nodes.empty()) throw ContractViolation("induced_subgraph: empty node list");
  Subgraph s;
  s.center = nodes.front();
  s.nodes.assign(nodes.begin(), nodes.end());
  s.adjacency = induced_adjacency(g, nodes);
  if (!embeddings.empty()) {
    if (embeddings.rows != g.n_nodes())
      throw DimensionError("induced_subgraph", "embedding rows " + std::to_string(embeddings.rows) +
                                                   " != nodes " + std::to_string(g.n_nodes()));
    s.node_embeddings = Matrix(nodes.size(), embeddings.cols);
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      const auto src = embeddings.row(nodes[p]);
      std::copy(src.begin(), src.end(), s.node_embeddings.row(p).begin());
    }
  }
  return s;
}

}  // namespace gsc
