#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include "gsc/errors.hpp"
#include "gsc/graph.hpp"
#include "support/testing.hpp"

namespace gsc {
namespace {

using testing::TempDir;
using testing::write_file;

Matrix dense(const kernels::CsrMatrix& s) {
  Matrix d(s.rows, s.cols);
  for (std::size_t i = 0; i < s.rows; ++i)
    for (std::size_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) d(i, s.col_idx[p]) = s.values[p];
  return d;
}

Graph load_text(const TempDir& dir, const std::string& edges, const std::string& features) {
  write_file(dir / "e.tsv", edges);
  write_file(dir / "f.csv", features);
  return load_graph(dir / "e.tsv", dir / "f.csv");
}

TEST(GraphLoad, SingleEdge) {
  TempDir dir("graph");
  const Graph g = load_text(dir, "0 1\n", "1,0\n0,1\n");
  EXPECT_EQ(dense(g.adjacency()), Matrix(2, 2, std::vector<double>{0, 1, 1, 0}));
  EXPECT_EQ(g.n_edges(), 1u);
}

TEST(GraphLoad, DuplicatesAndReversedEdgesCollapse) {
  TempDir dir("graph");
  const Graph a = load_text(dir, "0\t1\n1\t0\n0\t1\n", "1,0\n0,1\n");
  EXPECT_EQ(dense(a.adjacency()), Matrix(2, 2, std::vector<double>{0, 1, 1, 0}));
  EXPECT_EQ(a.n_edges(), 1u);
}

TEST(GraphLoad, OutOfRangeNodeReportsLine) {
  TempDir dir("graph");
  try {
    load_text(dir, "0\t5\n", "1\n2\n3\n");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(e.path().find("e.tsv"), std::string::npos);
  }
  try {
    load_text(dir, "0\t1\n-1\t2\n", "1\n2\n3\n");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(GraphLoad, SelfLoopIsRejected) {
  TempDir dir("graph");
  EXPECT_THROW(load_text(dir, "0\t1\n2\t2\n", "1\n2\n3\n"), IngestionError);
}

TEST(GraphLoad, RaggedOrNonNumericFeaturesAreRejected) {
  TempDir dir("graph");
  EXPECT_THROW(load_text(dir, "0\t1\n", "1,0\n0\n"), IngestionError);
  EXPECT_THROW(load_text(dir, "0\t1\n", "1,0\n0,x\n"), IngestionError);
}

TEST(GraphLoad, LabelCountMismatchIsRejected) {
  TempDir dir("graph");
  write_file(dir / "e.tsv", "0\t1\n");
  write_file(dir / "f.csv", "1\n2\n3\n");
  write_file(dir / "l.txt", "0\n1\n");
  EXPECT_THROW(load_graph(dir / "e.tsv", dir / "f.csv", dir / "l.txt"), IngestionError);
}

TEST(GraphLoad, MissingFileNamesThePath) {
  try {
    load_graph("/no/such/edges.tsv", "/no/such/features.csv");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("/no/such/"), std::string::npos);
  }
}

TEST(GraphLoad, SplitsParse) {
  TempDir dir("graph");
  write_file(dir / "e.tsv", "0\t1\n");
  write_file(dir / "f.csv", "1\n2\n3\n");
  write_file(dir / "s.tsv", "2\ttest\n0\ttrain\n1\tval\n");
  const Graph g = load_graph(dir / "e.tsv", dir / "f.csv", std::nullopt, dir / "s.tsv");
  ASSERT_TRUE(g.splits());
  EXPECT_EQ(*g.splits(), (std::vector<Split>{Split::train, Split::val, Split::test}));
  write_file(dir / "s.tsv", "0\tholdout\n");
  EXPECT_THROW(load_graph(dir / "e.tsv", dir / "f.csv", std::nullopt, dir / "s.tsv"), IngestionError);
}

TEST(GraphLoad, WritersRoundTrip) {
  TempDir dir("graph");
  std::mt19937_64 rng(8);
  Graph g = testing::random_graph(12, 0.3, 3, rng);
  std::vector<int> labels(12);
  std::vector<Split> splits(12);
  for (std::size_t i = 0; i < 12; ++i) {
    labels[i] = static_cast<int>(i % 3);
    splits[i] = i < 4 ? Split::train : i < 6 ? Split::val : Split::test;
  }
  write_edges(dir / "e.tsv", g);
  write_features(dir / "f.csv", g.features());
  write_labels(dir / "l.txt", labels);
  write_splits(dir / "s.tsv", splits);
  const Graph back = load_graph(dir / "e.tsv", dir / "f.csv", dir / "l.txt", dir / "s.tsv");
  EXPECT_EQ(back.edge_list(), g.edge_list());
  EXPECT_EQ(back.features(), g.features());
  EXPECT_EQ(*back.labels(), labels);
  EXPECT_EQ(*back.splits(), splits);
}

TEST(GraphBuild, FromEdgesRejectsSelfLoopsAndRange) {
  EXPECT_THROW(Graph::from_edges(2, testing::EdgeList{{0, 0}}, Matrix(2, 1)), ContractViolation);
  EXPECT_THROW(Graph::from_edges(2, testing::EdgeList{{0, 2}}, Matrix(2, 1)), ContractViolation);
  EXPECT_THROW(Graph::from_edges(3, testing::EdgeList{{0, 1}}, Matrix(2, 1)), ContractViolation);
}

TEST(GraphBuild, AdjacencyIsSymmetricZeroOneWithEmptyDiagonal) {
  std::mt19937_64 rng(2);
  const Graph g = testing::random_graph(30, 0.2, 2, rng);
  const Matrix a = dense(g.adjacency());
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(a(i, i), 0.0);
    for (std::size_t j = 0; j < 30; ++j) {
      EXPECT_EQ(a(i, j), a(j, i));
      EXPECT_TRUE(a(i, j) == 0.0 || a(i, j) == 1.0);
    }
  }
}

TEST(NormalizeAdjacency, IsolatedNode) {
  const Graph g = testing::make_graph(1, {});
  EXPECT_EQ(dense(normalize_adjacency(g)), Matrix(1, 1, 1.0));
}

TEST(NormalizeAdjacency, ConnectedPair) {
  const Graph g = testing::path_graph(2);
  const Matrix a = dense(normalize_adjacency(g));
  for (double v : a.data) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(NormalizeAdjacency, PathOfThreeMatchesHandComputation) {
  const Matrix a = dense(normalize_adjacency(testing::path_graph(3)));
  const double d[] = {2, 3, 2};
  const double adj[3][3] = {{1, 1, 0}, {1, 1, 1}, {0, 1, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(a(i, j), adj[i][j] / std::sqrt(d[i] * d[j]), 1e-15);
}

TEST(NormalizeAdjacency, SymmetricWithEntriesInUnitInterval) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = testing::random_graph(25, 0.15, 1, rng);
    const Matrix a = dense(normalize_adjacency(g));
    for (std::size_t i = 0; i < 25; ++i)
      for (std::size_t j = 0; j < 25; ++j) {
        EXPECT_NEAR(a(i, j), a(j, i), 1e-12);
        EXPECT_GE(a(i, j), 0.0);
        EXPECT_LE(a(i, j), 1.0);
      }
  }
}

TEST(InducedSubgraph, SingleNode) {
  const auto s = induced_subgraph(testing::path_graph(3), std::vector<std::uint32_t>{0}, Matrix{});
  EXPECT_EQ(s.adjacency, Matrix(1, 1));
}

TEST(InducedSubgraph, Triangle) {
  const Graph g = testing::make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  const auto s = induced_subgraph(g, std::vector<std::uint32_t>{0, 1, 2}, Matrix{});
  EXPECT_EQ(s.adjacency, Matrix(3, 3, std::vector<double>{0, 1, 1, 1, 0, 1, 1, 1, 0}));
}

TEST(InducedSubgraph, NonAdjacentPairOfFourCycle) {
  const auto s = induced_subgraph(testing::cycle_graph(4), std::vector<std::uint32_t>{0, 2}, Matrix{});
  EXPECT_EQ(s.adjacency, Matrix(2, 2));
}

TEST(InducedSubgraph, DuplicateNodeIsAContractViolation) {
  EXPECT_THROW(induced_subgraph(testing::path_graph(3), std::vector<std::uint32_t>{0, 1, 0}, Matrix{}),
               ContractViolation);
}

TEST(InducedSubgraph, PreservesAdjacencyAndGathersRowsInOrder) {
  std::mt19937_64 rng(21);
  const Graph g = testing::random_graph(20, 0.3, 4, rng);
  const Matrix emb = testing::random_matrix(20, 5, rng);
  std::vector<std::uint32_t> all(20);
  std::iota(all.begin(), all.end(), 0u);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(all.begin(), all.end(), rng);
    const std::vector<std::uint32_t> nodes(all.begin(), all.begin() + 1 + trial % 10);
    const auto s = induced_subgraph(g, nodes, emb);
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      for (std::size_t q = 0; q < nodes.size(); ++q)
        EXPECT_EQ(s.adjacency(p, q), g.has_edge(nodes[p], nodes[q]) ? 1.0 : 0.0);
      for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(s.node_embeddings(p, c), emb(nodes[p], c));
    }
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_double(x)), x);
}

}  // namespace
}  // namespace gsc
