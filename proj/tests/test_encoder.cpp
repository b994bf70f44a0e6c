#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gsc/encoder.hpp"
#include "gsc/errors.hpp"
#include "support/testing.hpp"

namespace gsc {
namespace {

EncoderParams params(Matrix w, double slope = 0.25) {
  return {ad::Tensor::from_matrix(w, true), ad::Tensor::parameter({1, 1}, {slope})};
}

Matrix encode_matrix(const Graph& g, const EncoderParams& p) {
  ad::Tape t;
  return encode(t, normalize_adjacency(g), ad::Tensor::from_matrix(g.features()), p).to_matrix();
}

TEST(Encoder, ZeroFeaturesGiveZeroEmbeddings) {
  std::mt19937_64 rng(1);
  const Graph g = testing::make_graph(4, {{0, 1}, {2, 3}}, Matrix(4, 3));
  const Matrix h = encode_matrix(g, params(testing::random_matrix(3, 5, rng)));
  for (double v : h.data) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, IdentityPropagationAndWeightReturnNonnegativeFeatures) {
  std::mt19937_64 rng(2);
  const Graph g = testing::make_graph(3, {}, testing::random_matrix(3, 3, rng, 0.0, 2.0));
  EXPECT_EQ(encode_matrix(g, params(Matrix::identity(3))), g.features());
}

TEST(Encoder, ConnectedPairAveragesFeatures) {
  const Matrix x(2, 2, std::vector<double>{1, -2, 3, 4});
  const Matrix w(2, 3, std::vector<double>{1, 0, 2, -1, 1, 0.5});
  const Graph g = testing::make_graph(2, {{0, 1}}, x);
  const Matrix h = encode_matrix(g, params(w, 0.1));
  // 0.5 (x1 + x2) = [2, 1]; · W = [1, 1, 4.5] for both rows.
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(h(i, 0), 1.0, 1e-15);
    EXPECT_NEAR(h(i, 1), 1.0, 1e-15);
    EXPECT_NEAR(h(i, 2), 4.5, 1e-15);
  }
  const Matrix neg = encode_matrix(g, params(Matrix(2, 1, std::vector<double>{-1, 0}), 0.1));
  EXPECT_NEAR(neg(0, 0), -0.2, 1e-15);
}

TEST(Encoder, PermutationEquivariance) {
  std::mt19937_64 rng(3);
  const Graph g = testing::random_graph(5, 0.5, 4, rng);
  const auto p = params(testing::random_matrix(4, 3, rng));
  std::vector<std::uint32_t> perm(5);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);

  testing::EdgeList edges;
  for (auto [u, v] : g.edge_list()) edges.emplace_back(perm[u], perm[v]);
  Matrix x(5, 4);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 4; ++c) x(perm[i], c) = g.features()(i, c);
  const Graph relabeled = Graph::from_edges(5, edges, x);

  const Matrix h = encode_matrix(g, p);
  const Matrix hp = encode_matrix(relabeled, p);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(hp(perm[i], c), h(i, c), 1e-12);
}

TEST(Encoder, PropagatedPathMatchesDirectEncode) {
  std::mt19937_64 rng(4);
  const Graph g = testing::random_graph(12, 0.3, 3, rng);
  const auto p = params(testing::random_matrix(3, 4, rng));
  ad::Tape t;
  const Matrix fast =
      encode_propagated(t, propagate_features(normalize_adjacency(g), g.features()), p).to_matrix();
  EXPECT_LT(testing::max_abs_diff(fast.data, encode_matrix(g, p).data), 1e-14);
}

TEST(Encoder, ShapeMismatchIsADimensionError) {
  const Graph g = testing::path_graph(3);
  EXPECT_THROW(encode_matrix(g, params(Matrix(2, 2))), DimensionError);
}

TEST(Encoder, InitShapesAndNamedRoundTrip) {
  Rng rng = derive_stream(0, 0);
  const auto p = EncoderParams::init(7, 5, rng);
  EXPECT_EQ(p.in_dim(), 7u);
  EXPECT_EQ(p.out_dim(), 5u);
  const double bound = std::sqrt(6.0 / 12.0);
  for (double v : p.weight.values()) EXPECT_LE(std::abs(v), bound);
  std::vector<NamedTensor> named;
  p.append_named(named);
  const auto back = EncoderParams::from_named(named);
  EXPECT_TRUE(back.weight.same_node(p.weight));
  EXPECT_THROW(EncoderParams::from_named({}), CheckpointError);
}

}  // namespace
}  // namespace gsc
