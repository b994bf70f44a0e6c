#include <gtest/gtest.h>

#include <cmath>

#include "gsc/errors.hpp"
#include "gsc/synth.hpp"
#include "support/testing.hpp"

namespace gsc {
namespace {

TEST(SynthSbm, CompleteBlocksAreTriangles) {
  SbmConfig cfg;
  cfg.blocks = 2;
  cfg.nodes_per_block = 3;
  cfg.p_in = 1.0;
  cfg.p_out = 0.0;
  cfg.feat_dim = 2;
  const Graph g = gen_synth_sbm(cfg);
  using E = std::vector<std::pair<std::uint32_t, std::uint32_t>>;
  EXPECT_EQ(g.edge_list(), (E{{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}}));
  EXPECT_EQ(*g.labels(), (std::vector<int>{0, 0, 0, 1, 1, 1}));
}

TEST(SynthSbm, NoiselessFeaturesAreOneHotBlocks) {
  SbmConfig cfg;
  cfg.blocks = 3;
  cfg.nodes_per_block = 20;
  cfg.feat_dim = 5;
  cfg.noise_sigma = 0.0;
  const Graph g = gen_synth_sbm(cfg);
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t d = 0; d < 5; ++d) EXPECT_EQ(g.features()(i, d), d == i / 20 ? 1.0 : 0.0);
}

TEST(SynthSbm, EdgeDensitiesWithinThreeSigma) {
  SbmConfig cfg;
  cfg.blocks = 4;
  cfg.nodes_per_block = 60;
  cfg.p_in = 0.15;
  cfg.p_out = 0.02;
  cfg.seed = 11;
  const Graph g = gen_synth_sbm(cfg);
  double in = 0, out = 0;
  for (auto [u, v] : g.edge_list()) (u / 60 == v / 60 ? in : out) += 1;
  const double pairs_in = 4.0 * 60 * 59 / 2, pairs_out = 240.0 * 239 / 2 - pairs_in;
  auto within = [](double count, double pairs, double p) {
    return std::abs(count - pairs * p) <= 3.0 * std::sqrt(pairs * p * (1 - p));
  };
  EXPECT_TRUE(within(in, pairs_in, cfg.p_in)) << in;
  EXPECT_TRUE(within(out, pairs_out, cfg.p_out)) << out;
}

TEST(SynthSbm, SplitsAreStratified) {
  SbmConfig cfg;
  cfg.blocks = 3;
  cfg.nodes_per_block = 50;
  const Graph g = gen_synth_sbm(cfg);
  for (std::size_t b = 0; b < 3; ++b) {
    std::size_t train = 0, val = 0, test = 0;
    for (std::size_t i = b * 50; i < (b + 1) * 50; ++i) {
      const Split s = (*g.splits())[i];
      train += s == Split::train;
      val += s == Split::val;
      test += s == Split::test;
    }
    EXPECT_EQ(train, 5u);
    EXPECT_EQ(val, 5u);
    EXPECT_EQ(test, 40u);
  }
}

TEST(SynthSbm, SeedDeterminesTheGraph) {
  SbmConfig a;
  a.nodes_per_block = 30;
  SbmConfig b = a;
  EXPECT_EQ(gen_synth_sbm(a).edge_list(), gen_synth_sbm(b).edge_list());
  EXPECT_EQ(gen_synth_sbm(a).features(), gen_synth_sbm(b).features());
  b.seed = 1;
  EXPECT_NE(gen_synth_sbm(a).edge_list(), gen_synth_sbm(b).edge_list());
}

TEST(SynthSbm, DatasetRoundTrip) {
  testing::TempDir dir("synth");
  SbmConfig cfg;
  cfg.nodes_per_block = 15;
  const Graph g = gen_synth_sbm(cfg);
  const auto paths = write_dataset(dir / "d", g);
  const Graph back = load_graph(paths.edges, paths.features, paths.labels, paths.splits);
  EXPECT_EQ(back.edge_list(), g.edge_list());
  EXPECT_EQ(back.features(), g.features());
  EXPECT_EQ(*back.labels(), *g.labels());
  EXPECT_EQ(*back.splits(), *g.splits());
}

}  // namespace
}  // namespace gsc
