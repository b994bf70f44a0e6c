#include <gtest/gtest.h>

#include "gsc/config.hpp"
#include "gsc/errors.hpp"
#include "support/testing.hpp"

namespace gsc {
namespace {

std::string field_of(const std::string& text) {
  try {
    TrainConfig::from(ConfigFile::parse(text));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

TEST(ConfigFile, ParsesCommentsBlanksAndWhitespace) {
  const auto f = ConfigFile::parse("# run\n\n  tau = 0.25  # inline\nk=7\nname = a b\n");
  EXPECT_EQ(f.get("tau"), "0.25");
  EXPECT_EQ(f.number("tau", 1.0), 0.25);
  EXPECT_EQ(f.integer("k", 0), 7);
  EXPECT_EQ(f.text("name", ""), "a b");
  EXPECT_EQ(f.number("missing", 3.5), 3.5);
  EXPECT_FALSE(f.has("missing"));
}

TEST(ConfigFile, MalformedLinesAndDuplicatesNameTheProblem) {
  try {
    ConfigFile::parse("k = 1\nnot a pair\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "line 2");
  }
  try {
    ConfigFile::parse("k = 1\nk = 2\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "k");
  }
  EXPECT_THROW(ConfigFile::parse("tau = fast\n").number("tau", 0.0), ConfigError);
  EXPECT_THROW(ConfigFile::parse("seed = -3\n").unsigned_integer("seed", 0), ConfigError);
}

TEST(ConfigFile, RelativePathsResolveAgainstTheConfigDirectory) {
  testing::TempDir dir("config");
  testing::write_file(dir / "run.cfg", "edges = data/e.tsv\nfeatures = /abs/f.csv\n");
  const auto f = ConfigFile::load(dir / "run.cfg");
  EXPECT_EQ(f.path("edges"), dir / "data/e.tsv");
  EXPECT_EQ(f.path("features"), std::filesystem::path("/abs/f.csv"));
  EXPECT_FALSE(f.path("labels"));
  EXPECT_THROW(f.required_path("labels"), ConfigError);
  EXPECT_THROW(ConfigFile::load(dir / "absent.cfg"), ConfigError);
}

TEST(ConfigFile, UnknownKeys) {
  const auto f = ConfigFile::parse("k = 1\ntypo = 2\n");
  EXPECT_EQ(f.unknown_keys({"k"}), std::vector<std::string>{"typo"});
}

TEST(TrainConfig, DefaultsAreValid) {
  const auto c = TrainConfig::from(ConfigFile::parse(""));
  EXPECT_EQ(c.k, 10u);
  EXPECT_EQ(c.negatives, 2u);
  EXPECT_EQ(c.positives, 1u);
  EXPECT_EQ(c.plan_gradient, ot::PlanGradient::unrolled);
  EXPECT_EQ(c.neighborhood, Neighborhood::graph);
}

TEST(TrainConfig, InvalidFieldsAreNamed) {
  EXPECT_EQ(field_of("lambda = 1.5\n"), "lambda");
  EXPECT_EQ(field_of("lambda = -0.1\n"), "lambda");
  EXPECT_EQ(field_of("tau = 0\n"), "tau");
  EXPECT_EQ(field_of("beta = -1\n"), "beta");
  EXPECT_EQ(field_of("k = 0\n"), "k");
  EXPECT_EQ(field_of("positives = 0\n"), "positives");
  EXPECT_EQ(field_of("batch_size = 1\n"), "batch_size");
  EXPECT_EQ(field_of("batch_size = 8\not_subsample = 9\n"), "ot_subsample");
  EXPECT_EQ(field_of("plan_gradient = sometimes\n"), "plan_gradient");
  EXPECT_EQ(field_of("neighborhood = 2hop\n"), "neighborhood");
  EXPECT_EQ(field_of("sinkhorn_accelerate_after = -1\n"), "sinkhorn_accelerate_after");
  EXPECT_EQ(field_of("lambda = 0\n"), "");
  EXPECT_EQ(field_of("lambda = 1\n"), "");
}

TEST(TrainConfig, MapRoundTrip) {
  const auto c = TrainConfig::from(ConfigFile::parse(
      "k = 6\ntau = 0.3\nlambda = 0.7\npositives = 3\nplan_gradient = fixed\nneighborhood = subgraph\nseed = 42\n"));
  std::string text;
  for (const auto& [key, value] : c.to_map()) text += key + " = " + value + "\n";
  EXPECT_EQ(TrainConfig::from(ConfigFile::parse(text)).to_map(), c.to_map());
  EXPECT_EQ(c.to_map().at("plan_gradient"), "fixed");
  EXPECT_EQ(c.to_map().at("positives"), "3");
}

TEST(SbmConfig, Validation) {
  EXPECT_NO_THROW(SbmConfig::from(ConfigFile::parse("")));
  EXPECT_THROW(SbmConfig::from(ConfigFile::parse("p_in = 0.01\np_out = 0.1\n")), ConfigError);
  EXPECT_THROW(SbmConfig::from(ConfigFile::parse("blocks = 5\nfeat_dim = 4\n")), ConfigError);
}

}  // namespace
}  // namespace gsc
