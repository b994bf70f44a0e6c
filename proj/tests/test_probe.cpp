#include <gtest/gtest.h>

#include <random>

#include "gsc/errors.hpp"
#include "gsc/probe.hpp"

namespace gsc {
namespace {

struct Labeled {
  Matrix x;
  std::vector<int> y;
  std::vector<Split> s;
};

Labeled clusters(std::size_t per_class, std::size_t classes, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  Labeled d{Matrix(per_class * classes, classes), {}, {}};
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t r = 0; r < per_class; ++r) {
      const std::size_t i = c * per_class + r;
      for (std::size_t f = 0; f < classes; ++f) d.x(i, f) = (f == c ? 3.0 : 0.0) + noise(rng);
      d.y.push_back(static_cast<int>(c));
      d.s.push_back(r % 4 == 0 ? Split::train : r % 4 == 1 ? Split::val : Split::test);
    }
  return d;
}

TEST(LinearProbe, SeparableClustersScorePerfectly) {
  const auto d = clusters(40, 3, 0.2, 1);
  const auto r = linear_probe(d.x, d.y, d.s);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.micro_f1, 1.0);
  EXPECT_EQ(r.evaluated, 60u);
  EXPECT_EQ(r.class_total, (std::vector<std::size_t>{20, 20, 20}));
  EXPECT_EQ(linear_probe(d.x, d.y, d.s, {}, Split::val).evaluated, 30u);
}

TEST(LinearProbe, ConstantEmbeddingsPredictTheMajorityClass) {
  const std::size_t n = 20;
  Matrix x(n, 2, 1.0);
  std::vector<int> y;
  std::vector<Split> s;
  for (std::size_t i = 0; i < n; ++i) {
    y.push_back(i < 14 ? 1 : 0);
    s.push_back(i % 2 ? Split::train : Split::test);
  }
  const auto r = linear_probe(x, y, s);
  EXPECT_DOUBLE_EQ(r.accuracy, 7.0 / 10.0);
  EXPECT_EQ(r.class_correct, (std::vector<std::size_t>{0, 7}));
}

TEST(LinearProbe, ClassMissingFromTrainIsNamed) {
  auto d = clusters(8, 3, 0.1, 2);
  for (std::size_t i = 16; i < 24; ++i)
    if (d.s[i] == Split::train) d.s[i] = Split::test;
  try {
    linear_probe(d.x, d.y, d.s);
    FAIL() << "expected ProbeError";
  } catch (const ProbeError& e) {
    EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos);
  }
}

TEST(LinearProbe, MisalignedInputsAreRejected) {
  const auto d = clusters(4, 2, 0.1, 3);
  EXPECT_THROW(linear_probe(d.x, std::vector<int>(3, 0), d.s), ProbeError);
}

}  // namespace
}  // namespace gsc
