#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gsc/errors.hpp"
#include "gsc/ot.hpp"
#include "gsc/ot_ops.hpp"
#include "support/testing.hpp"

namespace gsc::ot {
namespace {

SinkhornOptions plain(double beta, int iters, double tol = 0.0) { return {beta, iters, tol, 0}; }

Matrix random_cost(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  return testing::random_matrix(n, m, rng, 0.2, 2.0);
}

double gw_oracle(const Matrix& c1, const Matrix& c2, const Matrix& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < c1.rows; ++i)
    for (std::size_t ip = 0; ip < c1.rows; ++ip)
      for (std::size_t j = 0; j < c2.rows; ++j)
        for (std::size_t jp = 0; jp < c2.rows; ++jp) s += t(i, j) * t(ip, jp) * std::abs(c1(i, ip) - c2(j, jp));
  return s;
}

Matrix symmetric(std::size_t n, std::mt19937_64& rng, std::vector<double> levels = {}) {
  Matrix c(n, n);
  std::uniform_int_distribution<std::size_t> pick(0, levels.empty() ? 0 : levels.size() - 1);
  std::uniform_real_distribution<double> real(0.0, 2.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) c(i, j) = c(j, i) = levels.empty() ? real(rng) : levels[pick(rng)];
  return c;
}

Matrix random_plan(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  Matrix t = testing::random_matrix(n, m, rng, 0.0, 1.0);
  const double total = std::accumulate(t.data.begin(), t.data.end(), 0.0);
  for (double& v : t.data) v /= total;
  return t;
}

TEST(NodeCost, Examples) {
  const Matrix a(3, 2, std::vector<double>{1, 0, 0, 2, 0, 0});
  const Matrix b(2, 2, std::vector<double>{3, 0, 0, -1});
  const Matrix c = node_cost_matrix(a, b, 0.5);
  EXPECT_NEAR(c(0, 0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(c(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(c(1, 1), std::exp(2.0), 1e-14);
  EXPECT_EQ(c(2, 0), 1.0);
  EXPECT_EQ(c(2, 1), 1.0);
}

TEST(Sinkhorn, SingleCellPlanIsOne) {
  const auto r = sinkhorn(Matrix(1, 1, 3.7), uniform_marginal(1), uniform_marginal(1), {});
  EXPECT_NEAR(r.plan(0, 0), 1.0, 1e-15);
  EXPECT_TRUE(r.converged);
}

TEST(Sinkhorn, TwoByTwoMatchesClosedForm) {
  // Uniform marginals force T = [[a, ½-a], [½-a, a]] and the entropic optimality
  // condition gives a² / (½-a)² = exp(-(c11 + c22 - c12 - c21)/β).
  std::mt19937_64 rng(1);
  for (double beta : {0.05, 0.3, 1.0}) {
    const Matrix c = random_cost(2, 2, rng);
    const double root = std::exp(-(c(0, 0) + c(1, 1) - c(0, 1) - c(1, 0)) / (2.0 * beta));
    const double a = root / (2.0 * (1.0 + root));
    const auto r = sinkhorn(c, uniform_marginal(2), uniform_marginal(2), {beta, 5000, 1e-13, 50});
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.plan(0, 0), a, 1e-10);
    EXPECT_NEAR(r.plan(1, 1), a, 1e-10);
    EXPECT_NEAR(r.plan(0, 1), 0.5 - a, 1e-10);
  }
}

TEST(Sinkhorn, SmallBetaConcentratesOnTheCheapDiagonal) {
  Matrix c(4, 4, 1.0);
  for (std::size_t i = 0; i < 4; ++i) c(i, i) = 0.0;
  const auto r = sinkhorn(c, uniform_marginal(4), uniform_marginal(4), {0.01, 500, 1e-9, 50});
  ASSERT_TRUE(r.converged);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.plan(i, i), 0.25, 1e-12);
  EXPECT_NEAR(wasserstein(c, r.plan), 0.0, 1e-12);
}

TEST(Sinkhorn, PermutingTheCostPermutesThePlan) {
  std::mt19937_64 rng(2);
  const Matrix c = random_cost(5, 4, rng);
  std::vector<std::size_t> pr(5), pc(4);
  std::iota(pr.begin(), pr.end(), 0u);
  std::iota(pc.begin(), pc.end(), 0u);
  std::shuffle(pr.begin(), pr.end(), rng);
  std::shuffle(pc.begin(), pc.end(), rng);
  Matrix cp(5, 4);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) cp(pr[i], pc[j]) = c(i, j);
  const SinkhornOptions opts{0.1, 2000, 1e-12, 50};
  const auto a = sinkhorn(c, uniform_marginal(5), uniform_marginal(4), opts);
  const auto b = sinkhorn(cp, uniform_marginal(5), uniform_marginal(4), opts);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(b.plan(pr[i], pc[j]), a.plan(i, j), 1e-10);
}

TEST(Sinkhorn, PlansAreNonnegativeCouplings) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + trial % 9, m = 1 + (trial * 7) % 11;
    const Matrix c = random_cost(n, m, rng);
    const auto u = uniform_marginal(n), v = uniform_marginal(m);
    const auto r = sinkhorn(c, u, v, {0.05, 500, 1e-8, 50});
    EXPECT_TRUE(r.converged) << n << "x" << m;
    for (double x : r.plan.data) EXPECT_GE(x, 0.0);
    EXPECT_LE(marginal_violation(r.plan, u, v), 1e-8);
    EXPECT_NEAR(r.marginal_violation, marginal_violation(r.plan, u, v), 1e-15);
  }
}

TEST(Sinkhorn, ViolationHistoryIsNonIncreasingWithPlainScaling) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix c = random_cost(6, 8, rng);
    const auto r = sinkhorn(c, uniform_marginal(6), uniform_marginal(8), plain(0.02, 300, 1e-13));
    EXPECT_FALSE(r.accelerated);
    ASSERT_EQ(r.violation_history.size(), static_cast<std::size_t>(r.iterations));
    for (std::size_t i = 1; i < r.violation_history.size(); ++i)
      EXPECT_LE(r.violation_history[i], r.violation_history[i - 1] * (1 + 1e-12) + 1e-300);
  }
}

TEST(Sinkhorn, AcceleratedPhaseReachesThePlainFixedPoint) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix c = random_cost(7, 9, rng);
    const auto u = uniform_marginal(7), v = uniform_marginal(9);
    const auto fast = sinkhorn(c, u, v, {0.02, 500, 1e-10, 3});
    EXPECT_TRUE(fast.accelerated);
    ASSERT_TRUE(fast.converged);
    const auto slow = sinkhorn(c, u, v, {0.02, 200000, 1e-13, 0});
    ASSERT_TRUE(slow.converged);
    EXPECT_LT(testing::max_abs_diff(fast.plan.data, slow.plan.data), 1e-8);
  }
}

TEST(Sinkhorn, InvalidInputsAreContractViolations) {
  const auto u = uniform_marginal(2);
  EXPECT_THROW(sinkhorn(Matrix(2, 2), u, u, {0.0, 10, 0.0, 0}), ContractViolation);
  EXPECT_THROW(sinkhorn(Matrix(2, 2, std::numeric_limits<double>::quiet_NaN()), u, u, {}), ContractViolation);
  EXPECT_THROW(sinkhorn(Matrix(2, 2), std::vector<double>{0.7, 0.7}, u, {}), ContractViolation);
}

TEST(SinkhornBackward, UnrolledMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Matrix c = random_cost(4, 5, rng);
  const Matrix weight = testing::random_matrix(4, 5, rng);
  const auto u = uniform_marginal(4), v = uniform_marginal(5);
  const auto opts = plain(0.1, 25);
  auto loss = [&](const Matrix& cost) {
    const Matrix t = sinkhorn(cost, u, v, opts).plan;
    double s = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) s += weight.data[i] * t.data[i];
    return s;
  };
  const auto r = sinkhorn(c, u, v, opts, true);
  const Matrix grad = sinkhorn_backward(c, u, v, opts, r, weight);
  std::vector<double> numeric(c.data.size());
  for (std::size_t i = 0; i < c.data.size(); ++i) {
    Matrix up = c, down = c;
    up.data[i] += 1e-6;
    down.data[i] -= 1e-6;
    numeric[i] = (loss(up) - loss(down)) / 2e-6;
  }
  EXPECT_LT(testing::relative_error(grad.data, numeric), 1e-6);
}

TEST(SinkhornBackward, ImplicitMatchesFiniteDifferencesAtConvergence) {
  std::mt19937_64 rng(7);
  const Matrix c = random_cost(5, 3, rng);
  const Matrix weight = testing::random_matrix(5, 3, rng);
  const auto u = uniform_marginal(5), v = uniform_marginal(3);
  const SinkhornOptions opts{0.2, 100000, 1e-14, 0};
  auto loss = [&](const Matrix& cost) {
    const Matrix t = sinkhorn(cost, u, v, opts).plan;
    double s = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) s += weight.data[i] * t.data[i];
    return s;
  };
  const auto r = sinkhorn(c, u, v, opts);
  ASSERT_TRUE(r.converged);
  const Matrix grad = sinkhorn_implicit_backward(r.plan, opts.beta, weight);
  std::vector<double> numeric(c.data.size());
  for (std::size_t i = 0; i < c.data.size(); ++i) {
    Matrix up = c, down = c;
    up.data[i] += 1e-5;
    down.data[i] -= 1e-5;
    numeric[i] = (loss(up) - loss(down)) / 2e-5;
  }
  EXPECT_LT(testing::relative_error(grad.data, numeric), 1e-5);
}

TEST(SinkhornBackward, AcceleratedSolveUsesTheFixedPointDerivative) {
  std::mt19937_64 rng(8);
  const Matrix c = random_cost(6, 6, rng);
  const Matrix weight = testing::random_matrix(6, 6, rng);
  const auto u = uniform_marginal(6);
  const SinkhornOptions opts{0.02, 500, 1e-12, 2};
  const auto r = sinkhorn(c, u, u, opts);
  ASSERT_TRUE(r.accelerated);
  EXPECT_LT(testing::max_abs_diff(sinkhorn_backward(c, u, u, opts, r, weight).data,
                                  sinkhorn_implicit_backward(r.plan, opts.beta, weight).data),
            1e-15);
}

TEST(Wasserstein, IsThePlanWeightedCost) {
  const Matrix c(2, 2, std::vector<double>{1, 2, 3, 4});
  const Matrix t(2, 2, std::vector<double>{0.5, 0, 0, 0.5});
  EXPECT_DOUBLE_EQ(wasserstein(c, t), 2.5);
}

TEST(IntraDistances, ExponentiateTheAdjacency) {
  const auto s = induced_subgraph(testing::path_graph(3), std::vector<std::uint32_t>{0, 1, 2}, Matrix{});
  const Matrix d = intra_distances_sampled(s, 0.5);
  EXPECT_EQ(d(0, 0), 1.0);
  EXPECT_NEAR(d(0, 1), std::exp(-2.0), 1e-15);
  EXPECT_EQ(d(0, 2), 1.0);
  EXPECT_EQ(d, intra_distances(s.adjacency, 0.5));
}

TEST(GromovWasserstein, IdenticalStructuresUnderTheIdentityCouplingGiveZero) {
  std::mt19937_64 rng(9);
  const Matrix c = symmetric(6, rng);
  Matrix t(6, 6);
  for (std::size_t i = 0; i < 6; ++i) t(i, i) = 1.0 / 6.0;
  EXPECT_EQ(gromov_wasserstein(c, c, t), 0.0);
  EXPECT_EQ(gromov_wasserstein_layered(c, c, t), 0.0);
}

TEST(GromovWasserstein, TwoNodeExample) {
  // With c2 = 0 the sum collapses to Σ_{i≠i'} r_i r_i' = 2 · ½ · ½.
  const Matrix c1(2, 2, std::vector<double>{0, 1, 1, 0});
  const Matrix c2(2, 2);
  const Matrix t(2, 2, 0.25);
  EXPECT_NEAR(gromov_wasserstein_direct(c1, c2, t), 0.5, 1e-15);
}

TEST(GromovWasserstein, EvaluatorsAgreeWithTheQuadrupleSum) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 7, m = 1 + (trial * 3) % 8;
    const auto levels = trial % 2 ? std::vector<double>{1.0, std::exp(-2.0), 0.5} : std::vector<double>{};
    const Matrix c1 = symmetric(n, rng, levels), c2 = symmetric(m, rng, levels);
    const Matrix t = random_plan(n, m, rng);
    const double expect = gw_oracle(c1, c2, t);
    EXPECT_NEAR(gromov_wasserstein_direct(c1, c2, t), expect, 1e-13);
    EXPECT_NEAR(gromov_wasserstein_layered(c1, c2, t), expect, 1e-12);
    EXPECT_NEAR(gromov_wasserstein(c1, c2, t), expect, 1e-12);
  }
  const Matrix big1 = symmetric(40, rng), big2 = symmetric(35, rng);
  const Matrix t = random_plan(40, 35, rng);
  EXPECT_NEAR(gromov_wasserstein(big1, big2, t), gw_oracle(big1, big2, t), 1e-11);
}

TEST(GromovWasserstein, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  const Matrix c1 = symmetric(4, rng), c2 = symmetric(3, rng);
  const Matrix t = random_plan(4, 3, rng);
  const auto g = gromov_wasserstein_grad(c1, c2, t);
  auto check = [&](const Matrix& x, const Matrix& analytic, auto eval) {
    std::vector<double> numeric(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      Matrix up = x, down = x;
      up.data[i] += 1e-7;
      down.data[i] -= 1e-7;
      numeric[i] = (eval(up) - eval(down)) / 2e-7;
    }
    EXPECT_LT(testing::relative_error(analytic.data, numeric), 1e-6);
  };
  check(t, g.d_plan, [&](const Matrix& p) { return gromov_wasserstein_direct(c1, c2, p); });
  check(c1, g.d_c1, [&](const Matrix& a) { return gromov_wasserstein_direct(a, c2, t); });
  check(c2, g.d_c2, [&](const Matrix& b) { return gromov_wasserstein_direct(c1, b, t); });
}

// Tape primitives.

struct TapeRun {
  std::vector<double> value;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
};

TapeRun run_tape(const Matrix& a, const Matrix& b, PlanGradient mode, kernels::Exec exec) {
  auto ta = ad::Tensor::from_matrix(a, true), tb = ad::Tensor::from_matrix(b, true);
  ad::Tape t;
  std::vector<ad::Tensor> costs, parts;
  std::vector<GromovTerm> terms;
  for (std::size_t q = 0; q < 4; ++q) {
    const auto rows = std::vector<std::size_t>{q, q + 1, q + 2};
    parts.push_back(t.gather_rows(ta, rows));
    costs.push_back(node_cost(t, parts.back(), tb, 0.5));
  }
  const auto plans = sinkhorn_plans(t, costs, {0.1, 40, 0.0, 0}, mode, nullptr, exec);
  auto total = ad::Tensor::scalar(0.0);
  for (std::size_t q = 0; q < plans.size(); ++q) {
    total = t.add(total, wasserstein(t, costs[q], plans[q]));
    terms.push_back({intra_cost(t, t.matmul_nt(parts[q], parts[q]), 0.5), intra_cost(t, t.matmul_nt(tb, tb), 0.5),
                     plans[q]});
  }
  for (const auto& d : gromov_wasserstein(t, terms, exec)) total = t.add(total, d);
  t.backward(total);
  ta.ensure_grad();
  tb.ensure_grad();
  return {{total.item()}, {ta.grad().begin(), ta.grad().end()}, {tb.grad().begin(), tb.grad().end()}};
}

TEST(OtOps, SerialAndParallelAreBitIdentical) {
  std::mt19937_64 rng(12);
  const Matrix a = testing::random_matrix(6, 3, rng), b = testing::random_matrix(5, 3, rng);
  for (auto mode : {PlanGradient::unrolled, PlanGradient::fixed}) {
    const auto s = run_tape(a, b, mode, kernels::Exec::serial);
    const auto p = run_tape(a, b, mode, kernels::Exec::parallel);
    EXPECT_EQ(s.value, p.value);
    EXPECT_EQ(s.grad_a, p.grad_a);
    EXPECT_EQ(s.grad_b, p.grad_b);
  }
}

TEST(OtOps, UnrolledTapeGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  auto a = ad::Tensor::from_matrix(testing::random_matrix(4, 3, rng), true);
  const auto b = ad::Tensor::from_matrix(testing::random_matrix(5, 3, rng));
  const SinkhornOptions opts{0.2, 30, 0.0, 0};
  auto forward = [&](ad::Tape& t) {
    const auto c = node_cost(t, a, b, 0.7);
    const std::vector<ad::Tensor> costs{c};
    return wasserstein(t, c, sinkhorn_plans(t, costs, opts, PlanGradient::unrolled)[0]);
  };
  ad::Tape t;
  t.backward(forward(t));
  const std::vector<double> analytic(a.grad().begin(), a.grad().end());
  const auto numeric = testing::numeric_grad(a, [&] {
    ad::Tape fresh;
    return forward(fresh).item();
  });
  EXPECT_LT(testing::relative_error(analytic, numeric), 1e-6);
}

TEST(OtOps, FixedModeTreatsThePlanAsConstant) {
  std::mt19937_64 rng(14);
  auto a = ad::Tensor::from_matrix(testing::random_matrix(3, 2, rng), true);
  const auto b = ad::Tensor::from_matrix(testing::random_matrix(3, 2, rng));
  ad::Tape t;
  const auto c = node_cost(t, a, b, 0.5);
  const std::vector<ad::Tensor> costs{c};
  std::vector<PlanStats> stats;
  const auto plan = sinkhorn_plans(t, costs, {0.1, 200, 1e-9, 50}, PlanGradient::fixed, &stats)[0];
  EXPECT_FALSE(plan.requires_grad());
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_TRUE(stats[0].converged);
  EXPECT_EQ(plan.to_matrix(),
            sinkhorn(c.to_matrix(), uniform_marginal(3), uniform_marginal(3), {0.1, 200, 1e-9, 50}).plan);
}

TEST(OtOps, TapeGromovMatchesPlainEvaluator) {
  std::mt19937_64 rng(15);
  const Matrix c1 = symmetric(5, rng), c2 = symmetric(4, rng), p = random_plan(5, 4, rng);
  ad::Tape t;
  const std::vector<GromovTerm> terms{
      {ad::Tensor::from_matrix(c1), ad::Tensor::from_matrix(c2), ad::Tensor::from_matrix(p)}};
  EXPECT_NEAR(gromov_wasserstein(t, terms)[0].item(), gw_oracle(c1, c2, p), 1e-14);
}

}  // namespace
}  // namespace gsc::ot
