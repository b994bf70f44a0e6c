#pragma once

// Optimal-transport kernels on plain matrices (no autodiff).
//
// Transport costs between two subgraphs are c(h1_i, h2_j) = exp(-cos(h1_i, h2_j)/τ).
// The plan T solves min_T <T, C> + β Σ T log T over couplings of (u, v), found by
// log-domain Sinkhorn scaling. The same plan is reused for the
// Gromov-Wasserstein discrepancy Σ T_ij T_i'j' |c1(i,i') - c2(j,j')|.

#include <span>
#include <vector>

#include "gsc/graph.hpp"
#include "gsc/matrix.hpp"

namespace gsc::ot {

struct SinkhornOptions {
  double beta = 0.05;
  int max_iters = 500;
  double tol = 1e-6;  // on the max absolute marginal violation; 0 runs every iteration
  // Plain scaling sweeps before an unconverged solve switches to the
  // accelerated phase (β annealing, then Newton steps on the row potentials);
  // 0 keeps plain scaling throughout.
  int accelerate_after = 50;
};

// Dual potentials after each completed iteration; the reverse pass replays them.
struct SinkhornTrace {
  std::vector<std::vector<double>> f;
  std::vector<std::vector<double>> g;
};

struct SinkhornResult {
  Matrix plan;
  bool converged = false;
  int iterations = 0;                       // sweeps plus Newton steps
  bool accelerated = false;                 // the plain phase did not converge
  double marginal_violation = 0.0;          // max_i |Σ_j T_ij - u_i|; columns are exact
  // L1 row violation after each iteration. Non-increasing over the plain
  // phase; annealing stages restart it against their own β.
  std::vector<double> violation_history;
  SinkhornTrace trace;                      // filled when requested
};

std::vector<double> uniform_marginal(std::size_t n);

// exp(-cos(a_i, b_j)/τ); a zero-norm row has cosine 0 and therefore cost 1.
Matrix node_cost_matrix(const Matrix& a, const Matrix& b, double tau);

// Throws ContractViolation on non-finite costs, β ≤ 0, or invalid marginals.
SinkhornResult sinkhorn(const Matrix& cost, std::span<const double> u, std::span<const double> v,
                        const SinkhornOptions& opts, bool keep_trace = false);

// Gradient of a scalar loss with respect to `cost`, given its gradient with
// respect to the plan. A plain scaling solve is differentiated through every
// executed sweep and needs its trace; an accelerated solve is differentiated
// at its fixed point.
Matrix sinkhorn_backward(const Matrix& cost, std::span<const double> u, std::span<const double> v,
                         const SinkhornOptions& opts, const SinkhornResult& result, const Matrix& grad_plan);

// Implicit derivative of the entropic plan with respect to the cost, exact
// when `plan` satisfies its marginals.
Matrix sinkhorn_implicit_backward(const Matrix& plan, double beta, const Matrix& grad_plan);

// Σ_ij T_ij c_ij. The entropy term only shapes the plan and is not reported.
double wasserstein(const Matrix& cost, const Matrix& plan);

// Max absolute deviation of the plan's row and column sums from u and v.
double marginal_violation(const Matrix& plan, std::span<const double> u, std::span<const double> v);

// exp(-A(s1,s2)/τ) elementwise: 0/1 adjacency for sampled subgraphs, cosine
// adjacency for generated ones.
Matrix intra_distances(const Matrix& adjacency, double tau);
Matrix intra_distances_sampled(const Subgraph& s, double tau);

// Σ_{i,i',j,j'} T_ij T_i'j' |c1(i,i') - c2(j,j')| by the direct quadruple sum.
double gromov_wasserstein_direct(const Matrix& c1, const Matrix& c2, const Matrix& plan);

// Same quantity by a layer-cake expansion over the distinct values t_k of c1 and c2:
//   |a - b| = Σ_k Δ_k (1[a≥t_k] + 1[b≥t_k] - 2·1[a≥t_k]1[b≥t_k]),
// each layer reducing to rᵀB1r + sᵀB2s - 2<T, B1 T B2ᵀ> with r, s the plan's
// row and column sums.
double gromov_wasserstein_layered(const Matrix& c1, const Matrix& c2, const Matrix& plan);

// Production evaluator: the direct sum up to 32 nodes per side, layered above.
double gromov_wasserstein(const Matrix& c1, const Matrix& c2, const Matrix& plan);

struct GromovGradient {
  Matrix d_plan;
  Matrix d_c1;
  Matrix d_c2;
};
// Gradients of the direct sum, using sign(0) = 0 at ties.
GromovGradient gromov_wasserstein_grad(const Matrix& c1, const Matrix& c2, const Matrix& plan);

}  // namespace gsc::ot
