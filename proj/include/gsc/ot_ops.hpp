#pragma once

// Differentiable OT primitives recorded on a Tape.
//
// The batched primitives process independent subgraph pairs; with
// Exec::parallel the pairs are spread over OpenMP threads. Per-pair gradients
// are written to private buffers and summed into shared inputs in pair order,
// so both policies produce identical values and gradients.

#include <span>
#include <vector>

#include "gsc/kernels.hpp"
#include "gsc/ot.hpp"
#include "gsc/tensor.hpp"

namespace gsc::ot {

enum class PlanGradient {
  unrolled,  // differentiate through every Sinkhorn iteration
  fixed,     // treat the plan as a constant of the loss
};

struct PlanStats {
  bool converged = false;
  int iterations = 0;
  double marginal_violation = 0.0;
};

// exp(-cos(a_i, b_j)/τ) for row sets a (n×F) and b (m×F).
ad::Tensor node_cost(ad::Tape& tape, const ad::Tensor& a, const ad::Tensor& b, double tau);

// exp(-A/τ) for a sampled (constant 0/1) or generated (cosine) adjacency.
ad::Tensor intra_cost(ad::Tape& tape, const ad::Tensor& adjacency, double tau);

// One plan per cost matrix, uniform marginals.
std::vector<ad::Tensor> sinkhorn_plans(ad::Tape& tape, std::span<const ad::Tensor> costs,
                                       const SinkhornOptions& opts, PlanGradient mode,
                                       std::vector<PlanStats>* stats = nullptr,
                                       kernels::Exec exec = kernels::default_exec());

// Σ T∘C, 1×1.
ad::Tensor wasserstein(ad::Tape& tape, const ad::Tensor& cost, const ad::Tensor& plan);

struct GromovTerm {
  ad::Tensor c1;    // n×n
  ad::Tensor c2;    // m×m
  ad::Tensor plan;  // n×m
};

// One 1×1 discrepancy per term.
std::vector<ad::Tensor> gromov_wasserstein(ad::Tape& tape, std::span<const GromovTerm> terms,
                                           kernels::Exec exec = kernels::default_exec());

}  // namespace gsc::ot
