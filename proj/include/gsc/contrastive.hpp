#pragma once

// Subgraph contrast.
//
// The positive of anchor i is the generated counterpart of its own sampled
// subgraph. Negatives are drawn from the other anchors of the batch,
// alternating between the sampled and the generated pool. For distances D the
// loss of one family is
//
//   L = 1/Z Σ_i [ Σ_pos D/τ − Σ_neg log(1 − min(exp(−D/τ), 1 − 1e-7)) ]
//
// with Z the total number of terms, N(M+1) for one positive per anchor.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gsc/generator.hpp"
#include "gsc/graph.hpp"
#include "gsc/sampler.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

inline constexpr double kNegativeClamp = 1.0 - 1e-7;

enum class Pool : std::uint8_t { sampled, generated };

struct NegativeRef {
  Pool pool;
  std::size_t index;

  friend bool operator==(const NegativeRef&, const NegativeRef&) = default;
};

struct ContrastBatch {
  std::vector<std::uint32_t> centers;                // anchor centers, index-aligned with both pools
  std::vector<std::vector<NegativeRef>> negatives;   // M per anchor

  std::size_t size() const noexcept { return centers.size(); }
};

// Draws M negatives per anchor, uniformly among anchors with a different
// center; negative m comes from the sampled pool when m is even and the
// generated pool when m is odd. Throws ContractViolation when N < 2, the pools
// are not aligned, or some anchor has no candidate.
ContrastBatch build_pairs(std::span<const Subgraph> sampled, std::span<const GeneratedSubgraph> generated, Rng& rng,
                          std::size_t negatives = 2);
ContrastBatch build_pairs(std::span<const std::uint32_t> centers, Rng& rng, std::size_t negatives = 2);

// Scalar form over per-anchor distance lists.
double contrastive_loss(std::span<const std::vector<double>> positive, std::span<const std::vector<double>> negative,
                        double tau);
// One positive per anchor.
double contrastive_loss(std::span<const double> positive, std::span<const std::vector<double>> negative, double tau);

inline double wd_loss(std::span<const double> d_pos, std::span<const std::vector<double>> d_neg, double tau) {
  return contrastive_loss(d_pos, d_neg, tau);
}
inline double gwd_loss(std::span<const double> d_pos, std::span<const std::vector<double>> d_neg, double tau) {
  return contrastive_loss(d_pos, d_neg, tau);
}

// Throws ConfigError("lambda") outside [0, 1].
double total_loss(double l1, double l2, double lambda);

struct LossValues {
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  double lambda = 0.5;
};

namespace ad {

// Differentiable form; every distance is a 1×1 tensor.
Tensor contrastive_loss(Tape& tape, std::span<const std::vector<Tensor>> positive,
                        std::span<const std::vector<Tensor>> negative, double tau);
Tensor total_loss(Tape& tape, const Tensor& l1, const Tensor& l2, double lambda);

}  // namespace ad

}  // namespace gsc
