#include "gsc/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsc/errors.hpp"

namespace gsc {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0)) throw ContractViolation("contrastive_loss: tau must be positive");
}

double negative_term(double d, double tau) { return -std::log(1.0 - std::min(std::exp(-d / tau), kNegativeClamp)); }

}  // namespace

ContrastBatch build_pairs(std::span<const std::uint32_t> centers, Rng& rng, std::size_t negatives) {
  const std::size_t n = centers.size();
  if (n < 2) throw ContractViolation("build_pairs: need at least 2 anchors, got " + std::to_string(n));
  ContrastBatch batch;
  batch.centers.assign(centers.begin(), centers.end());
  batch.negatives.resize(n);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (centers[j] != centers[i]) candidates.push_back(j);
    if (candidates.empty())
      throw ContractViolation("build_pairs: anchor " + std::to_string(i) + " has no negative with another center");
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    for (std::size_t m = 0; m < negatives; ++m) {
      const Pool pool = m % 2 == 0 ? Pool::sampled : Pool::generated;
      batch.negatives[i].push_back({pool, candidates[pick(rng)]});
    }
  }
  return batch;
}

ContrastBatch build_pairs(std::span<const Subgraph> sampled, std::span<const GeneratedSubgraph> generated, Rng& rng,
                          std::size_t negatives) {
  if (sampled.size() != generated.size())
    throw ContractViolation("build_pairs: " + std::to_string(sampled.size()) + " sampled vs " +
                            std::to_string(generated.size()) + " generated");
  std::vector<std::uint32_t> centers;
  centers.reserve(sampled.size());
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    if (sampled[i].center != generated[i].center)
      throw ContractViolation("build_pairs: pools disagree on the center of anchor " + std::to_string(i));
    centers.push_back(sampled[i].center);
  }
  return build_pairs(centers, rng, negatives);
}

double contrastive_loss(std::span<const std::vector<double>> positive, std::span<const std::vector<double>> negative,
                        double tau) {
  check_tau(tau);
  if (positive.size() != negative.size()) throw ContractViolation("contrastive_loss: misaligned anchors");
  double sum = 0.0;
  std::size_t terms = 0;
  for (std::size_t i = 0; i < positive.size(); ++i) {
    for (double d : positive[i]) sum += d / tau;
    for (double d : negative[i]) sum += negative_term(d, tau);
    terms += positive[i].size() + negative[i].size();
  }
  return terms == 0 ? 0.0 : sum / static_cast<double>(terms);
}

double contrastive_loss(std::span<const double> positive, std::span<const std::vector<double>> negative, double tau) {
  std::vector<std::vector<double>> pos;
  pos.reserve(positive.size());
  for (double d : positive) pos.push_back({d});
  return contrastive_loss(pos, negative, tau);
}

double total_loss(double l1, double l2, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "must lie in [0, 1], got " + std::to_string(lambda));
  return lambda * l1 + (1.0 - lambda) * l2;
}

namespace ad {

Tensor contrastive_loss(Tape& tape, std::span<const std::vector<Tensor>> positive,
                        std::span<const std::vector<Tensor>> negative, double tau) {
  check_tau(tau);
  if (positive.size() != negative.size()) throw ContractViolation("contrastive_loss: misaligned anchors");
  std::vector<Tensor> pos, neg;
  for (std::size_t i = 0; i < positive.size(); ++i) {
    pos.insert(pos.end(), positive[i].begin(), positive[i].end());
    neg.insert(neg.end(), negative[i].begin(), negative[i].end());
  }
  const std::size_t terms = pos.size() + neg.size();
  if (terms == 0) return Tensor::scalar(0.0);

  std::vector<Tensor> parts;
  if (!pos.empty()) parts.push_back(tape.scale(tape.sum(tape.concat_rows(pos)), 1.0 / tau));
  if (!neg.empty()) {
    const Tensor sim = tape.clamp_max(tape.exp(tape.scale(tape.concat_rows(neg), -1.0 / tau)), kNegativeClamp);
    parts.push_back(tape.scale(tape.sum(tape.log(tape.add_scalar(tape.scale(sim, -1.0), 1.0))), -1.0));
  }
  const Tensor sum = parts.size() == 2 ? tape.add(parts[0], parts[1]) : parts[0];
  return tape.scale(sum, 1.0 / static_cast<double>(terms));
}

Tensor total_loss(Tape& tape, const Tensor& l1, const Tensor& l2, double lambda) {
  gsc::total_loss(0.0, 0.0, lambda);
  return tape.add(tape.scale(l1, lambda), tape.scale(l2, 1.0 - lambda));
}

}  // namespace ad

}  // namespace gsc
