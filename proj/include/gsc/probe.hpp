#pragma once

// Linear probe: multinomial logistic regression on frozen embeddings.

#include <cstddef>
#include <span>
#include <vector>

#include "gsc/config.hpp"
#include "gsc/graph.hpp"

namespace gsc {

struct ProbeResult {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  std::size_t evaluated = 0;
  std::vector<std::size_t> class_total;    // evaluation nodes per class
  std::vector<std::size_t> class_correct;  // correctly predicted per class
};

// Trains on the train split and scores `eval_split`. Classes are 0..K-1 with
// K = 1 + the largest label among split nodes; a class with no training node
// throws ProbeError naming it. Prediction ties go to the lowest class id.
ProbeResult linear_probe(const Matrix& embeddings, std::span<const int> labels, std::span<const Split> splits,
                         const ProbeConfig& cfg = {}, Split eval_split = Split::test);

}  // namespace gsc
