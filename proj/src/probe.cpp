#include "gsc/probe.hpp"

#include <algorithm>
#include <string>

#include "gsc/adam.hpp"
#include "gsc/errors.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

ProbeResult linear_probe(const Matrix& embeddings, std::span<const int> labels, std::span<const Split> splits,
                         const ProbeConfig& cfg, Split eval_split) {
  const std::size_t n = embeddings.rows;
  const std::size_t f = embeddings.cols;
  if (labels.size() != n || splits.size() != n)
    throw ProbeError("probe: " + std::to_string(n) + " embeddings vs " + std::to_string(labels.size()) + " labels and " +
                     std::to_string(splits.size()) + " splits");

  std::vector<std::size_t> train, eval;
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (splits[i] == Split::none) continue;
    if (labels[i] < 0) throw ProbeError("probe: node " + std::to_string(i) + " has negative label");
    max_label = std::max(max_label, labels[i]);
    if (splits[i] == Split::train) train.push_back(i);
    if (splits[i] == eval_split) eval.push_back(i);
  }
  if (max_label < 0) throw ProbeError("probe: no labeled split nodes");
  if (eval.empty()) throw ProbeError(std::string("probe: empty ") + std::string(split_name(eval_split)) + " split");
  const auto classes = static_cast<std::size_t>(max_label) + 1;
  std::vector<std::size_t> train_count(classes, 0);
  for (auto i : train) ++train_count[static_cast<std::size_t>(labels[i])];
  for (std::size_t c = 0; c < classes; ++c)
    if (train_count[c] == 0) throw ProbeError("probe: class " + std::to_string(c) + " is absent from the train split");

  Matrix x_train(train.size(), f);
  std::vector<int> y_train;
  for (std::size_t r = 0; r < train.size(); ++r) {
    std::copy_n(embeddings.row(train[r]).begin(), f, x_train.row(r).begin());
    y_train.push_back(labels[train[r]]);
  }
  const ad::Tensor x = ad::Tensor::from_matrix(x_train);
  ad::Tensor w = ad::Tensor::zeros({f, classes}, true);
  ad::Tensor b = ad::Tensor::zeros({1, classes}, true);
  ad::Adam opt_w({w}, {.lr = cfg.lr, .weight_decay = cfg.l2});
  ad::Adam opt_b({b}, {.lr = cfg.lr});
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    ad::Tape tape;
    const ad::Tensor logits = tape.add_row(tape.matmul(x, w), b);
    tape.backward(tape.cross_entropy(logits, y_train));
    opt_w.step();
    opt_b.step();
  }

  ProbeResult res;
  res.class_total.assign(classes, 0);
  res.class_correct.assign(classes, 0);
  const auto wv = w.values();
  const auto bv = b.values();
  for (auto i : eval) {
    const auto row = embeddings.row(i);
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      double s = bv[c];
      for (std::size_t j = 0; j < f; ++j) s += row[j] * wv[j * classes + c];
      if (c == 0 || s > best_score) {
        best = c;
        best_score = s;
      }
    }
    const auto truth = static_cast<std::size_t>(labels[i]);
    if (truth < classes) ++res.class_total[truth];
    if (best == truth) ++res.class_correct[truth];
  }
  std::size_t correct = 0;
  for (auto c : res.class_correct) correct += c;
  res.evaluated = eval.size();
  res.accuracy = static_cast<double>(correct) / static_cast<double>(eval.size());
  // Single-label multiclass: every miss is one false positive and one false negative.
  res.micro_f1 = res.accuracy;
  return res;
}

}  // namespace gsc
