#include "gsc/adam.hpp"

#include <cmath>

#include "gsc/errors.hpp"

namespace gsc::ad {

Adam::Adam(std::vector<Tensor> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw ContractViolation("Adam: parameter does not require gradients");
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (!params_[i].has_grad())
      throw ContractViolation("Adam: parameter " + std::to_string(i) + " has no gradient");

  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(opts_.beta1, t);
  const double bc2 = 1.0 - std::pow(opts_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].mutable_values();
    auto g = params_[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j] + opts_.weight_decay * w[j];
      m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * gj;
      v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
    params_[i].clear_grad();
  }
}

}  // namespace gsc::ad
