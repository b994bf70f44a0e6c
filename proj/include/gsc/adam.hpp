#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gsc/tensor.hpp"

namespace gsc::ad {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions opts);

  // Applies one bias-corrected update to every parameter, then clears grads.
  // Throws ContractViolation when a parameter carries no gradient.
  void step();

  std::uint64_t steps() const noexcept { return step_; }
  const AdamOptions& options() const noexcept { return opts_; }
  std::span<const Tensor> params() const noexcept { return params_; }
  std::span<const double> first_moment(std::size_t i) const { return m_[i]; }
  std::span<const double> second_moment(std::size_t i) const { return v_[i]; }

 private:
  std::vector<Tensor> params_;
  AdamOptions opts_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t step_ = 0;
};

}  // namespace gsc::ad
