#pragma once

#include <vector>

#include "gsc/checkpoint.hpp"
#include "gsc/kernels.hpp"
#include "gsc/sampler.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

// Single-layer GCN encoder: H = PReLU(Â · X · W).
struct EncoderParams {
  ad::Tensor weight;       // C×F
  ad::Tensor prelu_slope;  // 1×1

  static EncoderParams init(std::size_t in_dim, std::size_t out_dim, Rng& rng);
  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
  std::vector<ad::Tensor> tensors() const { return {weight, prelu_slope}; }
  void append_named(std::vector<NamedTensor>& out) const;
  static EncoderParams from_named(const std::vector<NamedTensor>& tensors);
};

// Â · X as a constant tensor; X never changes during training so this is
// computed once and reused by every epoch.
ad::Tensor propagate_features(const kernels::CsrMatrix& norm_adj, const Matrix& features);

ad::Tensor encode(ad::Tape& tape, const kernels::CsrMatrix& norm_adj, const ad::Tensor& features,
                  const EncoderParams& p);

// Same as encode() when `propagated` = Â · X.
ad::Tensor encode_propagated(ad::Tape& tape, const ad::Tensor& propagated, const EncoderParams& p);

// Glorot-uniform r×c parameter.
ad::Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace gsc
