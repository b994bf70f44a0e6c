#include "gsc/encoder.hpp"

#include <cmath>

#include "gsc/errors.hpp"

namespace gsc {

ad::Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = dist(rng);
  return ad::Tensor::parameter({rows, cols}, std::move(v));
}

EncoderParams EncoderParams::init(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  return {glorot(in_dim, out_dim, rng), ad::Tensor::parameter({1, 1}, {0.25})};
}

void EncoderParams::append_named(std::vector<NamedTensor>& out) const {
  out.push_back({"encoder.weight", weight});
  out.push_back({"encoder.prelu_slope", prelu_slope});
}

EncoderParams EncoderParams::from_named(const std::vector<NamedTensor>& tensors) {
  EncoderParams p;
  for (const auto& nt : tensors) {
    if (nt.name == "encoder.weight") p.weight = nt.tensor;
    if (nt.name == "encoder.prelu_slope") p.prelu_slope = nt.tensor;
  }
  if (!p.weight.defined() || !p.prelu_slope.defined()) throw CheckpointError("checkpoint lacks encoder tensors");
  if (p.weight.rank() != 2 || p.prelu_slope.numel() != 1) throw CheckpointError("encoder tensors have wrong shapes");
  return p;
}

ad::Tensor propagate_features(const kernels::CsrMatrix& norm_adj, const Matrix& features) {
  if (features.rows != norm_adj.cols)
    throw DimensionError("encode", "adjacency " + std::to_string(norm_adj.rows) + " vs feature rows " +
                                       std::to_string(features.rows));
  std::vector<double> out(norm_adj.rows * features.cols);
  kernels::spmm(kernels::default_exec(), norm_adj, features.cols, features.data, out, false);
  return ad::Tensor::constant({norm_adj.rows, features.cols}, std::move(out));
}

ad::Tensor encode_propagated(ad::Tape& tape, const ad::Tensor& propagated, const EncoderParams& p) {
  if (propagated.cols() != p.in_dim())
    throw DimensionError("encode", "feature dim " + std::to_string(propagated.cols()) + " vs weight rows " +
                                       std::to_string(p.in_dim()));
  return tape.prelu(tape.matmul(propagated, p.weight), p.prelu_slope);
}

ad::Tensor encode(ad::Tape& tape, const kernels::CsrMatrix& norm_adj, const ad::Tensor& features,
                  const EncoderParams& p) {
  if (features.cols() != p.in_dim())
    throw DimensionError("encode", "feature dim " + std::to_string(features.cols()) + " vs weight rows " +
                                       std::to_string(p.in_dim()));
  return tape.prelu(tape.matmul(tape.spmm(norm_adj, features), p.weight), p.prelu_slope);
}

}  // namespace gsc
