#pragma once

// Binary parameter checkpoints.
//
//   "GSC1"                      magic
//   u32                         tensor count
//   per tensor:
//     u16 name length, UTF-8 name bytes
//     u8 rank, rank × u32 dims
//     product(dims) × f64 values
//
// All integers and floats are little-endian.

#include <filesystem>
#include <string>
#include <vector>

#include "gsc/tensor.hpp"

namespace gsc {

struct NamedTensor {
  std::string name;
  ad::Tensor tensor;
};

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);

// Loaded tensors are parameters (requires_grad = true).
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

}  // namespace gsc
