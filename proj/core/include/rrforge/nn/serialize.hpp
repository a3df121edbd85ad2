#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rrforge/nn/tensor.hpp"

namespace rrforge::nn {

/// Named tensor as stored in an RRF1 file.
struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// RRF1 layout, little-endian throughout:
//   "RRF1"
//   repeated until EOF:
//     u32 name_length, name bytes,
//     u32 rank, u64 dims[rank],
//     f64 payload[prod(dims)]
void write_rrf1(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_rrf1(std::istream& in);

void save_rrf1(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_rrf1(const std::filesystem::path& path);

}  // namespace rrforge::nn
