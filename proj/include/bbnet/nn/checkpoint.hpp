#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bbnet/nn/tensor.hpp"

namespace bbnet::nn {

/// One named tensor in a checkpoint.
struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

/// Checkpoint layout (all integers little-endian uint32):
///   "BBNET1"
///   repeated until EOF: name_len, name bytes, rank, dims[rank], float32 values[prod(dims)]
void write_checkpoint(const std::filesystem::path& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_checkpoint(const std::filesystem::path& path);

std::vector<char> encode_checkpoint(const std::vector<TensorRecord>& records);
std::vector<TensorRecord> decode_checkpoint(const std::vector<char>& bytes);

}  // namespace bbnet::nn
