#pragma once

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <vector>

#include "mvped/common.hpp"

namespace mvped {

/// Dense float32 tensor, row-major with the last dimension fastest.
/// This is the in-file dtype; compute modules convert to double on ingest.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  /// Allocates a zero-filled tensor.
  static Tensor zeros(std::vector<std::size_t> shape);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  std::vector<double> as_doubles() const;
  static Tensor from_doubles(std::vector<std::size_t> shape, const std::vector<double>& values);

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

/// VPT1 container: magic "VPT1", u8 dtype (0 = f32), u8 ndim (1..4),
/// ndim x u32 little-endian dims, then the little-endian f32 payload.
/// Read rejects bad magic, unknown dtype, bad ndim, dim overflow, truncated
/// or oversized payloads, and non-finite values, each with its own message.
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

/// Reads only the header and returns the shape. Same validation as
/// read_tensor up to (and excluding) the payload.
std::vector<std::size_t> read_tensor_shape(const std::filesystem::path& path);

}  // namespace mvped
