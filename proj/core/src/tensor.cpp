#include "mvped/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

static_assert(std::endian::native == std::endian::little,
              "VPT1 I/O assumes a little-endian host");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace mvped {

namespace {

constexpr char kMagic[4] = {'V', 'P', 'T', '1'};
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kMaxNdim = 4;
// Caps the element count so size arithmetic cannot overflow and a corrupt
// header cannot trigger a huge allocation.
constexpr std::uint64_t kMaxElements = 1ull << 31;

std::size_t checked_element_count(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > kMaxNdim)
    throw validation_error("tensor: ndim must be 1..4, got " + std::to_string(shape.size()));
  std::uint64_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw validation_error("tensor: zero-sized dimension");
    n *= static_cast<std::uint64_t>(d);
    if (n > kMaxElements) throw validation_error("tensor: dim overflow (element count too large)");
  }
  return static_cast<std::size_t>(n);
}

void check_finite(const std::vector<float>& data) {
  for (float v : data)
    if (!std::isfinite(v)) throw validation_error("tensor: non-finite values");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t expect = checked_element_count(shape_);
  if (data_.size() != expect)
    throw validation_error("tensor: data length " + std::to_string(data_.size()) +
                           " does not match shape product " + std::to_string(expect));
  check_finite(data_);
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = checked_element_count(shape);
  return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
}

std::vector<double> Tensor::as_doubles() const {
  return std::vector<double>(data_.begin(), data_.end());
}

Tensor Tensor::from_doubles(std::vector<std::size_t> shape, const std::vector<double>& values) {
  std::vector<float> f(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) f[i] = static_cast<float>(values[i]);
  return Tensor(std::move(shape), std::move(f));
}

namespace {

std::vector<std::size_t> read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[4];
  if (!in.read(magic, 4)) throw io_error("tensor read: truncated header in " + path.string());
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw io_error("tensor read: bad magic in " + path.string());

  std::uint8_t dtype = 0, ndim = 0;
  if (!in.read(reinterpret_cast<char*>(&dtype), 1) || !in.read(reinterpret_cast<char*>(&ndim), 1))
    throw io_error("tensor read: truncated header in " + path.string());
  if (dtype != kDtypeF32)
    throw io_error("tensor read: unknown dtype code " + std::to_string(dtype));
  if (ndim < 1 || ndim > kMaxNdim)
    throw io_error("tensor read: bad ndim " + std::to_string(ndim));

  std::vector<std::size_t> shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    std::uint32_t d = 0;
    if (!in.read(reinterpret_cast<char*>(&d), 4))
      throw io_error("tensor read: truncated header in " + path.string());
    shape[i] = d;
  }
  try {
    checked_element_count(shape);
  } catch (const Error& e) {
    throw io_error(std::string("tensor read: ") + e.what());
  }
  return shape;
}

}  // namespace

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("tensor read: cannot open " + path.string());

  std::vector<std::size_t> shape = read_header(in, path);
  const std::size_t count = checked_element_count(shape);

  std::vector<float> data(count);
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * 4)))
    throw io_error("tensor read: truncated payload in " + path.string());
  // A longer-than-declared payload is also a corrupt file, not extra slack.
  char extra;
  if (in.read(&extra, 1))
    throw io_error("tensor read: payload longer than header declares in " + path.string());

  for (float v : data)
    if (!std::isfinite(v))
      throw io_error("tensor read: non-finite values in " + path.string());

  return Tensor(std::move(shape), std::move(data));
}

std::vector<std::size_t> read_tensor_shape(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("tensor read: cannot open " + path.string());
  return read_header(in, path);
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  check_finite(t.data());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("tensor write: cannot open " + path.string());

  out.write(kMagic, 4);
  const std::uint8_t dtype = kDtypeF32;
  const std::uint8_t ndim = static_cast<std::uint8_t>(t.ndim());
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  out.write(reinterpret_cast<const char*>(&ndim), 1);
  for (std::size_t i = 0; i < t.ndim(); ++i) {
    const std::uint32_t d = static_cast<std::uint32_t>(t.dim(i));
    out.write(reinterpret_cast<const char*>(&d), 4);
  }
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * 4));
  if (!out) throw io_error("tensor write: failed writing " + path.string());
}

}  // namespace mvped
