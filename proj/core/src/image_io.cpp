#include "mvped/image_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

namespace mvped {

namespace {

std::uint8_t quantize(double x) {
  if (!(x >= 0.0 && x <= 1.0))
    throw validation_error("image write: value " + std::to_string(x) + " outside [0,1]");
  // round-half-up: 0.5 -> 128
  return static_cast<std::uint8_t>(std::floor(255.0 * x + 0.5));
}

void write_pnm(const std::filesystem::path& path, const char* tag,
               const std::vector<double>& values, std::size_t height, std::size_t width,
               std::size_t channels) {
  if (values.size() != height * width * channels)
    throw validation_error("image write: size mismatch for " + path.string());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("image write: cannot open " + path.string());
  out << tag << "\n" << width << " " << height << "\n255\n";
  std::vector<std::uint8_t> bytes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) bytes[i] = quantize(values[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("image write: failed writing " + path.string());
}

}  // namespace

void write_image_pgm(const std::filesystem::path& path, const std::vector<double>& values,
                     std::size_t height, std::size_t width) {
  write_pnm(path, "P5", values, height, width, 1);
}

void write_image_ppm(const std::filesystem::path& path, const std::vector<double>& values,
                     std::size_t height, std::size_t width) {
  write_pnm(path, "P6", values, height, width, 3);
}

}  // namespace mvped
