#pragma once

#include <filesystem>
#include <vector>

#include "mvped/common.hpp"

namespace mvped {

/// Writes a single-channel image (row-major H x W, values in [0,1]) as
/// binary PGM (P5), 8-bit, byte = round(255 * x) with halves rounded up.
void write_image_pgm(const std::filesystem::path& path, const std::vector<double>& values,
                     std::size_t height, std::size_t width);

/// Writes a 3-channel image (row-major H x W x 3, values in [0,1]) as
/// binary PPM (P6), 8-bit.
void write_image_ppm(const std::filesystem::path& path, const std::vector<double>& values,
                     std::size_t height, std::size_t width);

}  // namespace mvped
