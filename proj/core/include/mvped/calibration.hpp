#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "mvped/geometry.hpp"

namespace mvped {

/// Ground-plane rectangle [xmin, ymin, xmax, ymax] in meters.
struct AreaBounds {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

/// All cameras observing one shared world frame.
struct CalibrationSet {
  AreaBounds area;
  std::vector<CameraModel> cameras;  ///< N >= 2, distinct view ids
};

/// Reads the calibration JSON:
///   {"area": [xmin,ymin,xmax,ymax],
///    "cameras": [{"id","width","height","K":[9],"R":[9],"t":[3]}, ...]}
/// K and R are row-major. Rotations with orthonormality residual in
/// (1e-4, 1e-2] are snapped to the nearest rotation with a warning on
/// stderr; beyond 1e-2 (or with negative determinant) the file is rejected.
CalibrationSet read_calibration(const std::filesystem::path& path);

void write_calibration(const std::filesystem::path& path, const CalibrationSet& calib);

}  // namespace mvped
