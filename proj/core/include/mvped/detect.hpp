#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "mvped/volume.hpp"

namespace mvped {

/// Top-down occupancy, values[ix * ny + iy] = max over z of the density
/// column. Cell (ix, iy) is centered at origin + (ix+0.5, iy+0.5) * voxel.
struct BevMap {
  GridSpec grid;
  std::vector<double> values;

  double cell_x(int ix) const { return grid.origin.x + (ix + 0.5) * grid.voxel_size; }
  double cell_y(int iy) const { return grid.origin.y + (iy + 0.5) * grid.voxel_size; }
};

struct Detection {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
};

struct DetectionSet {
  std::vector<Detection> items;
};

struct MetricsReport {
  double moda = 0.0;  ///< NaN when gt_count = 0 but detections exist
  double modp = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int gt_count = 0;
};

BevMap bev_project(const std::vector<double>& density, const GridSpec& grid);

/// Peaks = cells >= score_thr that dominate their 8-neighborhood, greedily
/// suppressed within nms_radius by descending score, then refined to the
/// score-weighted centroid of each survivor's cluster. Surviving positions
/// keep pairwise distance >= nms_radius.
DetectionSet extract_peaks(const BevMap& bev, double score_thr, double nms_radius);

/// Minimum-cost perfect assignment on an n x n cost matrix (row-major),
/// O(n^3). Returns the column matched to each row.
std::vector<int> hungarian(const std::vector<double>& cost, int n);

/// Optimal one-to-one matching within match_radius (maximum matches first,
/// minimum total distance among those), then MODA = 1 - (fp+fn)/G,
/// MODP = mean over matches of (1 - d/match_radius).
MetricsReport match_and_score(const DetectionSet& dets,
                              const std::vector<std::array<double, 2>>& gt, double match_radius);

void write_detections_csv(const std::filesystem::path& path, const DetectionSet& dets);
DetectionSet read_detections_csv(const std::filesystem::path& path);
void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);
void write_bev_pgm(const std::filesystem::path& path, const BevMap& bev);

}  // namespace mvped
