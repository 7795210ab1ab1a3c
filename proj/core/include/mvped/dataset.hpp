#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "mvped/calibration.hpp"
#include "mvped/sis.hpp"

namespace mvped {

/// RGB images for all views, [n][h][w][3], values in [0, 1].
struct ImageStack {
  int views = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

/// Dataset directory layout. All per-view files are named by the camera's
/// view id, enumerated in calibration order:
///
///   calibration.json
///   features/view_{id}.vpt       H' x W' x D
///   semantic/view_{id}.vpt       H' x W'
///   images/view_{id}.vpt         H x W x 3
///   masks/view_{id}.vpt          H x W          (written by segmentation)
///   gt_positions.vpt             G x 2          (optional)
///   gt_masks/view_{id}.vpt       H x W          (optional)
std::filesystem::path calibration_path(const std::filesystem::path& root);
std::filesystem::path view_path(const std::filesystem::path& root, const std::string& kind,
                                int view_id);
std::filesystem::path gt_positions_path(const std::filesystem::path& root);

struct DatasetManifest {
  std::filesystem::path root;
  CalibrationSet calibration;
  int feat_height = 0;
  int feat_width = 0;
  int feature_dim = 0;
  int image_height = 0;
  int image_width = 0;
  bool has_masks = false;
  bool has_gt_positions = false;
  bool has_gt_masks = false;

  int num_views() const { return static_cast<int>(calibration.cameras.size()); }
};

/// Reads the calibration and probes every required tensor header.
/// Validates that all views agree on (H', W', D) and (H, W), that each
/// image matches its camera's declared size, and that the feature
/// resolution divides the image resolution.
DatasetManifest open_dataset(const std::filesystem::path& root);

FeatureStack load_features(const DatasetManifest& manifest);
SemanticMap load_semantic(const DatasetManifest& manifest);
ImageStack load_images(const DatasetManifest& manifest);

/// kind is "masks" or "gt_masks"; values must be exactly 0.0 or 1.0.
MaskStack load_mask_stack(const DatasetManifest& manifest, const std::string& kind);

std::vector<std::array<double, 2>> load_gt_positions(const DatasetManifest& manifest);

/// Writes masks/view_{id}.vpt plus a masks/view_{id}.pgm preview per view.
void write_masks(const std::filesystem::path& root, const CalibrationSet& calibration,
                 const MaskStack& masks);

}  // namespace mvped
