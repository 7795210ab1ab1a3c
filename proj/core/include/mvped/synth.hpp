#pragma once

#include <cstdint>
#include <filesystem>

#include "mvped/sis.hpp"

namespace mvped {

/// Synthetic scene: inward-looking cameras on a ring, ellipsoid pedestrians
/// on a textured ground plane, one box-shaped distractor object.
struct SynthConfig {
  int num_cameras = 4;
  int num_pedestrians = 5;
  double area_width = 8.0;   ///< meters; area spans [0, w] x [0, h]
  double area_height = 8.0;
  double pedestrian_radius = 0.3;
  double pedestrian_height = 1.7;
  int image_size = 64;    ///< square views; features share this resolution
  int feature_dim = 16;   ///< 3 color dims + class-embedding dims
  double noise_sigma = 0.02;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Writes a complete dataset: calibration.json, per-view images, features,
/// semantic maps, gt_masks, and gt_positions.vpt. Features are base color
/// plus a per-class embedding with Gaussian noise; the semantic map is 0.9
/// on pedestrian pixels and 0.1 elsewhere, noised and clipped to [-1, 1].
/// Placement rejection-samples pedestrian and distractor positions and
/// fails after 1000 attempts; every pedestrian must land in >= 2 frustums.
void generate(const SynthConfig& config, const std::filesystem::path& out_dir);

/// Exact analytic pedestrian masks for a dataset generated from this exact
/// config (the layout is rebuilt from the seed). Matches the stored
/// gt_masks byte for byte; lets fits run on oracle pseudo labels.
MaskStack ideal_masks(const SynthConfig& config);

}  // namespace mvped
