#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mvped/calibration.hpp"
#include "mvped/geometry.hpp"
#include "mvped/sis.hpp"

namespace mvped {

/// Axis-aligned voxel lattice. origin is the minimum corner; voxel (ix,iy,iz)
/// is centered at origin + (ix+0.5, iy+0.5, iz+0.5) * voxel_size.
struct GridSpec {
  WorldPoint origin;
  double voxel_size = 0.0;
  int nx = 0, ny = 0, nz = 0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * ny + iy) * nz + iz;
  }
  bool operator==(const GridSpec& o) const;

  void validate() const;
};

/// Smallest grid whose x/y footprint covers the area, z spanning [0, z_extent].
GridSpec grid_from_area(const AreaBounds& area, double voxel_size, double z_extent);

WorldPoint voxel_center(const GridSpec& grid, int ix, int iy, int iz);

/// One view's features lifted onto the grid, channel-major (C planes of
/// nx*ny*nz). Voxels whose center projects outside the view's frustum are
/// invisible and carry zero features.
struct FeatureVolume {
  GridSpec grid;
  int channels = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> visible;
};

struct FusedVolume {
  GridSpec grid;
  int channels = 0;
  std::vector<double> values;
  std::vector<int> coverage;  ///< visible-view count per voxel
};

/// Projects every voxel center into the view and bilinearly samples the
/// feature map (stack view n, feature-pixel coordinates scaled from image
/// coordinates, clamp-to-edge). All voxels on one back-projection ray
/// receive the same pixel's features.
FeatureVolume lift_features(const CameraModel& camera, const FeatureStack& stack, int view,
                            const GridSpec& grid);

/// Per-voxel soft-max over visible views, weighing view n by
/// exp(|feature_n|_2 / temperature) normalized over visible views.
FusedVolume fuse_softmax(const std::vector<FeatureVolume>& volumes, double temperature);

enum class FusionMode { softmax, add, concat_project };

/// `add` averages visible views. `concat_project` concatenates the visible
/// views (zero for invisible) and applies a fixed seeded orthonormal
/// projection back to C channels, equivalent to summing per-view orthonormal
/// C x C blocks.
FusedVolume fuse_alternative(const std::vector<FeatureVolume>& volumes, FusionMode mode,
                             std::uint64_t seed = 7);

/// Fitted radiance field: density in [0,1] (nx*ny*nz) and color in [0,1]
/// (3 planes of nx*ny*nz).
struct SceneVolume {
  GridSpec grid;
  std::vector<double> density;
  std::vector<double> color;

  void validate() const;
};

enum class DecoderMode { direct, linear };

/// Parameters mapping the fused volume to a SceneVolume. `direct` optimizes
/// free per-voxel logits and uses the fused volume only to pin voxels no
/// view observes; `linear` shares one affine-then-sigmoid map across voxels.
struct DecoderParams {
  DecoderMode mode = DecoderMode::direct;

  std::vector<double> density_logits;  ///< nx*ny*nz (direct)
  std::vector<double> color_logits;    ///< 3 planes (direct)

  Eigen::VectorXd w_sigma;  ///< C (linear)
  double b_sigma = 0.0;
  Eigen::MatrixXd w_color;  ///< 3 x C (linear)
  Eigen::Vector3d b_color = Eigen::Vector3d::Zero();

  static DecoderParams direct_init(const GridSpec& grid, double density_logit,
                                   double color_logit);
  static DecoderParams linear_init(int channels);

  std::size_t dof() const;
  double* flat(std::size_t i);  ///< optimizer view over all parameters
};

SceneVolume decode(const FusedVolume& fused, const DecoderParams& params);

/// Gradients of a scalar loss w.r.t. the decoder parameters, given
/// gradients w.r.t. the decoded density and color. Zero-coverage voxels
/// contribute nothing (their density is pinned to 0).
DecoderParams decode_backward(const FusedVolume& fused, const DecoderParams& params,
                              const std::vector<double>& d_density,
                              const std::vector<double>& d_color);

}  // namespace mvped
