#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mvped/geometry.hpp"
#include "mvped/volume.hpp"

namespace mvped {

struct RenderConfig {
  int samples_per_ray = 64;
  int width = 64;   ///< render resolution; rays are cast through these pixel
  int height = 64;  ///< centers mapped onto the camera's image plane
  int chunk_size = 1024;

  void validate() const;
};

/// mask is h*w; color is channel-major, 3 planes of h*w.
struct RenderedView {
  int height = 0;
  int width = 0;
  std::vector<double> mask;
  std::vector<double> color;
};

/// Slab intersection with the grid's outer box, clipped to t >= 0.
std::optional<std::pair<double, double>> ray_box_intersect(const Ray& ray, const GridSpec& grid);

/// Interpolates over the 8 surrounding voxel centers; points outside the
/// center lattice's hull return 0 (no clamping).
double trilinear_sample(const std::vector<double>& field, const GridSpec& grid,
                        const WorldPoint& p);

struct CompositeResult {
  double alpha = 0.0;
  double color[3] = {0.0, 0.0, 0.0};
  std::vector<double> weights;
};

/// Front-to-back emission-absorption: w_i = sigma_i * prod_{j<i}(1 - sigma_j).
/// colors is sample-major S x 3.
CompositeResult composite_ea(const std::vector<double>& sigma, const std::vector<double>& colors);

/// Precomputed sampling geometry for one camera: per ray, S midpoint samples
/// of [t_near, t_far] with their trilinear corner anchors. Cameras and grid
/// are fixed across fit iterations, so this is built once and reused.
struct RaySample {
  int base = -1;  ///< grid.index of the (0,0,0) corner; -1 outside the hull
  double fx = 0.0, fy = 0.0, fz = 0.0;
};

struct RayBundle {
  GridSpec grid;
  int height = 0;
  int width = 0;
  int samples_per_ray = 0;
  std::vector<RaySample> samples;  ///< ray-major, height*width*samples_per_ray
};

RayBundle build_ray_bundle(const GridSpec& grid, const CameraModel& camera,
                           const RenderConfig& cfg);

RenderedView render_bundle(const SceneVolume& scene, const RayBundle& bundle);

/// Builds the bundle internally; use render_bundle when fitting.
RenderedView render_view(const SceneVolume& scene, const CameraModel& camera,
                         const RenderConfig& cfg);

/// Exact gradients of the rendered mask/color w.r.t. the density and color
/// grids. d_mask is h*w, d_color is 3 planes of h*w; returns grids shaped
/// like scene.density and scene.color. Accumulation order is fixed (ray
/// order), so results are bit-stable.
std::pair<std::vector<double>, std::vector<double>> render_backward(
    const SceneVolume& scene, const RayBundle& bundle, const std::vector<double>& d_mask,
    const std::vector<double>& d_color);

/// Area-average downsample of a per-view stack to the render resolution;
/// factors must divide. Masks are re-binarized at 0.5 afterwards by the
/// caller when needed.
std::vector<double> downsample_average(const std::vector<double>& values, int height, int width,
                                       int out_height, int out_width);

}  // namespace mvped
