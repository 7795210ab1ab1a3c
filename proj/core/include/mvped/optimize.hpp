#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mvped/dataset.hpp"
#include "mvped/renderer.hpp"
#include "mvped/volume.hpp"

namespace mvped {

struct LossReport {
  int iteration = 0;
  double l_color = 0.0;
  double l_mask = 0.0;
  double l_vbr = 0.0;
  double total = 0.0;
};

struct FitConfig {
  int iterations = 500;
  double learning_rate = 0.1;  ///< direct-mode default; linear mode wants ~0.01
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double huber_delta = 1.0;
  double lambda_vbr = 1.0;
  double temperature = 1.0;
  DecoderMode decoder = DecoderMode::direct;
  FusionMode fusion = FusionMode::softmax;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Mean-over-elements Huber loss and its gradient w.r.t. pred.
std::pair<double, std::vector<double>> huber_loss(const std::vector<double>& pred,
                                                  const std::vector<double>& target, double delta);

/// Mean over BEV columns of |max_z density|; the subgradient routes the
/// column's share to its lowest-z argmax voxel. Density must be >= 0 (the
/// absolute value is then the identity; still computed, not assumed).
std::pair<double, std::vector<double>> vbr_loss(const std::vector<double>& density,
                                                const GridSpec& grid);

/// Training targets at one resolution: mask target = M, color target = the
/// image with background zeroed. mask is [n][h][w]; color is [n][3][h][w].
struct RenderTargets {
  int views = 0;
  int height = 0;
  int width = 0;
  std::vector<double> mask;
  std::vector<double> color;
};

RenderTargets color_mask_targets(const MaskStack& masks, const ImageStack& images);

/// Area-average to the render resolution; masks re-binarize at >= 0.5.
MaskStack downsample_masks(const MaskStack& masks, int out_height, int out_width);
ImageStack downsample_images(const ImageStack& images, int out_height, int out_width);

struct TotalLossResult {
  LossReport report;
  std::vector<std::vector<double>> d_mask;   ///< per view, h*w
  std::vector<std::vector<double>> d_color;  ///< per view, 3 planes of h*w
  std::vector<double> d_density_vbr;         ///< lambda-weighted, on the grid
};

/// Huber(mask) + Huber(color) + lambda * VBR, means taken over all views'
/// elements jointly. Gradients are split per consumer: per-view upstream
/// gradients for render_backward plus the VBR term on the density grid.
TotalLossResult total_loss(const std::vector<RenderedView>& rendered,
                           const RenderTargets& targets, const std::vector<double>& density,
                           const GridSpec& grid, double huber_delta, double lambda_vbr);

struct FitInputs {
  const CalibrationSet* calibration = nullptr;
  const MaskStack* masks = nullptr;    ///< image resolution
  const ImageStack* images = nullptr;  ///< image resolution
  const FusedVolume* fused = nullptr;
};

struct FitResult {
  SceneVolume scene;  ///< decoded from the best-total-loss parameters
  DecoderParams params;
  std::vector<LossReport> history;
};

/// Adam on the decoder parameters against the rendering + VBR objective.
/// Full batch over views, sequential and deterministic. Non-finite loss
/// aborts with a divergence error naming the iteration.
FitResult fit(const FitInputs& inputs, const GridSpec& grid, const FitConfig& cfg,
              const RenderConfig& render_cfg);

void write_loss_history(const std::filesystem::path& path,
                        const std::vector<LossReport>& history);

}  // namespace mvped
