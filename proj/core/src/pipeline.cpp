#include "mvped/pipeline.hpp"

#include <string>
#include <vector>

#include "mvped/common.hpp"
#include "mvped/dataset.hpp"
#include "mvped/detect.hpp"
#include "mvped/optimize.hpp"
#include "mvped/synth.hpp"
#include "mvped/tensor.hpp"
#include "mvped/volume.hpp"

namespace mvped {

namespace {

GridSpec dataset_grid(const DatasetManifest& manifest, const RunConfig& config) {
  return grid_from_area(manifest.calibration.area, config.voxel_size, config.z_extent);
}

void write_effective_config(const std::filesystem::path& dir, const RunConfig& config) {
  write_config(dir / "effective_config.json", config);
}

}  // namespace

void cmd_synth(const RunConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  generate(config.synth, out_dir);
  write_effective_config(out_dir, config);
}

void cmd_segment(const std::filesystem::path& dataset_dir, const RunConfig& config) {
  config.validate();
  const DatasetManifest manifest = open_dataset(dataset_dir);

  MaskStack masks;
  if (config.oracle_masks) {
    if (!manifest.has_gt_masks)
      throw io_error("segment: missing input: gt_masks/view_*.vpt (dataset was generated "
                     "without ground-truth masks)");
    masks = load_mask_stack(manifest, "gt_masks");
  } else {
    const FeatureStack features = load_features(manifest);
    const SemanticMap semantic = load_semantic(manifest);
    masks = sis_segment(features, semantic, config.sis, manifest.image_height,
                        manifest.image_width);
  }

  write_masks(dataset_dir, manifest.calibration, masks);
  write_effective_config(dataset_dir, config);
}

void cmd_fit(const std::filesystem::path& dataset_dir, const RunConfig& config) {
  config.validate();
  const DatasetManifest manifest = open_dataset(dataset_dir);
  if (!manifest.has_masks)
    throw io_error("fit: missing input: masks/view_*.vpt (run segment first)");

  const MaskStack masks = load_mask_stack(manifest, "masks");
  const ImageStack images = load_images(manifest);
  const FeatureStack features = load_features(manifest);
  const GridSpec grid = dataset_grid(manifest, config);

  std::vector<FeatureVolume> lifted;
  lifted.reserve(manifest.calibration.cameras.size());
  for (int n = 0; n < manifest.num_views(); ++n)
    lifted.push_back(lift_features(manifest.calibration.cameras[n], features, n, grid));

  const FusedVolume fused = config.fit.fusion == FusionMode::softmax
                                ? fuse_softmax(lifted, config.fit.temperature)
                                : fuse_alternative(lifted, config.fit.fusion, config.seed);

  FitInputs inputs;
  inputs.calibration = &manifest.calibration;
  inputs.masks = &masks;
  inputs.images = &images;
  inputs.fused = &fused;
  const FitResult result = fit(inputs, grid, config.fit, config.render);

  write_tensor(dataset_dir / "scene_density.vpt",
               Tensor::from_doubles({static_cast<std::size_t>(grid.nx),
                                     static_cast<std::size_t>(grid.ny),
                                     static_cast<std::size_t>(grid.nz)},
                                    result.scene.density));
  write_tensor(dataset_dir / "scene_color.vpt",
               Tensor::from_doubles({3, static_cast<std::size_t>(grid.nx),
                                     static_cast<std::size_t>(grid.ny),
                                     static_cast<std::size_t>(grid.nz)},
                                    result.scene.color));
  write_loss_history(dataset_dir / "loss_history.csv", result.history);
  write_effective_config(dataset_dir, config);
}

void cmd_detect(const std::filesystem::path& dataset_dir, const RunConfig& config) {
  config.validate();
  const DatasetManifest manifest = open_dataset(dataset_dir);
  const std::filesystem::path density_path = dataset_dir / "scene_density.vpt";
  if (!std::filesystem::exists(density_path))
    throw io_error("detect: missing input: scene_density.vpt (run fit first)");

  const GridSpec grid = dataset_grid(manifest, config);
  const Tensor t = read_tensor(density_path);
  if (t.ndim() != 3 || t.dim(0) != static_cast<std::size_t>(grid.nx) ||
      t.dim(1) != static_cast<std::size_t>(grid.ny) || t.dim(2) != static_cast<std::size_t>(grid.nz))
    throw validation_error("detect: scene_density.vpt shape does not match the grid implied by "
                           "calibration area and config voxel_size/z_extent");

  const BevMap bev = bev_project(t.as_doubles(), grid);
  const DetectionSet dets =
      extract_peaks(bev, config.detect.score_threshold, config.detect.nms_radius);

  write_detections_csv(dataset_dir / "detections.csv", dets);
  write_bev_pgm(dataset_dir / "bev.pgm", bev);
  write_effective_config(dataset_dir, config);
}

void cmd_eval(const std::filesystem::path& dataset_dir, const RunConfig& config) {
  config.validate();
  const DatasetManifest manifest = open_dataset(dataset_dir);
  const std::filesystem::path det_path = dataset_dir / "detections.csv";
  if (!std::filesystem::exists(det_path))
    throw io_error("eval: missing input: detections.csv (run detect first)");
  if (!manifest.has_gt_positions)
    throw io_error("eval: missing input: gt_positions.vpt (dataset has no ground truth)");

  const DetectionSet dets = read_detections_csv(det_path);
  const std::vector<std::array<double, 2>> gt = load_gt_positions(manifest);
  const MetricsReport report = match_and_score(dets, gt, config.detect.match_radius);

  write_metrics_json(dataset_dir / "metrics.json", report);
  write_effective_config(dataset_dir, config);
}

void cmd_pipeline(const std::filesystem::path& dataset_dir, const RunConfig& config) {
  cmd_segment(dataset_dir, config);
  cmd_fit(dataset_dir, config);
  cmd_detect(dataset_dir, config);
  cmd_eval(dataset_dir, config);
}

}  // namespace mvped
