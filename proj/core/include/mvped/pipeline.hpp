#pragma once

#include <filesystem>

#include "mvped/config.hpp"

namespace mvped {

/// Pipeline stages as library calls. Each stage re-opens the dataset, runs
/// one transformation and writes its outputs (plus effective_config.json)
/// into the dataset directory, so stages compose across processes and a
/// stage rerun with identical inputs rewrites identical bytes.

/// Generates a synthetic dataset under out_dir.
void cmd_synth(const RunConfig& config, const std::filesystem::path& out_dir);

/// Writes masks/view_{id}.vpt (+ .pgm previews) from SIS, or copies the
/// stored ground-truth masks when config.oracle_masks is set.
void cmd_segment(const std::filesystem::path& dataset_dir, const RunConfig& config);

/// Lifts + fuses features, fits the scene volume against the masks and
/// masked images; writes scene_density.vpt, scene_color.vpt and
/// loss_history.csv.
void cmd_fit(const std::filesystem::path& dataset_dir, const RunConfig& config);

/// Projects the fitted density to the BEV, extracts peaks; writes
/// detections.csv and bev.pgm.
void cmd_detect(const std::filesystem::path& dataset_dir, const RunConfig& config);

/// Scores detections.csv against gt_positions.vpt; writes metrics.json.
void cmd_eval(const std::filesystem::path& dataset_dir, const RunConfig& config);

/// segment, fit, detect, eval in sequence.
void cmd_pipeline(const std::filesystem::path& dataset_dir, const RunConfig& config);

}  // namespace mvped
