#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mvped/optimize.hpp"
#include "mvped/renderer.hpp"
#include "mvped/sis.hpp"
#include "mvped/synth.hpp"

namespace mvped {

// Detection-stage thresholds (BEV peak extraction and evaluation matching).
struct DetectConfig {
  double score_threshold = 0.4;
  double nms_radius = 0.5;
  double match_radius = 0.5;

  void validate() const;
};

// Everything a pipeline run needs, serialized as one JSON file. A single
// top-level seed drives synthesis, SIS, fusion and fitting so that one
// config + one seed reproduces a run byte for byte.
struct RunConfig {
  std::uint64_t seed = 1;
  SynthConfig synth;
  SisConfig sis;
  bool oracle_masks = false;  // use stored ground-truth masks instead of SIS
  double voxel_size = 0.25;
  double z_extent = 2.0;
  RenderConfig render;
  FitConfig fit;
  DetectConfig detect;

  // Pushes the top-level seed into the per-stage configs.
  void apply_seed();
  void validate() const;
};

std::string decoder_mode_name(DecoderMode mode);
DecoderMode decoder_mode_from_name(const std::string& name);
std::string fusion_mode_name(FusionMode mode);
FusionMode fusion_mode_from_name(const std::string& name);

// Serializes every field (defaults applied), so the output re-reads to an
// identical RunConfig.
std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);

RunConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace mvped
