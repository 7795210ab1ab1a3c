#include "mvped/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mvped/common.hpp"

namespace mvped {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed, const char* where) {
  if (!obj.is_object()) throw validation_error(std::string("config: ") + where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw validation_error(std::string("config: unknown key \"") + it.key() + "\" in " + where);
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;  // missing keys keep their defaults
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw validation_error(std::string("config: bad value for \"") + key + "\"");
  }
}

}  // namespace

void DetectConfig::validate() const {
  if (!(score_threshold > 0.0) || !(score_threshold < 1.0))
    throw validation_error("config: detect.score_threshold must be in (0, 1)");
  if (!(nms_radius > 0.0)) throw validation_error("config: detect.nms_radius must be positive");
  if (!(match_radius > 0.0)) throw validation_error("config: detect.match_radius must be positive");
}

void RunConfig::apply_seed() {
  synth.seed = seed;
  sis.seed = seed;
  fit.seed = seed;
}

void RunConfig::validate() const {
  synth.validate();
  if (sis.iterations < 1) throw validation_error("config: sis.iterations must be at least 1");
  if (sis.pca_max_iters < 1) throw validation_error("config: sis.pca_max_iters must be at least 1");
  if (!(sis.pca_tol > 0.0)) throw validation_error("config: sis.pca_tol must be positive");
  if (!(voxel_size > 0.0)) throw validation_error("config: grid.voxel_size must be positive");
  if (!(z_extent > 0.0)) throw validation_error("config: grid.z_extent must be positive");
  render.validate();
  fit.validate();
  detect.validate();
}

std::string decoder_mode_name(DecoderMode mode) {
  return mode == DecoderMode::direct ? "direct" : "linear";
}

DecoderMode decoder_mode_from_name(const std::string& name) {
  if (name == "direct") return DecoderMode::direct;
  if (name == "linear") return DecoderMode::linear;
  throw validation_error("config: unknown decoder \"" + name + "\" (expected direct or linear)");
}

std::string fusion_mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::softmax: return "softmax";
    case FusionMode::add: return "add";
    case FusionMode::concat_project: return "concat_project";
  }
  throw validation_error("config: bad fusion mode value");
}

FusionMode fusion_mode_from_name(const std::string& name) {
  if (name == "softmax") return FusionMode::softmax;
  if (name == "add") return FusionMode::add;
  if (name == "concat_project") return FusionMode::concat_project;
  throw validation_error("config: unknown fusion \"" + name +
                         "\" (expected softmax, add or concat_project)");
}

std::string config_to_json(const RunConfig& config) {
  json doc;
  doc["seed"] = config.seed;
  doc["synth"] = {{"num_cameras", config.synth.num_cameras},
                  {"num_pedestrians", config.synth.num_pedestrians},
                  {"area_width", config.synth.area_width},
                  {"area_height", config.synth.area_height},
                  {"pedestrian_radius", config.synth.pedestrian_radius},
                  {"pedestrian_height", config.synth.pedestrian_height},
                  {"image_size", config.synth.image_size},
                  {"feature_dim", config.synth.feature_dim},
                  {"noise_sigma", config.synth.noise_sigma}};
  doc["sis"] = {{"iterations", config.sis.iterations},
                {"phi_threshold", config.sis.phi_threshold},
                {"semantic_selection", config.sis.semantic_selection},
                {"oracle_masks", config.oracle_masks},
                {"pca_max_iters", config.sis.pca_max_iters},
                {"pca_tol", config.sis.pca_tol}};
  doc["grid"] = {{"voxel_size", config.voxel_size}, {"z_extent", config.z_extent}};
  doc["render"] = {{"samples_per_ray", config.render.samples_per_ray},
                   {"width", config.render.width},
                   {"height", config.render.height},
                   {"chunk_size", config.render.chunk_size}};
  doc["fit"] = {{"iterations", config.fit.iterations},
                {"learning_rate", config.fit.learning_rate},
                {"beta1", config.fit.beta1},
                {"beta2", config.fit.beta2},
                {"epsilon", config.fit.epsilon},
                {"huber_delta", config.fit.huber_delta},
                {"lambda_vbr", config.fit.lambda_vbr},
                {"temperature", config.fit.temperature},
                {"decoder", decoder_mode_name(config.fit.decoder)},
                {"fusion", fusion_mode_name(config.fit.fusion)}};
  doc["detect"] = {{"score_threshold", config.detect.score_threshold},
                   {"nms_radius", config.detect.nms_radius},
                   {"match_radius", config.detect.match_radius}};
  return doc.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("config: invalid JSON: ") + e.what());
  }
  require_keys(doc, {"seed", "synth", "sis", "grid", "render", "fit", "detect"}, "document");

  RunConfig config;
  read_into(doc, "seed", config.seed);

  if (doc.contains("synth")) {
    const json& s = doc["synth"];
    require_keys(s,
                 {"num_cameras", "num_pedestrians", "area_width", "area_height",
                  "pedestrian_radius", "pedestrian_height", "image_size", "feature_dim",
                  "noise_sigma"},
                 "synth");
    read_into(s, "num_cameras", config.synth.num_cameras);
    read_into(s, "num_pedestrians", config.synth.num_pedestrians);
    read_into(s, "area_width", config.synth.area_width);
    read_into(s, "area_height", config.synth.area_height);
    read_into(s, "pedestrian_radius", config.synth.pedestrian_radius);
    read_into(s, "pedestrian_height", config.synth.pedestrian_height);
    read_into(s, "image_size", config.synth.image_size);
    read_into(s, "feature_dim", config.synth.feature_dim);
    read_into(s, "noise_sigma", config.synth.noise_sigma);
  }
  if (doc.contains("sis")) {
    const json& s = doc["sis"];
    require_keys(s,
                 {"iterations", "phi_threshold", "semantic_selection", "oracle_masks",
                  "pca_max_iters", "pca_tol"},
                 "sis");
    read_into(s, "iterations", config.sis.iterations);
    read_into(s, "phi_threshold", config.sis.phi_threshold);
    read_into(s, "semantic_selection", config.sis.semantic_selection);
    read_into(s, "oracle_masks", config.oracle_masks);
    read_into(s, "pca_max_iters", config.sis.pca_max_iters);
    read_into(s, "pca_tol", config.sis.pca_tol);
  }
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    require_keys(g, {"voxel_size", "z_extent"}, "grid");
    read_into(g, "voxel_size", config.voxel_size);
    read_into(g, "z_extent", config.z_extent);
  }
  if (doc.contains("render")) {
    const json& r = doc["render"];
    require_keys(r, {"samples_per_ray", "width", "height", "chunk_size"}, "render");
    read_into(r, "samples_per_ray", config.render.samples_per_ray);
    read_into(r, "width", config.render.width);
    read_into(r, "height", config.render.height);
    read_into(r, "chunk_size", config.render.chunk_size);
  }
  if (doc.contains("fit")) {
    const json& f = doc["fit"];
    require_keys(f,
                 {"iterations", "learning_rate", "beta1", "beta2", "epsilon", "huber_delta",
                  "lambda_vbr", "temperature", "decoder", "fusion"},
                 "fit");
    read_into(f, "iterations", config.fit.iterations);
    read_into(f, "learning_rate", config.fit.learning_rate);
    read_into(f, "beta1", config.fit.beta1);
    read_into(f, "beta2", config.fit.beta2);
    read_into(f, "epsilon", config.fit.epsilon);
    read_into(f, "huber_delta", config.fit.huber_delta);
    read_into(f, "lambda_vbr", config.fit.lambda_vbr);
    read_into(f, "temperature", config.fit.temperature);
    std::string name;
    read_into(f, "decoder", name);
    if (!name.empty()) config.fit.decoder = decoder_mode_from_name(name);
    name.clear();
    read_into(f, "fusion", name);
    if (!name.empty()) config.fit.fusion = fusion_mode_from_name(name);
  }
  if (doc.contains("detect")) {
    const json& d = doc["detect"];
    require_keys(d, {"score_threshold", "nms_radius", "match_radius"}, "detect");
    read_into(d, "score_threshold", config.detect.score_threshold);
    read_into(d, "nms_radius", config.detect.nms_radius);
    read_into(d, "match_radius", config.detect.match_radius);
  }

  config.apply_seed();
  config.validate();
  return config;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("config: cannot open " + path.string() + " for writing");
  out << config_to_json(config);
}

}  // namespace mvped
