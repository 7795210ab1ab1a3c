#include "mvped/dataset.hpp"

#include <string>

#include "mvped/image_io.hpp"
#include "mvped/tensor.hpp"

namespace mvped {

namespace fs = std::filesystem;

std::filesystem::path calibration_path(const fs::path& root) { return root / "calibration.json"; }

std::filesystem::path view_path(const fs::path& root, const std::string& kind, int view_id) {
  return root / kind / ("view_" + std::to_string(view_id) + ".vpt");
}

std::filesystem::path gt_positions_path(const fs::path& root) { return root / "gt_positions.vpt"; }

namespace {

std::vector<std::size_t> probe(const fs::path& p, std::size_t want_ndim, const char* what) {
  const std::vector<std::size_t> shape = read_tensor_shape(p);
  if (shape.size() != want_ndim)
    throw validation_error(std::string(what) + ": expected " + std::to_string(want_ndim) +
                           "-d tensor, got " + std::to_string(shape.size()) + "-d in " +
                           p.string());
  return shape;
}

void expect_dims(const std::vector<std::size_t>& shape, const std::vector<std::size_t>& want,
                 const char* what, const fs::path& p) {
  if (shape != want) {
    std::string s = what;
    s += ": shape mismatch in " + p.string() + " (got";
    for (std::size_t d : shape) s += " " + std::to_string(d);
    s += ", want";
    for (std::size_t d : want) s += " " + std::to_string(d);
    s += ")";
    throw validation_error(s);
  }
}

bool all_views_present(const DatasetManifest& m, const std::string& kind) {
  for (const CameraModel& cam : m.calibration.cameras)
    if (!fs::exists(view_path(m.root, kind, cam.view_id()))) return false;
  return true;
}

}  // namespace

DatasetManifest open_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw io_error("dataset: not a directory: " + root.string());

  DatasetManifest m;
  m.root = root;
  m.calibration = read_calibration(calibration_path(root));
  if (m.calibration.cameras.size() < 2)
    throw validation_error("dataset: need at least 2 cameras, got " +
                           std::to_string(m.calibration.cameras.size()));

  bool first = true;
  for (const CameraModel& cam : m.calibration.cameras) {
    const int id = cam.view_id();
    const auto f = probe(view_path(root, "features", id), 3, "dataset features");
    const auto s = probe(view_path(root, "semantic", id), 2, "dataset semantic");
    const auto i = probe(view_path(root, "images", id), 3, "dataset images");
    if (first) {
      m.feat_height = static_cast<int>(f[0]);
      m.feat_width = static_cast<int>(f[1]);
      m.feature_dim = static_cast<int>(f[2]);
      m.image_height = static_cast<int>(i[0]);
      m.image_width = static_cast<int>(i[1]);
      first = false;
    }
    const auto fh = static_cast<std::size_t>(m.feat_height);
    const auto fw = static_cast<std::size_t>(m.feat_width);
    const auto fd = static_cast<std::size_t>(m.feature_dim);
    const auto ih = static_cast<std::size_t>(m.image_height);
    const auto iw = static_cast<std::size_t>(m.image_width);
    expect_dims(f, {fh, fw, fd}, "dataset features", view_path(root, "features", id));
    expect_dims(s, {fh, fw}, "dataset semantic", view_path(root, "semantic", id));
    expect_dims(i, {ih, iw, 3}, "dataset images", view_path(root, "images", id));
    if (cam.height() != m.image_height || cam.width() != m.image_width)
      throw validation_error("dataset: view " + std::to_string(id) +
                             " image tensor does not match its camera's declared size");
  }

  if (m.feature_dim < 2) throw validation_error("dataset: feature dim must be >= 2");
  if (m.image_height % m.feat_height != 0 || m.image_width % m.feat_width != 0)
    throw validation_error("dataset: feature resolution must divide image resolution");

  m.has_masks = all_views_present(m, "masks");
  m.has_gt_masks = all_views_present(m, "gt_masks");
  m.has_gt_positions = fs::exists(gt_positions_path(root));
  return m;
}

namespace {

/// Loads per-view 2-d or 3-d tensors into one contiguous double buffer.
std::vector<double> load_stack(const DatasetManifest& m, const std::string& kind,
                               std::size_t per_view) {
  std::vector<double> out;
  out.reserve(per_view * m.calibration.cameras.size());
  for (const CameraModel& cam : m.calibration.cameras) {
    const Tensor t = read_tensor(view_path(m.root, kind, cam.view_id()));
    if (t.size() != per_view)
      throw validation_error("dataset " + kind + ": unexpected size for view " +
                             std::to_string(cam.view_id()));
    const std::vector<double> v = t.as_doubles();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace

FeatureStack load_features(const DatasetManifest& m) {
  FeatureStack s;
  s.views = m.num_views();
  s.height = m.feat_height;
  s.width = m.feat_width;
  s.dim = m.feature_dim;
  const std::size_t per_view =
      static_cast<std::size_t>(m.feat_height) * m.feat_width * m.feature_dim;
  s.values = load_stack(m, "features", per_view);
  return s;
}

SemanticMap load_semantic(const DatasetManifest& m) {
  SemanticMap s;
  s.views = m.num_views();
  s.height = m.feat_height;
  s.width = m.feat_width;
  s.values = load_stack(m, "semantic", static_cast<std::size_t>(m.feat_height) * m.feat_width);
  for (double v : s.values)
    if (v < -1.0 || v > 1.0)
      throw validation_error("dataset semantic: similarity outside [-1, 1]");
  return s;
}

ImageStack load_images(const DatasetManifest& m) {
  ImageStack s;
  s.views = m.num_views();
  s.height = m.image_height;
  s.width = m.image_width;
  s.values = load_stack(m, "images", static_cast<std::size_t>(m.image_height) * m.image_width * 3);
  for (double v : s.values)
    if (v < 0.0 || v > 1.0) throw validation_error("dataset images: value outside [0, 1]");
  return s;
}

MaskStack load_mask_stack(const DatasetManifest& m, const std::string& kind) {
  MaskStack s;
  s.views = m.num_views();
  s.height = m.image_height;
  s.width = m.image_width;
  s.values = load_stack(m, kind, static_cast<std::size_t>(m.image_height) * m.image_width);
  for (double v : s.values)
    if (v != 0.0 && v != 1.0) throw validation_error("dataset " + kind + ": mask is not binary");
  return s;
}

std::vector<std::array<double, 2>> load_gt_positions(const DatasetManifest& m) {
  const Tensor t = read_tensor(gt_positions_path(m.root));
  if (t.ndim() != 2 || t.dim(1) != 2)
    throw validation_error("dataset gt_positions: expected a G x 2 tensor");
  std::vector<std::array<double, 2>> out(t.dim(0));
  for (std::size_t g = 0; g < t.dim(0); ++g)
    out[g] = {static_cast<double>(t[g * 2]), static_cast<double>(t[g * 2 + 1])};
  return out;
}

void write_masks(const fs::path& root, const CalibrationSet& calibration, const MaskStack& masks) {
  if (static_cast<int>(calibration.cameras.size()) != masks.views)
    throw validation_error("write_masks: view count mismatch");
  const std::size_t per_view = static_cast<std::size_t>(masks.height) * masks.width;
  const auto h = static_cast<std::size_t>(masks.height);
  const auto w = static_cast<std::size_t>(masks.width);
  for (int n = 0; n < masks.views; ++n) {
    const int id = calibration.cameras[n].view_id();
    std::vector<double> view(masks.values.begin() + n * per_view,
                             masks.values.begin() + (n + 1) * per_view);
    write_tensor(view_path(root, "masks", id), Tensor::from_doubles({h, w}, view));
    fs::path pgm = view_path(root, "masks", id);
    pgm.replace_extension(".pgm");
    write_image_pgm(pgm, view, h, w);
  }
}

}  // namespace mvped
