#include "mvped/calibration.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace mvped {

using nlohmann::json;

namespace {

constexpr double kModelTol = 1e-6;  ///< CameraModel's own rotation tolerance
constexpr double kSnapTol = 1e-4;
constexpr double kRejectTol = 1e-2;

void require_keys(const json& obj, const std::set<std::string>& allowed, const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw validation_error(std::string("calibration: unknown key \"") + it.key() + "\" in " +
                             where);
}

Eigen::Matrix3d mat3_from(const json& arr, const char* name) {
  if (!arr.is_array() || arr.size() != 9)
    throw validation_error(std::string("calibration: ") + name + " must be 9 row-major floats");
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = arr[3 * i + j].get<double>();
  return m;
}

}  // namespace

CalibrationSet read_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("calibration: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw validation_error("calibration: invalid JSON in " + path.string() + ": " + e.what());
  }

  require_keys(doc, {"area", "cameras"}, "document");
  if (!doc.contains("area") || !doc["area"].is_array() || doc["area"].size() != 4)
    throw validation_error("calibration: area must be [xmin,ymin,xmax,ymax]");
  if (!doc.contains("cameras") || !doc["cameras"].is_array())
    throw validation_error("calibration: cameras must be an array");

  CalibrationSet set;
  set.area = {doc["area"][0].get<double>(), doc["area"][1].get<double>(),
              doc["area"][2].get<double>(), doc["area"][3].get<double>()};
  if (!(set.area.width() > 0.0) || !(set.area.height() > 0.0))
    throw validation_error("calibration: empty area bounds");

  std::set<int> seen_ids;
  for (const auto& cam : doc["cameras"]) {
    require_keys(cam, {"id", "width", "height", "K", "R", "t"}, "camera entry");
    for (const char* key : {"id", "width", "height", "K", "R", "t"})
      if (!cam.contains(key))
        throw validation_error(std::string("calibration: camera entry missing \"") + key + "\"");

    const int id = cam["id"].get<int>();
    if (!seen_ids.insert(id).second)
      throw validation_error("calibration: duplicate view id " + std::to_string(id));

    Eigen::Matrix3d K = mat3_from(cam["K"], "K");
    Eigen::Matrix3d R = mat3_from(cam["R"], "R");
    if (!cam["t"].is_array() || cam["t"].size() != 3)
      throw validation_error("calibration: t must be 3 floats");
    Eigen::Vector3d t(cam["t"][0].get<double>(), cam["t"][1].get<double>(),
                      cam["t"][2].get<double>());

    if (R.determinant() < 0.0)
      throw validation_error("calibration: camera " + std::to_string(id) +
                             " rotation has negative determinant");
    const double resid = orthonormality_residual(R);
    if (resid > kRejectTol)
      throw validation_error("calibration: camera " + std::to_string(id) +
                             " rotation residual " + std::to_string(resid) + " exceeds 1e-2");
    if (resid > kSnapTol)
      std::cerr << "warning: calibration camera " << id << " rotation residual " << resid
                << ", snapping to nearest rotation\n";
    // Snap only when the CameraModel invariant (1e-6) would fail; rotations
    // that already hold it pass through bit-exact, so read/write cycles are
    // byte-stable.
    if (resid >= kModelTol) R = nearest_rotation(R);

    set.cameras.emplace_back(id, cam["width"].get<int>(), cam["height"].get<int>(), K, R, t);
  }

  // Single-camera files are readable (useful for tooling); the pipeline's
  // N >= 2 requirement is enforced when a dataset is opened.
  if (set.cameras.empty()) throw validation_error("calibration: cameras array is empty");
  return set;
}

void write_calibration(const std::filesystem::path& path, const CalibrationSet& calib) {
  json doc;
  doc["area"] = {calib.area.xmin, calib.area.ymin, calib.area.xmax, calib.area.ymax};
  doc["cameras"] = json::array();
  for (const auto& cam : calib.cameras) {
    json entry;
    entry["id"] = cam.view_id();
    entry["width"] = cam.width();
    entry["height"] = cam.height();
    json K = json::array(), R = json::array(), t = json::array();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        K.push_back(cam.intrinsic()(i, j));
        R.push_back(cam.rotation()(i, j));
      }
    for (int i = 0; i < 3; ++i) t.push_back(cam.translation()(i));
    entry["K"] = K;
    entry["R"] = R;
    entry["t"] = t;
    doc["cameras"].push_back(entry);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("calibration: cannot open " + path.string() + " for writing");
  out << doc.dump(2) << "\n";
}

}  // namespace mvped
