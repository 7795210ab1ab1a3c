#include "mvped/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvped/calibration.hpp"
#include "mvped/dataset.hpp"
#include "mvped/geometry.hpp"
#include "mvped/tensor.hpp"

namespace mvped {

void SynthConfig::validate() const {
  if (num_cameras < 2) throw validation_error("synth: need at least 2 cameras");
  if (num_pedestrians < 0) throw validation_error("synth: negative pedestrian count");
  if (!(area_width > 2.0) || !(area_height > 2.0))
    throw validation_error("synth: area must exceed 2 x 2 m");
  if (!(pedestrian_radius > 0.0) || !(pedestrian_height > 0.0))
    throw validation_error("synth: pedestrian size must be positive");
  if (image_size < 16) throw validation_error("synth: image size must be >= 16");
  if (feature_dim < 5)
    throw validation_error("synth: feature dim must fit color plus two embedding dims");
  if (noise_sigma < 0.0) throw validation_error("synth: negative noise sigma");
}

namespace {

constexpr double kEyeHeight = 2.5;
constexpr double kLookAtHeight = 0.8;
constexpr double kRingScale = 0.60;  ///< ring radius = scale * max(area dims)
constexpr double kFocalScale = 0.75;
constexpr int kPlacementAttempts = 1000;
constexpr double kEmbedScale = 2.0;  ///< class separation vs unit-range colors

struct Pedestrian {
  double x, y;
  double rgb[3];
};

struct SceneLayout {
  std::vector<CameraModel> cameras;
  std::vector<Pedestrian> pedestrians;
  double box_x, box_y;                     ///< distractor center
  double box_half[3] = {0.4, 0.4, 0.25};  ///< half extents; sits on the ground
  double box_rgb[3] = {0.55, 0.27, 0.07};
  Eigen::VectorXd embed_ground, embed_ped, embed_box;  ///< feature_dim - 3 each
};

void hsv_to_rgb(double h, double s, double v, double* rgb) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1)      { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else             { r = c; b = x; }
  const double m = v - c;
  rgb[0] = r + m;
  rgb[1] = g + m;
  rgb[2] = b + m;
}

CameraModel make_ring_camera(int id, double angle, const SynthConfig& cfg) {
  const double cx = cfg.area_width / 2.0;
  const double cy = cfg.area_height / 2.0;
  const double ring = kRingScale * std::max(cfg.area_width, cfg.area_height);
  const Eigen::Vector3d eye(cx + ring * std::cos(angle), cy + ring * std::sin(angle), kEyeHeight);
  const Eigen::Vector3d target(cx, cy, kLookAtHeight);

  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ()).normalized();
  const Eigen::Vector3d down = forward.cross(right);

  Eigen::Matrix3d r;
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = forward;

  const double f = kFocalScale * cfg.image_size;
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = f;
  k(1, 1) = f;
  k(0, 2) = cfg.image_size / 2.0;
  k(1, 2) = cfg.image_size / 2.0;

  return CameraModel(id, cfg.image_size, cfg.image_size, k, r, -r * eye);
}

/// Nearest positive hit against the upright ellipsoid (r, r, h/2) centered
/// at (x, y, h/2). Returns infinity on a miss.
double hit_pedestrian(const Ray& ray, const Pedestrian& ped, const SynthConfig& cfg) {
  const double ax = cfg.pedestrian_radius;
  const double az = cfg.pedestrian_height / 2.0;
  const double ox = (ray.origin.x() - ped.x) / ax;
  const double oy = (ray.origin.y() - ped.y) / ax;
  const double oz = (ray.origin.z() - az) / az;
  const double dx = ray.direction.x() / ax;
  const double dy = ray.direction.y() / ax;
  const double dz = ray.direction.z() / az;
  const double a = dx * dx + dy * dy + dz * dz;
  const double b = 2.0 * (ox * dx + oy * dy + oz * dz);
  const double c = ox * ox + oy * oy + oz * oz - 1.0;
  const double disc = b * b - 4.0 * a * c;
  const double inf = std::numeric_limits<double>::infinity();
  if (disc < 0.0) return inf;
  const double s = std::sqrt(disc);
  const double t0 = (-b - s) / (2.0 * a);
  if (t0 > 0.0) return t0;
  const double t1 = (-b + s) / (2.0 * a);
  return t1 > 0.0 ? t1 : inf;
}

double hit_box(const Ray& ray, const SceneLayout& layout) {
  const double lo[3] = {layout.box_x - layout.box_half[0], layout.box_y - layout.box_half[1],
                        0.0};
  const double hi[3] = {layout.box_x + layout.box_half[0], layout.box_y + layout.box_half[1],
                        2.0 * layout.box_half[2]};
  const double o[3] = {ray.origin.x(), ray.origin.y(), ray.origin.z()};
  const double d[3] = {ray.direction.x(), ray.direction.y(), ray.direction.z()};
  const double inf = std::numeric_limits<double>::infinity();
  double t0 = 0.0, t1 = inf;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (o[axis] < lo[axis] || o[axis] > hi[axis]) return inf;
      continue;
    }
    double ta = (lo[axis] - o[axis]) / d[axis];
    double tb = (hi[axis] - o[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return inf;
  }
  return t0 > 0.0 ? t0 : inf;
}

enum class HitClass { sky, ground, pedestrian, box };

struct Hit {
  HitClass cls = HitClass::sky;
  double rgb[3] = {0.7, 0.7, 0.7};
};

Hit trace(const Ray& ray, const SceneLayout& layout, const SynthConfig& cfg) {
  const double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  Hit hit;

  if (ray.direction.z() < 0.0) {
    const double t = -ray.origin.z() / ray.direction.z();
    if (t > 0.0) {
      best = t;
      hit.cls = HitClass::ground;
      const double gx = ray.origin.x() + t * ray.direction.x();
      const double gy = ray.origin.y() + t * ray.direction.y();
      const bool dark =
          (static_cast<long long>(std::floor(gx)) + static_cast<long long>(std::floor(gy))) % 2 ==
          0;
      const double g = dark ? 0.45 : 0.55;
      hit.rgb[0] = hit.rgb[1] = hit.rgb[2] = g;
    }
  }

  const double tb = hit_box(ray, layout);
  if (tb < best) {
    best = tb;
    hit.cls = HitClass::box;
    std::copy(layout.box_rgb, layout.box_rgb + 3, hit.rgb);
  }

  for (const Pedestrian& ped : layout.pedestrians) {
    const double t = hit_pedestrian(ray, ped, cfg);
    if (t < best) {
      best = t;
      hit.cls = HitClass::pedestrian;
      std::copy(ped.rgb, ped.rgb + 3, hit.rgb);
    }
  }
  return hit;
}

SceneLayout build_layout(const SynthConfig& cfg) {
  SceneLayout layout;
  for (int i = 0; i < cfg.num_cameras; ++i) {
    // The half-step offset keeps cameras off the axes, avoiding degenerate
    // straight-on views of the checker pattern.
    const double angle = 2.0 * std::numbers::pi * (i + 0.5) / cfg.num_cameras;
    layout.cameras.push_back(make_ring_camera(i, angle, cfg));
  }

  std::mt19937_64 rng(cfg.seed);
  // Keep placements inside the well-covered interior of the camera ring;
  // the outermost meter is seen by too few views to triangulate reliably.
  const double margin = cfg.pedestrian_radius + 1.0;
  std::uniform_real_distribution<double> ux(margin, cfg.area_width - margin);
  std::uniform_real_distribution<double> uy(margin, cfg.area_height - margin);
  if (margin >= cfg.area_width - margin || margin >= cfg.area_height - margin)
    throw validation_error("synth: area too small for the placement margin");

  const double min_gap = 2.0 * cfg.pedestrian_radius + 0.4;
  auto far_from_all = [&](double x, double y, double gap) {
    for (const Pedestrian& p : layout.pedestrians) {
      const double dx = x - p.x, dy = y - p.y;
      if (dx * dx + dy * dy < gap * gap) return false;
    }
    return true;
  };
  auto visible_views = [&](double x, double y) {
    int count = 0;
    const WorldPoint center{x, y, cfg.pedestrian_height / 2.0};
    for (const CameraModel& cam : layout.cameras)
      if (project(cam, center).in_frustum) ++count;
    return count;
  };

  int attempts = 0;
  while (static_cast<int>(layout.pedestrians.size()) < cfg.num_pedestrians) {
    if (++attempts > kPlacementAttempts)
      throw validation_error("synth: placement failed after " +
                             std::to_string(kPlacementAttempts) + " attempts");
    const double x = ux(rng);
    const double y = uy(rng);
    if (!far_from_all(x, y, min_gap)) continue;
    if (visible_views(x, y) < 2) continue;
    Pedestrian ped;
    ped.x = x;
    ped.y = y;
    hsv_to_rgb(static_cast<double>(layout.pedestrians.size()) / cfg.num_pedestrians, 0.75, 0.9,
               ped.rgb);
    layout.pedestrians.push_back(ped);
  }

  for (;;) {
    if (++attempts > kPlacementAttempts)
      throw validation_error("synth: placement failed after " +
                             std::to_string(kPlacementAttempts) + " attempts");
    const double x = ux(rng);
    const double y = uy(rng);
    if (!far_from_all(x, y, min_gap + 0.4)) continue;
    layout.box_x = x;
    layout.box_y = y;
    break;
  }

  // Orthonormal class embeddings. The distractor's embedding leans on the
  // ground class so the first PCA split groups it with the ground rather
  // than with the pedestrians; only semantic selection then separates
  // pedestrians from the sky side.
  const int ed = cfg.feature_dim - 3;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd g(ed), p(ed);
  for (int i = 0; i < ed; ++i) g[i] = gauss(rng);
  for (int i = 0; i < ed; ++i) p[i] = gauss(rng);
  g.normalize();
  p -= g * g.dot(p);
  if (p.norm() < 1e-9) throw validation_error("synth: degenerate embedding draw");
  p.normalize();
  layout.embed_ground = g;
  layout.embed_ped = p;
  layout.embed_box = 0.8 * g - 0.6 * p;
  return layout;
}

}  // namespace

void generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const SceneLayout layout = build_layout(cfg);

  CalibrationSet calib;
  calib.area = AreaBounds{0.0, 0.0, cfg.area_width, cfg.area_height};
  calib.cameras = layout.cameras;
  write_calibration(calibration_path(out_dir), calib);

  const int hw = cfg.image_size;
  const std::size_t plane = static_cast<std::size_t>(hw) * hw;
  const int ed = cfg.feature_dim - 3;

  // One noise stream, drawn in a fixed order (view, pixel, channel) after
  // layout sampling, keeps the dataset byte-stable for a given seed.
  std::mt19937_64 noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (const CameraModel& cam : layout.cameras) {
    std::vector<double> image(plane * 3);
    std::vector<double> mask(plane);
    std::vector<double> features(plane * cfg.feature_dim);
    std::vector<double> semantic(plane);

    for (int py = 0; py < hw; ++py) {
      for (int px = 0; px < hw; ++px) {
        const std::size_t pix = static_cast<std::size_t>(py) * hw + px;
        const Ray ray = ray_through_pixel(cam, px + 0.5, py + 0.5);
        const Hit hit = trace(ray, layout, cfg);

        for (int ch = 0; ch < 3; ++ch) image[pix * 3 + ch] = hit.rgb[ch];
        mask[pix] = hit.cls == HitClass::pedestrian ? 1.0 : 0.0;

        double* feat = features.data() + pix * cfg.feature_dim;
        for (int ch = 0; ch < 3; ++ch) feat[ch] = hit.rgb[ch];
        const Eigen::VectorXd* embed = nullptr;
        if (hit.cls == HitClass::ground) embed = &layout.embed_ground;
        if (hit.cls == HitClass::pedestrian) embed = &layout.embed_ped;
        if (hit.cls == HitClass::box) embed = &layout.embed_box;
        for (int i = 0; i < ed; ++i) feat[3 + i] = embed ? kEmbedScale * (*embed)[i] : 0.0;
        for (int i = 0; i < cfg.feature_dim; ++i) feat[i] += cfg.noise_sigma * gauss(noise_rng);

        const double s =
            (hit.cls == HitClass::pedestrian ? 0.9 : 0.1) + cfg.noise_sigma * gauss(noise_rng);
        semantic[pix] = std::clamp(s, -1.0, 1.0);
      }
    }

    const auto n = static_cast<std::size_t>(hw);
    const auto d = static_cast<std::size_t>(cfg.feature_dim);
    write_tensor(view_path(out_dir, "images", cam.view_id()),
                 Tensor::from_doubles({n, n, 3}, image));
    write_tensor(view_path(out_dir, "gt_masks", cam.view_id()),
                 Tensor::from_doubles({n, n}, mask));
    write_tensor(view_path(out_dir, "features", cam.view_id()),
                 Tensor::from_doubles({n, n, d}, features));
    write_tensor(view_path(out_dir, "semantic", cam.view_id()),
                 Tensor::from_doubles({n, n}, semantic));
  }

  std::vector<double> positions;
  for (const Pedestrian& p : layout.pedestrians) {
    positions.push_back(p.x);
    positions.push_back(p.y);
  }
  // The tensor container has no empty shape; a zero-pedestrian scene simply
  // omits the ground-truth file.
  if (!layout.pedestrians.empty())
    write_tensor(gt_positions_path(out_dir),
                 Tensor::from_doubles({layout.pedestrians.size(), 2}, positions));
}

MaskStack ideal_masks(const SynthConfig& cfg) {
  cfg.validate();
  const SceneLayout layout = build_layout(cfg);
  const int hw = cfg.image_size;
  const std::size_t plane = static_cast<std::size_t>(hw) * hw;

  MaskStack masks;
  masks.views = cfg.num_cameras;
  masks.height = hw;
  masks.width = hw;
  masks.values.resize(plane * cfg.num_cameras);
  for (int n = 0; n < cfg.num_cameras; ++n) {
    const CameraModel& cam = layout.cameras[n];
    for (int py = 0; py < hw; ++py) {
      for (int px = 0; px < hw; ++px) {
        const Hit hit = trace(ray_through_pixel(cam, px + 0.5, py + 0.5), layout, cfg);
        masks.values[n * plane + py * static_cast<std::size_t>(hw) + px] =
            hit.cls == HitClass::pedestrian ? 1.0 : 0.0;
      }
    }
  }
  return masks;
}

}  // namespace mvped
