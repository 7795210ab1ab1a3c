#include "mvped/volume.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mvped {

namespace {

// Desk-scale cap; a 256x256x256 grid at 8 channels of doubles is ~1 GiB.
constexpr std::size_t kMaxVoxels = std::size_t{1} << 24;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

bool GridSpec::operator==(const GridSpec& o) const {
  return origin.x == o.origin.x && origin.y == o.origin.y && origin.z == o.origin.z &&
         voxel_size == o.voxel_size && nx == o.nx && ny == o.ny && nz == o.nz;
}

void GridSpec::validate() const {
  if (!(voxel_size > 0.0)) throw validation_error("grid: voxel_size must be > 0");
  if (nx <= 0 || ny <= 0 || nz <= 0) throw validation_error("grid: dims must be positive");
  if (size() > kMaxVoxels) throw validation_error("grid: exceeds voxel budget");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y) || !std::isfinite(origin.z))
    throw validation_error("grid: non-finite origin");
}

GridSpec grid_from_area(const AreaBounds& area, double voxel_size, double z_extent) {
  if (!(voxel_size > 0.0) || !(z_extent > 0.0))
    throw validation_error("grid: voxel_size and z_extent must be > 0");
  GridSpec g;
  g.origin = WorldPoint{area.xmin, area.ymin, 0.0};
  g.voxel_size = voxel_size;
  // The epsilon keeps exact multiples (8 m / 0.25 m) from rounding up to an
  // extra slab of voxels.
  g.nx = static_cast<int>(std::ceil(area.width() / voxel_size - 1e-9));
  g.ny = static_cast<int>(std::ceil(area.height() / voxel_size - 1e-9));
  g.nz = static_cast<int>(std::ceil(z_extent / voxel_size - 1e-9));
  g.validate();
  return g;
}

WorldPoint voxel_center(const GridSpec& grid, int ix, int iy, int iz) {
  if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny || iz < 0 || iz >= grid.nz)
    throw validation_error("voxel_center: index out of range");
  return WorldPoint{grid.origin.x + (ix + 0.5) * grid.voxel_size,
                    grid.origin.y + (iy + 0.5) * grid.voxel_size,
                    grid.origin.z + (iz + 0.5) * grid.voxel_size};
}

FeatureVolume lift_features(const CameraModel& camera, const FeatureStack& stack, int view,
                            const GridSpec& grid) {
  grid.validate();
  if (view < 0 || view >= stack.views) throw validation_error("lift: view index out of range");

  FeatureVolume out;
  out.grid = grid;
  out.channels = stack.dim;
  out.values.assign(static_cast<std::size_t>(stack.dim) * grid.size(), 0.0);
  out.visible.assign(grid.size(), 0);

  const std::size_t plane = grid.size();
  const double su = static_cast<double>(stack.width) / camera.width();
  const double sv = static_cast<double>(stack.height) / camera.height();
  const std::size_t view_base =
      static_cast<std::size_t>(view) * stack.height * stack.width * stack.dim;

  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      for (int iz = 0; iz < grid.nz; ++iz) {
        const PixelProjection pp = project(camera, voxel_center(grid, ix, iy, iz));
        if (!pp.in_frustum) continue;
        const std::size_t vox = grid.index(ix, iy, iz);
        out.visible[vox] = 1;

        // Image pixels to feature pixels; bilinear between feature-pixel
        // centers at (i + 0.5), clamped at the borders.
        const double gx = pp.u * su - 0.5;
        const double gy = pp.v * sv - 0.5;
        const double fx = gx - std::floor(gx);
        const double fy = gy - std::floor(gy);
        auto clampi = [](int v, int hi) { return std::min(hi, std::max(0, v)); };
        const int ix0 = static_cast<int>(std::floor(gx));
        const int iy0 = static_cast<int>(std::floor(gy));
        const int x0 = clampi(ix0, stack.width - 1);
        const int x1 = clampi(ix0 + 1, stack.width - 1);
        const int y0 = clampi(iy0, stack.height - 1);
        const int y1 = clampi(iy0 + 1, stack.height - 1);

        const double w00 = (1.0 - fy) * (1.0 - fx), w01 = (1.0 - fy) * fx;
        const double w10 = fy * (1.0 - fx), w11 = fy * fx;
        const double* p00 = stack.values.data() + view_base +
                            (static_cast<std::size_t>(y0) * stack.width + x0) * stack.dim;
        const double* p01 = stack.values.data() + view_base +
                            (static_cast<std::size_t>(y0) * stack.width + x1) * stack.dim;
        const double* p10 = stack.values.data() + view_base +
                            (static_cast<std::size_t>(y1) * stack.width + x0) * stack.dim;
        const double* p11 = stack.values.data() + view_base +
                            (static_cast<std::size_t>(y1) * stack.width + x1) * stack.dim;
        for (int c = 0; c < stack.dim; ++c)
          out.values[c * plane + vox] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
      }
    }
  }
  return out;
}

namespace {

void check_fusable(const std::vector<FeatureVolume>& volumes) {
  if (volumes.empty()) throw validation_error("fuse: need at least one volume");
  for (const FeatureVolume& v : volumes)
    if (!(v.grid == volumes[0].grid) || v.channels != volumes[0].channels)
      throw validation_error("fuse: mismatched grids or channel counts");
}

FusedVolume fused_like(const FeatureVolume& v) {
  FusedVolume out;
  out.grid = v.grid;
  out.channels = v.channels;
  out.values.assign(v.values.size(), 0.0);
  out.coverage.assign(v.grid.size(), 0);
  return out;
}

}  // namespace

FusedVolume fuse_softmax(const std::vector<FeatureVolume>& volumes, double temperature) {
  check_fusable(volumes);
  if (!(temperature > 0.0)) throw validation_error("fuse: temperature must be > 0");

  FusedVolume out = fused_like(volumes[0]);
  const std::size_t plane = out.grid.size();
  const int c_count = out.channels;

  std::vector<double> norms(volumes.size());
  std::vector<double> weights(volumes.size());
  for (std::size_t vox = 0; vox < plane; ++vox) {
    double max_norm = 0.0;
    int cover = 0;
    for (std::size_t n = 0; n < volumes.size(); ++n) {
      if (!volumes[n].visible[vox]) continue;
      double sq = 0.0;
      for (int c = 0; c < c_count; ++c) {
        const double x = volumes[n].values[c * plane + vox];
        sq += x * x;
      }
      norms[n] = std::sqrt(sq);
      max_norm = cover == 0 ? norms[n] : std::max(max_norm, norms[n]);
      ++cover;
    }
    out.coverage[vox] = cover;
    if (cover == 0) continue;

    double z = 0.0;
    for (std::size_t n = 0; n < volumes.size(); ++n) {
      if (!volumes[n].visible[vox]) {
        weights[n] = 0.0;
        continue;
      }
      weights[n] = std::exp((norms[n] - max_norm) / temperature);
      z += weights[n];
    }
    for (std::size_t n = 0; n < volumes.size(); ++n) {
      if (weights[n] == 0.0) continue;
      const double w = weights[n] / z;
      for (int c = 0; c < c_count; ++c)
        out.values[c * plane + vox] += w * volumes[n].values[c * plane + vox];
    }
  }
  return out;
}

FusedVolume fuse_alternative(const std::vector<FeatureVolume>& volumes, FusionMode mode,
                             std::uint64_t seed) {
  check_fusable(volumes);
  if (mode == FusionMode::softmax)
    throw validation_error("fuse_alternative: use fuse_softmax for softmax mode");

  FusedVolume out = fused_like(volumes[0]);
  const std::size_t plane = out.grid.size();
  const int c_count = out.channels;

  std::vector<Eigen::MatrixXd> blocks;
  if (mode == FusionMode::concat_project) {
    // One orthonormal C x C block per view; applying block n to view n's
    // features and summing equals projecting the zero-padded concatenation.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t n = 0; n < volumes.size(); ++n) {
      Eigen::MatrixXd a(c_count, c_count);
      for (int r = 0; r < c_count; ++r)
        for (int c = 0; c < c_count; ++c) a(r, c) = gauss(rng);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int c = 0; c < c_count; ++c)
        if (r(c, c) < 0.0) q.col(c) = -q.col(c);
      blocks.push_back(std::move(q));
    }
  }

  Eigen::VectorXd feat(c_count);
  for (std::size_t vox = 0; vox < plane; ++vox) {
    int cover = 0;
    for (const FeatureVolume& v : volumes) cover += v.visible[vox] ? 1 : 0;
    out.coverage[vox] = cover;
    if (cover == 0) continue;

    if (mode == FusionMode::add) {
      for (std::size_t n = 0; n < volumes.size(); ++n) {
        if (!volumes[n].visible[vox]) continue;
        for (int c = 0; c < c_count; ++c)
          out.values[c * plane + vox] += volumes[n].values[c * plane + vox] / cover;
      }
    } else {
      for (std::size_t n = 0; n < volumes.size(); ++n) {
        if (!volumes[n].visible[vox]) continue;
        for (int c = 0; c < c_count; ++c) feat[c] = volumes[n].values[c * plane + vox];
        const Eigen::VectorXd proj = blocks[n] * feat;
        for (int c = 0; c < c_count; ++c) out.values[c * plane + vox] += proj[c];
      }
    }
  }
  return out;
}

void SceneVolume::validate() const {
  grid.validate();
  if (density.size() != grid.size() || color.size() != 3 * grid.size())
    throw validation_error("scene: shape mismatch with grid");
  for (double d : density)
    if (!(d >= 0.0 && d <= 1.0)) throw validation_error("scene: density outside [0, 1]");
  for (double c : color)
    if (!(c >= 0.0 && c <= 1.0)) throw validation_error("scene: color outside [0, 1]");
}

DecoderParams DecoderParams::direct_init(const GridSpec& grid, double density_logit,
                                         double color_logit) {
  grid.validate();
  DecoderParams p;
  p.mode = DecoderMode::direct;
  p.density_logits.assign(grid.size(), density_logit);
  p.color_logits.assign(3 * grid.size(), color_logit);
  return p;
}

DecoderParams DecoderParams::linear_init(int channels) {
  if (channels < 1) throw validation_error("decoder: channels must be >= 1");
  DecoderParams p;
  p.mode = DecoderMode::linear;
  p.w_sigma = Eigen::VectorXd::Zero(channels);
  p.w_color = Eigen::MatrixXd::Zero(3, channels);
  return p;
}

std::size_t DecoderParams::dof() const {
  if (mode == DecoderMode::direct) return density_logits.size() + color_logits.size();
  return static_cast<std::size_t>(w_sigma.size()) + 1 + 3 * w_color.cols() + 3;
}

double* DecoderParams::flat(std::size_t i) {
  if (mode == DecoderMode::direct) {
    if (i < density_logits.size()) return &density_logits[i];
    return &color_logits[i - density_logits.size()];
  }
  const std::size_t c = static_cast<std::size_t>(w_sigma.size());
  if (i < c) return &w_sigma[static_cast<Eigen::Index>(i)];
  i -= c;
  if (i == 0) return &b_sigma;
  i -= 1;
  if (i < 3 * c) return &w_color(static_cast<Eigen::Index>(i / c), static_cast<Eigen::Index>(i % c));
  i -= 3 * c;
  return &b_color[static_cast<Eigen::Index>(i)];
}

SceneVolume decode(const FusedVolume& fused, const DecoderParams& params) {
  const std::size_t plane = fused.grid.size();
  SceneVolume scene;
  scene.grid = fused.grid;
  scene.density.resize(plane);
  scene.color.resize(3 * plane);

  if (params.mode == DecoderMode::direct) {
    if (params.density_logits.size() != plane || params.color_logits.size() != 3 * plane)
      throw validation_error("decode: direct params do not match grid");
    for (std::size_t v = 0; v < plane; ++v)
      scene.density[v] = fused.coverage[v] > 0 ? sigmoid(params.density_logits[v]) : 0.0;
    for (std::size_t i = 0; i < 3 * plane; ++i) scene.color[i] = sigmoid(params.color_logits[i]);
  } else {
    if (params.w_sigma.size() != fused.channels || params.w_color.cols() != fused.channels)
      throw validation_error("decode: linear params do not match channel count");
    Eigen::VectorXd feat(fused.channels);
    for (std::size_t v = 0; v < plane; ++v) {
      for (int c = 0; c < fused.channels; ++c) feat[c] = fused.values[c * plane + v];
      scene.density[v] =
          fused.coverage[v] > 0 ? sigmoid(params.w_sigma.dot(feat) + params.b_sigma) : 0.0;
      const Eigen::Vector3d pre = params.w_color * feat + params.b_color;
      for (int ch = 0; ch < 3; ++ch) scene.color[ch * plane + v] = sigmoid(pre[ch]);
    }
  }
  return scene;
}

DecoderParams decode_backward(const FusedVolume& fused, const DecoderParams& params,
                              const std::vector<double>& d_density,
                              const std::vector<double>& d_color) {
  const std::size_t plane = fused.grid.size();
  if (d_density.size() != plane || d_color.size() != 3 * plane)
    throw validation_error("decode_backward: gradient shape mismatch");

  DecoderParams g;
  g.mode = params.mode;
  if (params.mode == DecoderMode::direct) {
    g.density_logits.assign(plane, 0.0);
    g.color_logits.assign(3 * plane, 0.0);
    for (std::size_t v = 0; v < plane; ++v) {
      if (fused.coverage[v] == 0) continue;  // density pinned to 0
      const double s = sigmoid(params.density_logits[v]);
      g.density_logits[v] = d_density[v] * s * (1.0 - s);
    }
    for (std::size_t i = 0; i < 3 * plane; ++i) {
      const double s = sigmoid(params.color_logits[i]);
      g.color_logits[i] = d_color[i] * s * (1.0 - s);
    }
  } else {
    g.w_sigma = Eigen::VectorXd::Zero(params.w_sigma.size());
    g.w_color = Eigen::MatrixXd::Zero(3, params.w_color.cols());
    Eigen::VectorXd feat(fused.channels);
    for (std::size_t v = 0; v < plane; ++v) {
      for (int c = 0; c < fused.channels; ++c) feat[c] = fused.values[c * plane + v];
      if (fused.coverage[v] > 0) {
        const double s = sigmoid(params.w_sigma.dot(feat) + params.b_sigma);
        const double gd = d_density[v] * s * (1.0 - s);
        g.w_sigma += gd * feat;
        g.b_sigma += gd;
      }
      const Eigen::Vector3d pre = params.w_color * feat + params.b_color;
      for (int ch = 0; ch < 3; ++ch) {
        const double s = sigmoid(pre[ch]);
        const double gc = d_color[ch * plane + v] * s * (1.0 - s);
        g.w_color.row(ch) += gc * feat.transpose();
        g.b_color[ch] += gc;
      }
    }
  }
  return g;
}

}  // namespace mvped
