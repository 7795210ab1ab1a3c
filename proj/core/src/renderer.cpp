#include "mvped/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvped {

// Below this transmittance-factor floor the division form of the weight
// gradient is replaced by an explicit skipped-factor product.
constexpr double kOpaqueEps = 1e-6;

void RenderConfig::validate() const {
  if (samples_per_ray < 2) throw validation_error("render: samples_per_ray must be >= 2");
  if (width <= 0 || height <= 0) throw validation_error("render: resolution must be positive");
  if (chunk_size <= 0) throw validation_error("render: chunk_size must be positive");
}

std::optional<std::pair<double, double>> ray_box_intersect(const Ray& ray, const GridSpec& grid) {
  const double lo[3] = {grid.origin.x, grid.origin.y, grid.origin.z};
  const double hi[3] = {grid.origin.x + grid.nx * grid.voxel_size,
                        grid.origin.y + grid.ny * grid.voxel_size,
                        grid.origin.z + grid.nz * grid.voxel_size};
  const double o[3] = {ray.origin.x(), ray.origin.y(), ray.origin.z()};
  const double d[3] = {ray.direction.x(), ray.direction.y(), ray.direction.z()};

  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

namespace {

/// Trilinear anchor of p in center-lattice coordinates. base = -1 when p is
/// outside the hull spanned by the voxel centers.
RaySample anchor_point(const GridSpec& grid, double px, double py, double pz) {
  RaySample s;
  // A single-layer axis leaves no interior between voxel centers.
  if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2) return s;
  const double gx = (px - grid.origin.x) / grid.voxel_size - 0.5;
  const double gy = (py - grid.origin.y) / grid.voxel_size - 0.5;
  const double gz = (pz - grid.origin.z) / grid.voxel_size - 0.5;
  if (gx < 0.0 || gy < 0.0 || gz < 0.0 || gx > grid.nx - 1 || gy > grid.ny - 1 ||
      gz > grid.nz - 1)
    return s;
  int ix = static_cast<int>(gx);
  int iy = static_cast<int>(gy);
  int iz = static_cast<int>(gz);
  // Points exactly on the far face anchor to the last full cell.
  ix = std::min(ix, grid.nx - 2);
  iy = std::min(iy, grid.ny - 2);
  iz = std::min(iz, grid.nz - 2);
  s.fx = gx - ix;
  s.fy = gy - iy;
  s.fz = gz - iz;
  s.base = static_cast<int>(grid.index(ix, iy, iz));
  return s;
}

struct CornerWeights {
  std::size_t idx[8];
  double w[8];
};

CornerWeights corners_of(const RaySample& s, const GridSpec& grid) {
  CornerWeights cw;
  const std::size_t sx = static_cast<std::size_t>(grid.ny) * grid.nz;
  const std::size_t sy = static_cast<std::size_t>(grid.nz);
  const std::size_t b = static_cast<std::size_t>(s.base);
  const double fx = s.fx, fy = s.fy, fz = s.fz;
  cw.idx[0] = b;
  cw.idx[1] = b + 1;
  cw.idx[2] = b + sy;
  cw.idx[3] = b + sy + 1;
  cw.idx[4] = b + sx;
  cw.idx[5] = b + sx + 1;
  cw.idx[6] = b + sx + sy;
  cw.idx[7] = b + sx + sy + 1;
  cw.w[0] = (1 - fx) * (1 - fy) * (1 - fz);
  cw.w[1] = (1 - fx) * (1 - fy) * fz;
  cw.w[2] = (1 - fx) * fy * (1 - fz);
  cw.w[3] = (1 - fx) * fy * fz;
  cw.w[4] = fx * (1 - fy) * (1 - fz);
  cw.w[5] = fx * (1 - fy) * fz;
  cw.w[6] = fx * fy * (1 - fz);
  cw.w[7] = fx * fy * fz;
  return cw;
}

}  // namespace

double trilinear_sample(const std::vector<double>& field, const GridSpec& grid,
                        const WorldPoint& p) {
  if (field.size() != grid.size()) throw validation_error("trilinear: field/grid mismatch");
  const RaySample s = anchor_point(grid, p.x, p.y, p.z);
  if (s.base < 0) return 0.0;
  const CornerWeights cw = corners_of(s, grid);
  double v = 0.0;
  for (int k = 0; k < 8; ++k) v += cw.w[k] * field[cw.idx[k]];
  return v;
}

CompositeResult composite_ea(const std::vector<double>& sigma, const std::vector<double>& colors) {
  if (colors.size() != sigma.size() * 3) throw validation_error("composite: S x 3 colors expected");
  CompositeResult r;
  r.weights.resize(sigma.size());
  double transmittance = 1.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    if (!(s >= 0.0 && s <= 1.0)) throw validation_error("composite: sigma outside [0, 1]");
    const double w = s * transmittance;
    r.weights[i] = w;
    r.alpha += w;
    for (int ch = 0; ch < 3; ++ch) r.color[ch] += w * colors[i * 3 + ch];
    transmittance *= 1.0 - s;
  }
  return r;
}

RayBundle build_ray_bundle(const GridSpec& grid, const CameraModel& camera,
                           const RenderConfig& cfg) {
  cfg.validate();
  grid.validate();

  RayBundle bundle;
  bundle.grid = grid;
  bundle.height = cfg.height;
  bundle.width = cfg.width;
  bundle.samples_per_ray = cfg.samples_per_ray;
  bundle.samples.resize(static_cast<std::size_t>(cfg.height) * cfg.width * cfg.samples_per_ray);

  const double su = static_cast<double>(camera.width()) / cfg.width;
  const double sv = static_cast<double>(camera.height()) / cfg.height;
  const int S = cfg.samples_per_ray;

  std::size_t cursor = 0;
  for (int py = 0; py < cfg.height; ++py) {
    for (int px = 0; px < cfg.width; ++px, cursor += S) {
      const double u = (px + 0.5) * su;
      const double v = (py + 0.5) * sv;
      const Ray ray = ray_through_pixel(camera, u, v);
      const auto hit = ray_box_intersect(ray, grid);
      if (!hit) continue;  // samples stay at base -1, the ray renders empty
      const double t0 = hit->first;
      const double dt = (hit->second - t0) / S;
      for (int i = 0; i < S; ++i) {
        const double t = t0 + (i + 0.5) * dt;
        bundle.samples[cursor + i] =
            anchor_point(grid, ray.origin.x() + t * ray.direction.x(),
                         ray.origin.y() + t * ray.direction.y(),
                         ray.origin.z() + t * ray.direction.z());
      }
    }
  }
  return bundle;
}

RenderedView render_bundle(const SceneVolume& scene, const RayBundle& bundle) {
  if (!(scene.grid == bundle.grid)) throw validation_error("render: bundle built on another grid");
  const std::size_t plane = scene.grid.size();
  const std::size_t rays = static_cast<std::size_t>(bundle.height) * bundle.width;
  const int S = bundle.samples_per_ray;

  RenderedView out;
  out.height = bundle.height;
  out.width = bundle.width;
  out.mask.assign(rays, 0.0);
  out.color.assign(3 * rays, 0.0);

  for (std::size_t r = 0; r < rays; ++r) {
    double transmittance = 1.0;
    double alpha = 0.0;
    double rgb[3] = {0.0, 0.0, 0.0};
    const RaySample* samples = bundle.samples.data() + r * S;
    for (int i = 0; i < S; ++i) {
      if (samples[i].base < 0) continue;
      const CornerWeights cw = corners_of(samples[i], bundle.grid);
      double sigma = 0.0;
      for (int k = 0; k < 8; ++k) sigma += cw.w[k] * scene.density[cw.idx[k]];
      if (sigma == 0.0) continue;
      const double w = sigma * transmittance;
      alpha += w;
      for (int ch = 0; ch < 3; ++ch) {
        double c = 0.0;
        const double* chan = scene.color.data() + ch * plane;
        for (int k = 0; k < 8; ++k) c += cw.w[k] * chan[cw.idx[k]];
        rgb[ch] += w * c;
      }
      transmittance *= 1.0 - sigma;
    }
    out.mask[r] = alpha;
    for (int ch = 0; ch < 3; ++ch) out.color[ch * rays + r] = rgb[ch];
  }
  return out;
}

RenderedView render_view(const SceneVolume& scene, const CameraModel& camera,
                         const RenderConfig& cfg) {
  return render_bundle(scene, build_ray_bundle(scene.grid, camera, cfg));
}

std::pair<std::vector<double>, std::vector<double>> render_backward(
    const SceneVolume& scene, const RayBundle& bundle, const std::vector<double>& d_mask,
    const std::vector<double>& d_color) {
  if (!(scene.grid == bundle.grid)) throw validation_error("render: bundle built on another grid");
  const std::size_t plane = scene.grid.size();
  const std::size_t rays = static_cast<std::size_t>(bundle.height) * bundle.width;
  const int S = bundle.samples_per_ray;
  if (d_mask.size() != rays || d_color.size() != 3 * rays)
    throw validation_error("render_backward: upstream gradient shape mismatch");

  std::vector<double> g_density(plane, 0.0);
  std::vector<double> g_color(3 * plane, 0.0);

  // Per-sample scratch, reused across rays.
  std::vector<double> sigma(S), trans(S), weight(S), gw(S);
  std::vector<double> col(3 * S);
  std::vector<CornerWeights> cw(S);
  std::vector<int> live(S);

  for (std::size_t r = 0; r < rays; ++r) {
    const double ga = d_mask[r];
    const double gc[3] = {d_color[r], d_color[rays + r], d_color[2 * rays + r]};
    if (ga == 0.0 && gc[0] == 0.0 && gc[1] == 0.0 && gc[2] == 0.0) continue;

    const RaySample* samples = bundle.samples.data() + r * S;
    int n = 0;  // live samples: inside the hull, in ray order
    double transmittance = 1.0;
    for (int i = 0; i < S; ++i) {
      if (samples[i].base < 0) continue;
      cw[n] = corners_of(samples[i], bundle.grid);
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += cw[n].w[k] * scene.density[cw[n].idx[k]];
      sigma[n] = s;
      trans[n] = transmittance;
      weight[n] = s * transmittance;
      for (int ch = 0; ch < 3; ++ch) {
        double c = 0.0;
        const double* chan = scene.color.data() + ch * plane;
        for (int k = 0; k < 8; ++k) c += cw[n].w[k] * chan[cw[n].idx[k]];
        col[n * 3 + ch] = c;
      }
      live[n] = i;
      transmittance *= 1.0 - s;
      ++n;
    }
    if (n == 0) continue;

    // gw[i] = dL/dw_i: the alpha term plus the color channels through c_i.
    for (int i = 0; i < n; ++i)
      gw[i] = ga + gc[0] * col[i * 3] + gc[1] * col[i * 3 + 1] + gc[2] * col[i * 3 + 2];

    // dL/dsigma_k = gw_k * T_k - (sum_{i>k} gw_i w_i) / (1 - sigma_k), with
    // the division replaced by a skipped-factor product when sigma_k ~ 1.
    double suffix = 0.0;
    for (int k = n - 1; k >= 0; --k) {
      double d_sigma;
      if (1.0 - sigma[k] < kOpaqueEps) {
        double acc = 0.0;
        double t = trans[k];
        for (int i = k + 1; i < n; ++i) {
          acc += gw[i] * sigma[i] * t;
          t *= 1.0 - sigma[i];
        }
        d_sigma = gw[k] * trans[k] - acc;
      } else {
        d_sigma = gw[k] * trans[k] - suffix / (1.0 - sigma[k]);
      }
      suffix += gw[k] * weight[k];

      for (int k8 = 0; k8 < 8; ++k8) g_density[cw[k].idx[k8]] += d_sigma * cw[k].w[k8];
      for (int ch = 0; ch < 3; ++ch) {
        const double d_c = gc[ch] * weight[k];
        if (d_c == 0.0) continue;
        double* chan = g_color.data() + ch * plane;
        for (int k8 = 0; k8 < 8; ++k8) chan[cw[k].idx[k8]] += d_c * cw[k].w[k8];
      }
    }
  }
  return {std::move(g_density), std::move(g_color)};
}

std::vector<double> downsample_average(const std::vector<double>& values, int height, int width,
                                       int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0 || height % out_height != 0 || width % out_width != 0)
    throw validation_error("downsample: output resolution must divide input");
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw validation_error("downsample: shape mismatch");
  const int by = height / out_height;
  const int bx = width / out_width;
  std::vector<double> out(static_cast<std::size_t>(out_height) * out_width, 0.0);
  for (int oy = 0; oy < out_height; ++oy) {
    for (int ox = 0; ox < out_width; ++ox) {
      double sum = 0.0;
      for (int dy = 0; dy < by; ++dy)
        for (int dx = 0; dx < bx; ++dx)
          sum += values[static_cast<std::size_t>(oy * by + dy) * width + ox * bx + dx];
      out[static_cast<std::size_t>(oy) * out_width + ox] = sum / (by * bx);
    }
  }
  return out;
}

}  // namespace mvped
