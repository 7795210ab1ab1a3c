#include "mvped/optimize.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

namespace mvped {

void FitConfig::validate() const {
  if (iterations < 1) throw validation_error("fit: iterations must be >= 1");
  if (!(learning_rate > 0.0)) throw validation_error("fit: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw validation_error("fit: betas must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw validation_error("fit: epsilon must be > 0");
  if (!(huber_delta > 0.0)) throw validation_error("fit: huber_delta must be > 0");
  if (lambda_vbr < 0.0) throw validation_error("fit: lambda_vbr must be >= 0");
  if (!(temperature > 0.0)) throw validation_error("fit: temperature must be > 0");
}

namespace {

/// Adds the Huber terms of one block into loss/grad with a shared 1/count.
void huber_accumulate(const double* pred, const double* target, std::size_t n, double delta,
                      double inv_count, double& loss, double* grad) {
  for (std::size_t i = 0; i < n; ++i) {
    const double e = pred[i] - target[i];
    const double a = std::abs(e);
    if (a <= delta) {
      loss += 0.5 * e * e * inv_count;
      grad[i] = e * inv_count;
    } else {
      loss += delta * (a - 0.5 * delta) * inv_count;
      grad[i] = (e > 0.0 ? delta : -delta) * inv_count;
    }
  }
}

}  // namespace

std::pair<double, std::vector<double>> huber_loss(const std::vector<double>& pred,
                                                  const std::vector<double>& target,
                                                  double delta) {
  if (pred.size() != target.size()) throw validation_error("huber: shape mismatch");
  if (pred.empty()) throw validation_error("huber: empty input");
  double loss = 0.0;
  std::vector<double> grad(pred.size());
  huber_accumulate(pred.data(), target.data(), pred.size(), delta, 1.0 / pred.size(), loss,
                   grad.data());
  return {loss, std::move(grad)};
}

std::pair<double, std::vector<double>> vbr_loss(const std::vector<double>& density,
                                                const GridSpec& grid) {
  if (density.size() != grid.size()) throw validation_error("vbr: density/grid mismatch");
  const double inv_cells = 1.0 / (static_cast<double>(grid.nx) * grid.ny);
  double loss = 0.0;
  std::vector<double> grad(density.size(), 0.0);
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      const std::size_t base = grid.index(ix, iy, 0);
      double m = density[base];
      std::size_t arg = base;
      for (int iz = 1; iz < grid.nz; ++iz) {
        const double v = density[base + iz];
        if (v < 0.0) throw validation_error("vbr: negative density");
        if (v > m) {
          m = v;
          arg = base + iz;
        }
      }
      if (density[base] < 0.0) throw validation_error("vbr: negative density");
      loss += std::abs(m) * inv_cells;
      if (m > 0.0) grad[arg] = inv_cells;  // sign(0) contributes nothing
    }
  }
  return {loss, std::move(grad)};
}

RenderTargets color_mask_targets(const MaskStack& masks, const ImageStack& images) {
  if (masks.views != images.views || masks.height != images.height ||
      masks.width != images.width)
    throw validation_error("targets: mask/image shape mismatch");

  RenderTargets t;
  t.views = masks.views;
  t.height = masks.height;
  t.width = masks.width;
  t.mask = masks.values;
  const std::size_t plane = static_cast<std::size_t>(masks.height) * masks.width;
  t.color.resize(static_cast<std::size_t>(masks.views) * 3 * plane);
  for (int n = 0; n < masks.views; ++n) {
    const double* m = masks.values.data() + static_cast<std::size_t>(n) * plane;
    const double* img = images.values.data() + static_cast<std::size_t>(n) * plane * 3;
    double* out = t.color.data() + static_cast<std::size_t>(n) * 3 * plane;
    for (std::size_t p = 0; p < plane; ++p)
      for (int ch = 0; ch < 3; ++ch) out[ch * plane + p] = img[p * 3 + ch] * m[p];
  }
  return t;
}

MaskStack downsample_masks(const MaskStack& masks, int out_height, int out_width) {
  MaskStack out;
  out.views = masks.views;
  out.height = out_height;
  out.width = out_width;
  const std::size_t in_plane = static_cast<std::size_t>(masks.height) * masks.width;
  for (int n = 0; n < masks.views; ++n) {
    std::vector<double> view(masks.values.begin() + n * in_plane,
                             masks.values.begin() + (n + 1) * in_plane);
    std::vector<double> down =
        downsample_average(view, masks.height, masks.width, out_height, out_width);
    for (double& v : down) v = v >= 0.5 ? 1.0 : 0.0;
    out.values.insert(out.values.end(), down.begin(), down.end());
  }
  return out;
}

ImageStack downsample_images(const ImageStack& images, int out_height, int out_width) {
  ImageStack out;
  out.views = images.views;
  out.height = out_height;
  out.width = out_width;
  const std::size_t in_plane = static_cast<std::size_t>(images.height) * images.width;
  const std::size_t out_plane = static_cast<std::size_t>(out_height) * out_width;
  out.values.resize(static_cast<std::size_t>(images.views) * out_plane * 3);
  std::vector<double> chan(in_plane);
  for (int n = 0; n < images.views; ++n) {
    for (int ch = 0; ch < 3; ++ch) {
      const double* src = images.values.data() + n * in_plane * 3;
      for (std::size_t p = 0; p < in_plane; ++p) chan[p] = src[p * 3 + ch];
      const std::vector<double> down =
          downsample_average(chan, images.height, images.width, out_height, out_width);
      double* dst = out.values.data() + n * out_plane * 3;
      for (std::size_t p = 0; p < out_plane; ++p) dst[p * 3 + ch] = down[p];
    }
  }
  return out;
}

TotalLossResult total_loss(const std::vector<RenderedView>& rendered,
                           const RenderTargets& targets, const std::vector<double>& density,
                           const GridSpec& grid, double huber_delta, double lambda_vbr) {
  const int views = targets.views;
  if (static_cast<int>(rendered.size()) != views)
    throw validation_error("loss: rendered view count mismatch");
  const std::size_t plane = static_cast<std::size_t>(targets.height) * targets.width;

  TotalLossResult r;
  r.d_mask.resize(views);
  r.d_color.resize(views);

  const double inv_mask = 1.0 / (static_cast<double>(views) * plane);
  const double inv_color = inv_mask / 3.0;
  for (int n = 0; n < views; ++n) {
    const RenderedView& rv = rendered[n];
    if (rv.height != targets.height || rv.width != targets.width)
      throw validation_error("loss: rendered/target resolution mismatch");
    r.d_mask[n].resize(plane);
    r.d_color[n].resize(3 * plane);
    huber_accumulate(rv.mask.data(), targets.mask.data() + n * plane, plane, huber_delta,
                     inv_mask, r.report.l_mask, r.d_mask[n].data());
    huber_accumulate(rv.color.data(), targets.color.data() + static_cast<std::size_t>(n) * 3 * plane,
                     3 * plane, huber_delta, inv_color, r.report.l_color, r.d_color[n].data());
  }

  auto [lv, gv] = vbr_loss(density, grid);
  r.report.l_vbr = lv;
  r.d_density_vbr = std::move(gv);
  for (double& g : r.d_density_vbr) g *= lambda_vbr;

  r.report.total = r.report.l_color + r.report.l_mask + lambda_vbr * r.report.l_vbr;
  return r;
}

FitResult fit(const FitInputs& inputs, const GridSpec& grid, const FitConfig& cfg,
              const RenderConfig& render_cfg) {
  cfg.validate();
  render_cfg.validate();
  if (!inputs.calibration || !inputs.masks || !inputs.images || !inputs.fused)
    throw validation_error("fit: missing inputs");
  const CalibrationSet& calib = *inputs.calibration;
  const FusedVolume& fused = *inputs.fused;
  const int views = static_cast<int>(calib.cameras.size());
  if (inputs.masks->views != views || inputs.images->views != views)
    throw validation_error("fit: view count mismatch");
  if (!(fused.grid == grid)) throw validation_error("fit: fused volume grid mismatch");

  std::vector<RayBundle> bundles;
  bundles.reserve(views);
  for (const CameraModel& cam : calib.cameras)
    bundles.push_back(build_ray_bundle(grid, cam, render_cfg));

  const MaskStack masks_rt =
      downsample_masks(*inputs.masks, render_cfg.height, render_cfg.width);
  const ImageStack images_rt =
      downsample_images(*inputs.images, render_cfg.height, render_cfg.width);
  const RenderTargets targets = color_mask_targets(masks_rt, images_rt);

  DecoderParams params = cfg.decoder == DecoderMode::direct
                             ? DecoderParams::direct_init(grid, -4.0, 0.0)
                             : DecoderParams::linear_init(fused.channels);
  const std::size_t dof = params.dof();
  std::vector<double> m(dof, 0.0), v(dof, 0.0);

  FitResult result;
  result.history.reserve(cfg.iterations);
  double best_total = std::numeric_limits<double>::infinity();

  const std::size_t plane = grid.size();
  for (int it = 0; it < cfg.iterations; ++it) {
    const SceneVolume scene = decode(fused, params);

    std::vector<RenderedView> rendered;
    rendered.reserve(views);
    for (int n = 0; n < views; ++n) rendered.push_back(render_bundle(scene, bundles[n]));

    TotalLossResult tl =
        total_loss(rendered, targets, scene.density, grid, cfg.huber_delta, cfg.lambda_vbr);
    tl.report.iteration = it;
    if (!std::isfinite(tl.report.total))
      throw divergence_error("fit: non-finite loss at iteration " + std::to_string(it));
    result.history.push_back(tl.report);
    if (tl.report.total < best_total) {
      best_total = tl.report.total;
      result.params = params;
    }

    std::vector<double> d_density = std::move(tl.d_density_vbr);
    std::vector<double> d_color(3 * plane, 0.0);
    for (int n = 0; n < views; ++n) {
      auto [gd, gc] = render_backward(scene, bundles[n], tl.d_mask[n], tl.d_color[n]);
      for (std::size_t i = 0; i < plane; ++i) d_density[i] += gd[i];
      for (std::size_t i = 0; i < 3 * plane; ++i) d_color[i] += gc[i];
    }

    DecoderParams grads = decode_backward(fused, params, d_density, d_color);

    const double bc1 = 1.0 - std::pow(cfg.beta1, it + 1);
    const double bc2 = 1.0 - std::pow(cfg.beta2, it + 1);
    for (std::size_t i = 0; i < dof; ++i) {
      const double g = *grads.flat(i);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      *params.flat(i) -= cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.epsilon);
    }
  }

  result.scene = decode(fused, result.params);
  result.scene.validate();
  return result;
}

void write_loss_history(const std::filesystem::path& path,
                        const std::vector<LossReport>& history) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("loss history: cannot open " + path.string());
  out << "iteration,l_color,l_mask,l_vbr,total\n";
  out << std::setprecision(17);
  for (const LossReport& r : history)
    out << r.iteration << ',' << r.l_color << ',' << r.l_mask << ',' << r.l_vbr << ',' << r.total
        << '\n';
  if (!out) throw io_error("loss history: failed writing " + path.string());
}

}  // namespace mvped
