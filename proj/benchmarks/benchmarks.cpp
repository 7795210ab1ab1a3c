// Microbenchmarks for the hot paths: rendering, PCA, fusion, assignment.
// Sizes mirror the default pipeline (32x32x8 grid, 64x64 render).

#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <Eigen/Dense>

#include "mvped/detect.hpp"
#include "mvped/geometry.hpp"
#include "mvped/renderer.hpp"
#include "mvped/sis.hpp"
#include "mvped/volume.hpp"

using namespace mvped;

namespace {

CameraModel ring_camera(double cx, double cy, double height, int size, double focal) {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = focal;
  k(1, 1) = focal;
  k(0, 2) = size / 2.0;
  k(1, 2) = size / 2.0;
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  const Eigen::Vector3d c(cx, cy, height);
  return CameraModel(0, size, size, k, r, -r * c);
}

GridSpec default_grid() {
  return grid_from_area({0.0, 0.0, 8.0, 8.0}, 0.25, 2.0);
}

SceneVolume random_scene(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  SceneVolume scene;
  scene.grid = grid;
  scene.density.resize(grid.size());
  scene.color.resize(3 * grid.size());
  for (double& v : scene.density) v = 0.8 * u01(rng);
  for (double& v : scene.color) v = u01(rng);
  return scene;
}

void bm_render_forward(benchmark::State& state) {
  const GridSpec grid = default_grid();
  const SceneVolume scene = random_scene(grid, 1);
  RenderConfig rc;
  rc.width = rc.height = 64;
  rc.samples_per_ray = 64;
  const RayBundle bundle = build_ray_bundle(grid, ring_camera(4.0, 1.6, 2.5, 64, 48.0), rc);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_bundle(scene, bundle));
  }
}
BENCHMARK(bm_render_forward)->Unit(benchmark::kMillisecond);

void bm_render_backward(benchmark::State& state) {
  const GridSpec grid = default_grid();
  const SceneVolume scene = random_scene(grid, 2);
  RenderConfig rc;
  rc.width = rc.height = 64;
  rc.samples_per_ray = 64;
  const RayBundle bundle = build_ray_bundle(grid, ring_camera(4.0, 1.6, 2.5, 64, 48.0), rc);
  const std::vector<double> d_mask(64 * 64, 1.0);
  const std::vector<double> d_color(3 * 64 * 64, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_backward(scene, bundle, d_mask, d_color));
  }
}
BENCHMARK(bm_render_backward)->Unit(benchmark::kMillisecond);

void bm_pca(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FeatureStack stack;
  stack.views = 4;
  stack.height = 64;
  stack.width = 64;
  stack.dim = 16;
  stack.values.resize(stack.pixel_count() * stack.dim);
  for (double& v : stack.values) v = gauss(rng) * 0.5;
  const FeatureStack centered = center_features(stack);
  for (auto _ : state) {
    benchmark::DoNotOptimize(first_principal_component(centered, 200, 1e-7, 1));
  }
}
BENCHMARK(bm_pca)->Unit(benchmark::kMillisecond);

void bm_fuse_softmax(benchmark::State& state) {
  const GridSpec grid = default_grid();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<FeatureVolume> views(4);
  for (FeatureVolume& fv : views) {
    fv.grid = grid;
    fv.channels = 16;
    fv.values.resize(16 * grid.size());
    fv.visible.resize(grid.size());
    for (double& v : fv.values) v = u01(rng);
    for (auto& vis : fv.visible) vis = u01(rng) < 0.8 ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fuse_softmax(views, 1.0));
  }
}
BENCHMARK(bm_fuse_softmax)->Unit(benchmark::kMillisecond);

void bm_hungarian(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (double& c : cost) c = u01(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hungarian(cost, n));
  }
}
BENCHMARK(bm_hungarian)->Arg(16)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
