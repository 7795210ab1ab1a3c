#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvped/detect.hpp"

#include "helpers.hpp"

using namespace mvped;

namespace {

GridSpec flat_grid(int nx, int ny, double voxel, int nz = 1) {
  GridSpec g;
  g.origin = {0.0, 0.0, 0.0};
  g.voxel_size = voxel;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  return g;
}

BevMap blob_map(const GridSpec& g, const std::vector<std::array<double, 3>>& blobs,
                double sigma) {
  BevMap bev;
  bev.grid = g;
  bev.values.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  for (int ix = 0; ix < g.nx; ++ix) {
    for (int iy = 0; iy < g.ny; ++iy) {
      double v = 0.0;
      for (const auto& b : blobs) {
        const double dx = bev.cell_x(ix) - b[0];
        const double dy = bev.cell_y(iy) - b[1];
        v = std::max(v, b[2] * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
      }
      bev.values[static_cast<std::size_t>(ix) * g.ny + iy] = v;
    }
  }
  return bev;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Best assignment by brute force: maximize matched pairs, then minimize the
/// total matched distance. Recurses over detections.
struct MatchOracle {
  const std::vector<Detection>* dets;
  const std::vector<std::array<double, 2>>* gt;
  double radius;
  int best_tp = 0;
  double best_dist = 0.0;

  void run(std::size_t i, std::vector<bool>& used, int tp, double dist) {
    if (i == dets->size()) {
      if (tp > best_tp || (tp == best_tp && dist < best_dist)) {
        best_tp = tp;
        best_dist = dist;
      }
      return;
    }
    run(i + 1, used, tp, dist);  // leave detection i unmatched
    for (std::size_t j = 0; j < gt->size(); ++j) {
      if (used[j]) continue;
      const double dx = (*dets)[i].x - (*gt)[j][0];
      const double dy = (*dets)[i].y - (*gt)[j][1];
      const double d = std::hypot(dx, dy);
      if (d > radius) continue;
      used[j] = true;
      run(i + 1, used, tp + 1, dist + d);
      used[j] = false;
    }
  }
};

}  // namespace

TEST_CASE("bev_project: zeros, single voxel, brute-force oracle") {
  GridSpec g = flat_grid(4, 5, 0.5, 6);

  SUBCASE("all zeros") {
    const BevMap bev = bev_project(std::vector<double>(g.size(), 0.0), g);
    for (double v : bev.values) CHECK(v == 0.0);
  }
  SUBCASE("single voxel") {
    std::vector<double> density(g.size(), 0.0);
    density[g.index(2, 3, 5)] = 0.9;
    const BevMap bev = bev_project(density, g);
    for (int ix = 0; ix < g.nx; ++ix)
      for (int iy = 0; iy < g.ny; ++iy)
        CHECK(bev.values[ix * g.ny + iy] == (ix == 2 && iy == 3 ? 0.9 : 0.0));
  }
  SUBCASE("random tensor equals the column-loop oracle exactly") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> density(g.size());
    for (double& v : density) v = u(rng);
    const BevMap bev = bev_project(density, g);
    for (int ix = 0; ix < g.nx; ++ix) {
      for (int iy = 0; iy < g.ny; ++iy) {
        double m = 0.0;
        for (int iz = 0; iz < g.nz; ++iz) m = std::max(m, density[g.index(ix, iy, iz)]);
        CHECK(bev.values[ix * g.ny + iy] == m);
      }
    }
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(bev_project(std::vector<double>(3, 0.0), g), Error);
  }
}

TEST_CASE("extract_peaks: one blob, one detection at its peak cell") {
  const GridSpec g = flat_grid(16, 16, 0.25);
  const double cx = g.origin.x + 8.5 * g.voxel_size;  // center of cell (8,8)
  const double cy = g.origin.y + 8.5 * g.voxel_size;
  const BevMap bev = blob_map(g, {{cx, cy, 0.9}}, 0.4);
  const DetectionSet dets = extract_peaks(bev, 0.4, 0.5);
  REQUIRE(dets.items.size() == 1);
  CHECK(std::abs(dets.items[0].x - cx) <= 0.5 * g.voxel_size);
  CHECK(std::abs(dets.items[0].y - cy) <= 0.5 * g.voxel_size);
  CHECK(dets.items[0].score == doctest::Approx(0.9));
}

TEST_CASE("extract_peaks: blobs 3 m apart both survive") {
  const GridSpec g = flat_grid(20, 12, 0.25);
  const double y = g.origin.y + 5.5 * g.voxel_size;
  const double x1 = g.origin.x + 3.5 * g.voxel_size;
  const BevMap bev = blob_map(g, {{x1, y, 0.8}, {x1 + 3.0, y, 0.8}}, 0.3);
  const DetectionSet dets = extract_peaks(bev, 0.4, 0.5);
  REQUIRE(dets.items.size() == 2);
  const double dx = dets.items[0].x - dets.items[1].x;
  const double dy = dets.items[0].y - dets.items[1].y;
  CHECK(std::hypot(dx, dy) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("extract_peaks: candidates 0.3 m apart merge into the stronger one") {
  const GridSpec g = flat_grid(12, 12, 0.15);
  BevMap bev;
  bev.grid = g;
  bev.values.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  bev.values[4 * g.ny + 4] = 0.9;
  bev.values[6 * g.ny + 4] = 0.7;  // 0.30 m away, non-adjacent
  const DetectionSet dets = extract_peaks(bev, 0.4, 0.5);
  REQUIRE(dets.items.size() == 1);
  CHECK(dets.items[0].score == doctest::Approx(0.9));
  // refined to the score-weighted centroid of the merged pair
  const double expect_x = (0.9 * bev.cell_x(4) + 0.7 * bev.cell_x(6)) / 1.6;
  CHECK(dets.items[0].x == doctest::Approx(expect_x).epsilon(1e-12));
  CHECK(dets.items[0].y == doctest::Approx(bev.cell_y(4)).epsilon(1e-12));
}

TEST_CASE("extract_peaks: validation and spacing invariant") {
  const GridSpec g = flat_grid(14, 11, 0.25);
  BevMap bev;
  bev.grid = g;
  bev.values.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);

  CHECK_THROWS_AS(extract_peaks(bev, 0.0, 0.5), Error);
  CHECK_THROWS_AS(extract_peaks(bev, 1.0, 0.5), Error);
  CHECK_THROWS_AS(extract_peaks(bev, 0.4, 0.0), Error);

  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    for (double& v : bev.values) v = u(rng);
    const double thr = 0.3, radius = 0.6;
    const DetectionSet dets = extract_peaks(bev, thr, radius);
    for (std::size_t i = 0; i < dets.items.size(); ++i) {
      CHECK(dets.items[i].score >= thr);
      for (std::size_t j = i + 1; j < dets.items.size(); ++j) {
        const double d = std::hypot(dets.items[i].x - dets.items[j].x,
                                    dets.items[i].y - dets.items[j].y);
        CHECK(d >= radius - 1e-12);
      }
    }
  }
}

TEST_CASE("hungarian: equals exhaustive enumeration up to n = 6") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> pick_n(1, 6);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = pick_n(rng);
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    for (double& c : cost) c = u(rng);

    const std::vector<int> assign = hungarian(cost, n);
    std::vector<char> seen(n, 0);
    double got = 0.0;
    for (int i = 0; i < n; ++i) {
      REQUIRE(assign[i] >= 0);
      REQUIRE(assign[i] < n);
      CHECK(!seen[assign[i]]);
      seen[assign[i]] = 1;
      got += cost[static_cast<std::size_t>(i) * n + assign[i]];
    }

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + perm[i]];
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));

    CHECK(got == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("hungarian: never worse than greedy on 200 random instances") {
  std::mt19937_64 rng(74);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> pick_n(1, 8);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = pick_n(rng);
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    for (double& c : cost) c = u(rng);

    const std::vector<int> assign = hungarian(cost, n);
    double optimal = 0.0;
    for (int i = 0; i < n; ++i) optimal += cost[static_cast<std::size_t>(i) * n + assign[i]];

    // greedy: repeatedly take the globally cheapest unused row/column pair
    std::vector<char> row_used(n, 0), col_used(n, 0);
    double greedy = 0.0;
    for (int k = 0; k < n; ++k) {
      double best = std::numeric_limits<double>::infinity();
      int bi = -1, bj = -1;
      for (int i = 0; i < n; ++i) {
        if (row_used[i]) continue;
        for (int j = 0; j < n; ++j) {
          if (col_used[j]) continue;
          if (cost[static_cast<std::size_t>(i) * n + j] < best) {
            best = cost[static_cast<std::size_t>(i) * n + j];
            bi = i;
            bj = j;
          }
        }
      }
      row_used[bi] = col_used[bj] = 1;
      greedy += best;
    }
    CHECK(optimal <= greedy + 1e-9);
  }

  CHECK_THROWS_AS(hungarian(std::vector<double>(3, 0.0), 2), Error);
  CHECK(hungarian({}, 0).empty());
}

TEST_CASE("match_and_score: exact hits") {
  const std::vector<std::array<double, 2>> gt = {{1.0, 2.0}, {3.5, 0.5}, {6.0, 6.0}};
  DetectionSet dets;
  for (const auto& g : gt) dets.items.push_back({g[0], g[1], 0.9});
  const MetricsReport rep = match_and_score(dets, gt, 0.5);
  CHECK(rep.tp == 3);
  CHECK(rep.fp == 0);
  CHECK(rep.fn == 0);
  CHECK(rep.moda == doctest::Approx(1.0));
  CHECK(rep.modp == doctest::Approx(1.0));
  CHECK(rep.precision == doctest::Approx(1.0));
  CHECK(rep.recall == doctest::Approx(1.0));
}

TEST_CASE("match_and_score: 10 gt, 8 perfect hits, 1 stray") {
  std::vector<std::array<double, 2>> gt;
  for (int i = 0; i < 10; ++i) gt.push_back({2.0 * i, 0.0});
  DetectionSet dets;
  for (int i = 0; i < 8; ++i) dets.items.push_back({2.0 * i, 0.0, 0.8});
  dets.items.push_back({100.0, 100.0, 0.8});  // far from everything
  const MetricsReport rep = match_and_score(dets, gt, 0.5);
  CHECK(rep.tp == 8);
  CHECK(rep.fp == 1);
  CHECK(rep.fn == 2);
  CHECK(rep.moda == doctest::Approx(0.7));
  CHECK(rep.precision == doctest::Approx(8.0 / 9.0));
  CHECK(rep.recall == doctest::Approx(0.8));
  CHECK(rep.modp == doctest::Approx(1.0));
}

TEST_CASE("match_and_score: crossed pair resolves to both matched") {
  const std::vector<std::array<double, 2>> gt = {{0.0, 0.0}, {1.0, 0.0}};
  DetectionSet dets;
  dets.items.push_back({0.9, 0.0, 0.9});
  dets.items.push_back({0.1, 0.0, 0.9});
  const MetricsReport rep = match_and_score(dets, gt, 0.5);
  CHECK(rep.tp == 2);
  CHECK(rep.fp == 0);
  CHECK(rep.fn == 0);
  CHECK(rep.modp == doctest::Approx(1.0 - 0.1 / 0.5));
}

TEST_CASE("match_and_score: empty ground truth conventions") {
  const MetricsReport clean = match_and_score(DetectionSet{}, {}, 0.5);
  CHECK(clean.moda == 1.0);
  CHECK(clean.precision == 1.0);
  CHECK(clean.recall == 1.0);
  CHECK(clean.modp == 0.0);

  DetectionSet strays;
  strays.items.push_back({1.0, 1.0, 0.9});
  strays.items.push_back({2.0, 2.0, 0.9});
  const MetricsReport bad = match_and_score(strays, {}, 0.5);
  CHECK(std::isnan(bad.moda));
  CHECK(bad.fp == 2);
  CHECK(bad.precision == 0.0);

  CHECK_THROWS_AS(match_and_score(strays, {}, 0.0), Error);
}

TEST_CASE("match_and_score: equals the exhaustive matcher on small instances") {
  std::mt19937_64 rng(75);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> count(0, 4);
  const double radius = 0.6;
  for (int rep = 0; rep < 80; ++rep) {
    DetectionSet dets;
    const int nd = count(rng);
    for (int i = 0; i < nd; ++i) dets.items.push_back({u(rng), u(rng), 0.5});
    std::vector<std::array<double, 2>> gt;
    const int ng = count(rng);
    for (int j = 0; j < ng; ++j) gt.push_back({u(rng), u(rng)});

    const MetricsReport rep_got = match_and_score(dets, gt, radius);

    MatchOracle oracle{&dets.items, &gt, radius};
    std::vector<bool> used(gt.size(), false);
    oracle.run(0, used, 0, 0.0);

    CHECK(rep_got.tp == oracle.best_tp);
    CHECK(rep_got.fp == nd - oracle.best_tp);
    CHECK(rep_got.fn == ng - oracle.best_tp);
    if (oracle.best_tp > 0) {
      // same optimum implies the same summed distance, hence the same modp
      const double expect_modp = 1.0 - oracle.best_dist / (oracle.best_tp * radius);
      CHECK(rep_got.modp == doctest::Approx(expect_modp).epsilon(1e-9));
    }
  }
}

TEST_CASE("match_and_score: permutation invariant") {
  std::mt19937_64 rng(76);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  DetectionSet dets;
  std::vector<std::array<double, 2>> gt;
  for (int i = 0; i < 6; ++i) {
    dets.items.push_back({u(rng), u(rng), 0.5});
    gt.push_back({u(rng), u(rng)});
  }
  const MetricsReport base = match_and_score(dets, gt, 0.7);
  for (int rep = 0; rep < 10; ++rep) {
    DetectionSet d2 = dets;
    std::vector<std::array<double, 2>> g2 = gt;
    std::shuffle(d2.items.begin(), d2.items.end(), rng);
    std::shuffle(g2.begin(), g2.end(), rng);
    const MetricsReport got = match_and_score(d2, g2, 0.7);
    CHECK(got.tp == base.tp);
    CHECK(got.moda == doctest::Approx(base.moda).epsilon(1e-12));
    CHECK(got.modp == doctest::Approx(base.modp).epsilon(1e-9));
  }
}

TEST_CASE("detections csv: round trip and malformed input") {
  test::TempDir dir("detect_csv");
  DetectionSet dets;
  dets.items.push_back({1.25, -3.5, 0.875});
  dets.items.push_back({0.1234567890123456, 2.0, 0.4});
  const auto path = dir.path() / "detections.csv";
  write_detections_csv(path, dets);

  const DetectionSet back = read_detections_csv(path);
  REQUIRE(back.items.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.items[i].x == dets.items[i].x);
    CHECK(back.items[i].y == dets.items[i].y);
    CHECK(back.items[i].score == dets.items[i].score);
  }

  // empty set still writes the header
  write_detections_csv(path, DetectionSet{});
  CHECK(read_detections_csv(path).items.empty());
  CHECK(slurp(path) == "x,y,score\n");

  {
    std::ofstream bad(path, std::ios::trunc);
    bad << "x,y\n";
  }
  CHECK_THROWS_AS(read_detections_csv(path), Error);
  {
    std::ofstream bad(path, std::ios::trunc);
    bad << "x,y,score\n1.0,2.0\n";
  }
  CHECK_THROWS_AS(read_detections_csv(path), Error);
  CHECK_THROWS_AS(read_detections_csv(dir.path() / "absent.csv"), Error);
}

TEST_CASE("metrics json: fields and the undefined-moda encoding") {
  test::TempDir dir("detect_json");
  MetricsReport rep;
  rep.moda = 0.7;
  rep.modp = 0.825;
  rep.precision = 8.0 / 9.0;
  rep.recall = 0.8;
  rep.tp = 8;
  rep.fp = 1;
  rep.fn = 2;
  rep.gt_count = 10;
  const auto path = dir.path() / "metrics.json";
  write_metrics_json(path, rep);
  const std::string text = slurp(path);
  CHECK(text.find("\"moda\": 0.7") != std::string::npos);
  CHECK(text.find("\"modp\": 0.825") != std::string::npos);
  CHECK(text.find("\"tp\": 8") != std::string::npos);
  CHECK(text.find("\"fp\": 1") != std::string::npos);
  CHECK(text.find("\"fn\": 2") != std::string::npos);
  CHECK(text.find("\"gt_count\": 10") != std::string::npos);

  rep.moda = std::numeric_limits<double>::quiet_NaN();
  write_metrics_json(path, rep);
  CHECK(slurp(path).find("\"moda\": null") != std::string::npos);
}

TEST_CASE("bev pgm: y-major rows expose the transpose") {
  GridSpec g = flat_grid(2, 3, 0.5);
  BevMap bev;
  bev.grid = g;
  bev.values.assign(6, 0.0);
  bev.values[1 * g.ny + 0] = 1.0;  // ix = 1, iy = 0

  test::TempDir dir("detect_pgm");
  const auto path = dir.path() / "bev.pgm";
  write_bev_pgm(path, bev);
  const std::string text = slurp(path);
  REQUIRE(text.size() == std::string("P5\n2 3\n255\n").size() + 6);
  CHECK(text.rfind("P5\n2 3\n255\n", 0) == 0);
  const unsigned char* px =
      reinterpret_cast<const unsigned char*>(text.data() + text.size() - 6);
  // row y=0 is (ix=0, iy=0), (ix=1, iy=0)
  CHECK(px[0] == 0);
  CHECK(px[1] == 255);
  for (int i = 2; i < 6; ++i) CHECK(px[i] == 0);
}
