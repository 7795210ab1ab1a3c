#include "mvped/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mvped/image_io.hpp"

namespace mvped {

BevMap bev_project(const std::vector<double>& density, const GridSpec& grid) {
  if (density.size() != grid.size()) throw validation_error("bev: density/grid mismatch");
  BevMap bev;
  bev.grid = grid;
  bev.values.resize(static_cast<std::size_t>(grid.nx) * grid.ny);
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      const std::size_t base = grid.index(ix, iy, 0);
      double m = density[base];
      for (int iz = 1; iz < grid.nz; ++iz) m = std::max(m, density[base + iz]);
      bev.values[static_cast<std::size_t>(ix) * grid.ny + iy] = m;
    }
  }
  return bev;
}

namespace {

struct Candidate {
  int ix, iy;
  double score;
};

double dist2(double ax, double ay, double bx, double by) {
  return (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
}

}  // namespace

DetectionSet extract_peaks(const BevMap& bev, double score_thr, double nms_radius) {
  if (!(score_thr > 0.0 && score_thr < 1.0))
    throw validation_error("peaks: score threshold must lie in (0, 1)");
  if (!(nms_radius > 0.0)) throw validation_error("peaks: nms radius must be > 0");

  const int nx = bev.grid.nx, ny = bev.grid.ny;
  std::vector<Candidate> cands;
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      const double v = bev.values[static_cast<std::size_t>(ix) * ny + iy];
      if (v < score_thr) continue;
      bool is_max = true;
      for (int dx = -1; dx <= 1 && is_max; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          const int jx = ix + dx, jy = iy + dy;
          if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
          if (bev.values[static_cast<std::size_t>(jx) * ny + jy] > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) cands.push_back({ix, iy, v});
    }
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.ix != b.ix) return a.ix < b.ix;
    return a.iy < b.iy;
  });

  // Greedy NMS, remembering which survivor absorbed each suppressed cell so
  // the cluster centroid can refine the survivor's position.
  const double r2 = nms_radius * nms_radius;
  std::vector<int> owner(cands.size(), -1);
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    bool kept = true;
    for (std::size_t s : survivors) {
      if (dist2(bev.cell_x(cands[i].ix), bev.cell_y(cands[i].iy), bev.cell_x(cands[s].ix),
                bev.cell_y(cands[s].iy)) < r2) {
        owner[i] = static_cast<int>(s);
        kept = false;
        break;
      }
    }
    if (kept) survivors.push_back(i);
  }

  std::vector<Detection> refined;
  for (std::size_t s : survivors) {
    double wx = cands[s].score * bev.cell_x(cands[s].ix);
    double wy = cands[s].score * bev.cell_y(cands[s].iy);
    double wsum = cands[s].score;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (owner[i] != static_cast<int>(s)) continue;
      wx += cands[i].score * bev.cell_x(cands[i].ix);
      wy += cands[i].score * bev.cell_y(cands[i].iy);
      wsum += cands[i].score;
    }
    refined.push_back({wx / wsum, wy / wsum, cands[s].score});
  }

  // Refinement can pull two clusters together; enforce the spacing
  // invariant once more on the refined positions.
  DetectionSet out;
  for (const Detection& d : refined) {
    bool kept = true;
    for (const Detection& k : out.items) {
      if (dist2(d.x, d.y, k.x, k.y) < r2) {
        kept = false;
        break;
      }
    }
    if (kept) out.items.push_back(d);
  }
  return out;
}

std::vector<int> hungarian(const std::vector<double>& cost, int n) {
  if (n < 0 || cost.size() != static_cast<std::size_t>(n) * n)
    throw validation_error("hungarian: cost must be n x n");
  if (n == 0) return {};

  // Potential-based shortest augmenting path; rows/columns are 1-based with
  // column 0 as the virtual start.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

MetricsReport match_and_score(const DetectionSet& dets,
                              const std::vector<std::array<double, 2>>& gt,
                              double match_radius) {
  if (!(match_radius > 0.0)) throw validation_error("metrics: match radius must be > 0");
  const int nd = static_cast<int>(dets.items.size());
  const int ng = static_cast<int>(gt.size());

  MetricsReport rep;
  rep.gt_count = ng;

  std::vector<std::pair<int, int>> matches;
  if (nd > 0 && ng > 0) {
    // Square matrix padded with the forbidden-pair penalty; the penalty
    // dominates any sum of real distances, so the assignment maximizes the
    // number of within-radius pairs before minimizing their distances.
    const int n = std::max(nd, ng);
    const double penalty = (match_radius + 1.0) * (n + 1) * 1e6;
    std::vector<double> cost(static_cast<std::size_t>(n) * n, penalty);
    for (int i = 0; i < nd; ++i) {
      for (int j = 0; j < ng; ++j) {
        const double d =
            std::sqrt(dist2(dets.items[i].x, dets.items[i].y, gt[j][0], gt[j][1]));
        if (d <= match_radius) cost[static_cast<std::size_t>(i) * n + j] = d;
      }
    }
    const std::vector<int> assign = hungarian(cost, n);
    for (int i = 0; i < nd; ++i) {
      const int j = assign[i];
      if (j < 0 || j >= ng) continue;
      const double d = std::sqrt(dist2(dets.items[i].x, dets.items[i].y, gt[j][0], gt[j][1]));
      if (d <= match_radius) matches.emplace_back(i, j);
    }
  }

  rep.tp = static_cast<int>(matches.size());
  rep.fp = nd - rep.tp;
  rep.fn = ng - rep.tp;
  rep.precision = (rep.tp + rep.fp) == 0 ? 1.0 : static_cast<double>(rep.tp) / (rep.tp + rep.fp);
  rep.recall = (rep.tp + rep.fn) == 0 ? 1.0 : static_cast<double>(rep.tp) / (rep.tp + rep.fn);

  if (ng == 0) {
    // MODA's normalizer is the gt count; with detections present the value
    // is undefined and surfaces as NaN alongside the fp count.
    rep.moda = nd == 0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  } else {
    rep.moda = 1.0 - static_cast<double>(rep.fp + rep.fn) / ng;
  }

  if (rep.tp > 0) {
    double q = 0.0;
    for (const auto& [i, j] : matches)
      q += 1.0 - std::sqrt(dist2(dets.items[i].x, dets.items[i].y, gt[j][0], gt[j][1])) /
                     match_radius;
    rep.modp = q / rep.tp;
  }
  return rep;
}

void write_detections_csv(const std::filesystem::path& path, const DetectionSet& dets) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("detections: cannot open " + path.string());
  out << "x,y,score\n" << std::setprecision(17);
  for (const Detection& d : dets.items) out << d.x << ',' << d.y << ',' << d.score << '\n';
  if (!out) throw io_error("detections: failed writing " + path.string());
}

DetectionSet read_detections_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("detections: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,y,score")
    throw io_error("detections: bad header in " + path.string());
  DetectionSet dets;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Detection d;
    char c1 = 0, c2 = 0;
    if (!(row >> d.x >> c1 >> d.y >> c2 >> d.score) || c1 != ',' || c2 != ',')
      throw io_error("detections: bad row in " + path.string());
    dets.items.push_back(d);
  }
  return dets;
}

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& rep) {
  nlohmann::json j;
  j["moda"] = std::isnan(rep.moda) ? nlohmann::json(nullptr) : nlohmann::json(rep.moda);
  j["modp"] = rep.modp;
  j["precision"] = rep.precision;
  j["recall"] = rep.recall;
  j["tp"] = rep.tp;
  j["fp"] = rep.fp;
  j["fn"] = rep.fn;
  j["gt_count"] = rep.gt_count;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("metrics: cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw io_error("metrics: failed writing " + path.string());
}

void write_bev_pgm(const std::filesystem::path& path, const BevMap& bev) {
  // Rows advance along y so the image reads like a map (x right, y down).
  std::vector<double> img(bev.values.size());
  for (int iy = 0; iy < bev.grid.ny; ++iy)
    for (int ix = 0; ix < bev.grid.nx; ++ix)
      img[static_cast<std::size_t>(iy) * bev.grid.nx + ix] =
          bev.values[static_cast<std::size_t>(ix) * bev.grid.ny + iy];
  write_image_pgm(path, img, bev.grid.ny, bev.grid.nx);
}

}  // namespace mvped
