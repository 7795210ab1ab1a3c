#include "mvped/sis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mvped {

namespace {

void validate_stack(const FeatureStack& stack) {
  if (stack.dim < 2) throw validation_error("sis: feature dim must be >= 2");
  if (stack.pixel_count() <= static_cast<std::size_t>(stack.dim))
    throw validation_error("sis: need more pixels than feature dims");
  for (double v : stack.values)
    if (!std::isfinite(v)) throw validation_error("sis: non-finite feature");
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
as_matrix(const FeatureStack& stack) {
  return {stack.values.data(), static_cast<Eigen::Index>(stack.pixel_count()), stack.dim};
}

}  // namespace

FeatureStack center_features(const FeatureStack& stack) {
  if (stack.pixel_count() < 2) throw validation_error("sis: centering needs >= 2 pixels");
  FeatureStack out = stack;
  const auto x = as_matrix(stack);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> y(
      out.values.data(), x.rows(), x.cols());
  y.rowwise() -= mean;
  return out;
}

PcaResult first_principal_component(const FeatureStack& centered, int max_iters, double tol,
                                    std::uint64_t seed) {
  if (max_iters < 1) throw validation_error("sis: pca needs max_iters >= 1");
  const auto x = as_matrix(centered);
  const Eigen::Index d = x.cols();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(x.rows());

  if (cov.norm() == 0.0) throw validation_error("sis: zero covariance, no principal direction");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
  v.normalize();

  double residual = 1.0;
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next = cov * v;
    const double norm = next.norm();
    if (norm == 0.0) {
      // Start vector landed in the null space; re-draw and keep going.
      for (Eigen::Index i = 0; i < d; ++i) next[i] = gauss(rng);
      next.normalize();
      v = next;
      continue;
    }
    next /= norm;
    // Angle between successive iterates, sign-insensitive.
    const double c = std::min(1.0, std::abs(next.dot(v)));
    residual = std::acos(c);
    v = next;
    if (residual < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw validation_error("sis: power iteration did not converge after " +
                           std::to_string(max_iters) + " iters (residual " +
                           std::to_string(residual) + ")");

  PcaResult result;
  result.direction = v;
  result.scores.resize(static_cast<std::size_t>(x.rows()));
  Eigen::Map<Eigen::VectorXd> scores(result.scores.data(), x.rows());
  scores = x * v;

  // Fix the sign so score skewness is >= 0; the scores are zero-mean, so
  // the third moment decides. Tie falls back to a positive first nonzero
  // direction component.
  const double m3 = scores.array().cube().mean();
  bool flip = m3 < 0.0;
  if (m3 == 0.0) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (v[i] != 0.0) {
        flip = v[i] < 0.0;
        break;
      }
    }
  }
  if (flip) {
    result.direction = -result.direction;
    scores = -scores;
  }
  return result;
}

std::vector<double> threshold_scores(const std::vector<double>& scores, double threshold) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1.0 : 0.0;
  return out;
}

bool semantic_side_select(const std::vector<std::size_t>& positive_side,
                          const std::vector<std::size_t>& negative_side,
                          const SemanticMap& semantic) {
  if (positive_side.empty() && negative_side.empty())
    throw validation_error("sis: both candidate foregrounds are empty");
  if (positive_side.empty()) return false;
  if (negative_side.empty()) return true;

  auto mean_similarity = [&semantic](const std::vector<std::size_t>& side) {
    double sum = 0.0;
    for (std::size_t p : side) sum += semantic.values[p];
    return sum / static_cast<double>(side.size());
  };
  const double pos = mean_similarity(positive_side);
  const double neg = mean_similarity(negative_side);
  if (pos != neg) return pos > neg;
  return positive_side.size() <= negative_side.size();
}

namespace {

FeatureStack gather_rows(const FeatureStack& stack, const std::vector<std::size_t>& rows) {
  FeatureStack sub;
  sub.views = 1;
  sub.height = 1;
  sub.width = static_cast<int>(rows.size());
  sub.dim = stack.dim;
  sub.values.resize(rows.size() * stack.dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = stack.pixel(rows[i]);
    std::copy(src, src + stack.dim, sub.values.begin() + i * stack.dim);
  }
  return sub;
}

}  // namespace

MaskStack sis_segment(const FeatureStack& stack, const SemanticMap& semantic,
                      const SisConfig& config, int image_height, int image_width) {
  validate_stack(stack);
  if (config.iterations < 1) throw validation_error("sis: iterations must be >= 1");
  if (config.semantic_selection &&
      semantic.values.size() != stack.pixel_count())
    throw validation_error("sis: semantic map missing or mismatched");
  if (image_height % stack.height != 0 || image_width % stack.width != 0)
    throw validation_error("sis: feature resolution must divide image resolution");

  // Support = pixel indices currently labeled foreground; starts as all P.
  std::vector<std::size_t> support(stack.pixel_count());
  for (std::size_t p = 0; p < support.size(); ++p) support[p] = p;

  for (int t = 0; t < config.iterations; ++t) {
    if (support.size() <= static_cast<std::size_t>(stack.dim))
      throw validation_error("sis: foreground shrank to " + std::to_string(support.size()) +
                             " pixels at iteration " + std::to_string(t + 1));
    const FeatureStack sub = center_features(gather_rows(stack, support));
    const PcaResult pca =
        first_principal_component(sub, config.pca_max_iters, config.pca_tol, config.seed + t);

    std::vector<std::size_t> above, below;
    for (std::size_t i = 0; i < support.size(); ++i)
      (pca.scores[i] > config.phi_threshold ? above : below).push_back(support[i]);

    bool take_above = true;
    if (config.semantic_selection) take_above = semantic_side_select(above, below, semantic);
    support = take_above ? std::move(above) : std::move(below);
    if (support.empty())
      throw validation_error("sis: foreground emptied at iteration " + std::to_string(t + 1));
  }

  MaskStack out;
  out.views = stack.views;
  out.height = image_height;
  out.width = image_width;
  out.values.assign(static_cast<std::size_t>(stack.views) * image_height * image_width, 0.0);

  const int sy = image_height / stack.height;
  const int sx = image_width / stack.width;
  for (std::size_t p : support) {
    const int n = static_cast<int>(p / (static_cast<std::size_t>(stack.height) * stack.width));
    const std::size_t rem = p % (static_cast<std::size_t>(stack.height) * stack.width);
    const int fy = static_cast<int>(rem / stack.width);
    const int fx = static_cast<int>(rem % stack.width);
    for (int dy = 0; dy < sy; ++dy) {
      const std::size_t row_base =
          (static_cast<std::size_t>(n) * image_height + fy * sy + dy) * image_width;
      for (int dx = 0; dx < sx; ++dx) out.values[row_base + fx * sx + dx] = 1.0;
    }
  }
  return out;
}

}  // namespace mvped
