#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mvped/common.hpp"

namespace mvped {

/// Per-pixel feature vectors for all views, [n][h][w][d] row-major.
/// Flattened as P x D with P = n*h*w for segmentation.
struct FeatureStack {
  int views = 0;
  int height = 0;
  int width = 0;
  int dim = 0;
  std::vector<double> values;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(views) * height * width;
  }
  const double* pixel(std::size_t p) const { return values.data() + p * dim; }
  double* pixel(std::size_t p) { return values.data() + p * dim; }
};

/// Cosine-similarity map to the pedestrian class, [n][h][w] in [-1, 1].
/// Produced upstream (or by the synthetic generator); ingested as-is.
struct SemanticMap {
  int views = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

/// Binary per-view masks, [n][h][w] with values exactly 0.0 or 1.0.
struct MaskStack {
  int views = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(views) * height * width;
  }
};

/// First principal direction plus per-pixel projection scores.
struct PcaResult {
  Eigen::VectorXd direction;   ///< unit norm, sign fixed to non-negative score skewness
  std::vector<double> scores;  ///< centered features projected on direction
  double threshold = 0.0;
};

struct SisConfig {
  int iterations = 2;          ///< PCA rounds; round t+1 re-fits on round t's foreground
  double phi_threshold = 0.0;  ///< split point on centered scores
  bool semantic_selection = true;
  int pca_max_iters = 200;
  double pca_tol = 1e-7;  ///< angular convergence tolerance, radians
  std::uint64_t seed = 1;
};

/// Subtracts the per-dimension mean taken across all pixels.
FeatureStack center_features(const FeatureStack& stack);

/// Dominant covariance eigenvector via power iteration on the D x D
/// covariance of the (already centered) stack. Fails with the final
/// residual if the angular change has not dropped below tol after
/// max_iters, or if the covariance is identically zero.
PcaResult first_principal_component(const FeatureStack& centered, int max_iters, double tol,
                                    std::uint64_t seed);

/// 1.0 where score > threshold, 0.0 otherwise.
std::vector<double> threshold_scores(const std::vector<double>& scores, double threshold);

/// Picks the candidate with the larger mean semantic similarity over its
/// support; ties go to the smaller candidate. Candidates are pixel-index
/// sets partitioning the current foreground. Fails if both are empty.
/// Returns true when the positive side wins.
bool semantic_side_select(const std::vector<std::size_t>& positive_side,
                          const std::vector<std::size_t>& negative_side,
                          const SemanticMap& semantic);

/// Iterated PCA segmentation: round 1 thresholds scores over all pixels,
/// later rounds re-center and re-fit on the surviving foreground only.
/// Both threshold sides are candidate foregrounds each round; the semantic
/// map arbitrates (when enabled, else the > side is taken). The final
/// feature-resolution mask is nearest-neighbor upsampled to image_height x
/// image_width, which the feature resolution must divide.
MaskStack sis_segment(const FeatureStack& stack, const SemanticMap& semantic,
                      const SisConfig& config, int image_height, int image_width);

}  // namespace mvped
