#pragma once

#include <span>
#include <vector>

#include "varscale/feature_matrix.hpp"

namespace varscale {

enum class DensityClass { High, Low };

/// Direction of the high/low comparison. `Intent` flags a candidate set as
/// high-density when some score reaches alpha times the mean (a prominent
/// peak exists). `PaperLiteral` is the opposite comparison: high-density
/// when no score exceeds alpha times the mean.
enum class ClassificationRule { Intent, PaperLiteral };

enum class DistanceMetric { Euclidean, Cosine };

/// Floor applied to the dimension-wise spread and to the bandwidth when a
/// candidate set has (near-)zero spread, e.g. all candidates coincident.
inline constexpr double kSigmaFloor = 1e-12;

struct SquareMatrix {
  int size = 0;
  std::vector<double> values;  // size * size, row-major

  SquareMatrix() = default;
  explicit SquareMatrix(int n)
      : size(n), values(static_cast<std::size_t>(n) * n, 0.0) {}

  double at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * size + j];
  }
  double& at(int i, int j) {
    return values[static_cast<std::size_t>(i) * size + j];
  }
};

/// Squared Euclidean distances between all rows. Symmetric, zero diagonal.
SquareMatrix pairwise_sq_distances(const FeatureMatrix& features);

/// 1 - cos(x_i, x_j) as a squared-distance surrogate. Pairs involving a
/// zero-norm vector fall back to the squared Euclidean distance; if
/// `fallbacks` is non-null it receives the number of such pairs.
SquareMatrix cosine_sq_distances(const FeatureMatrix& features,
                                 int* fallbacks = nullptr);

struct BandwidthEstimate {
  double h = 0.0;      // kernel bandwidth
  double sigma = 0.0;  // dimension-wise mean standard deviation
};

/// Silverman's rule for multivariate data:
///   sigma = (1/d) * sum_j stddev(coordinate j)   (population stddev)
///   h     = sigma * [n (d + 2) / 4]^(-1 / (d + 4))
/// h is floored at kSigmaFloor when the sample has no spread.
BandwidthEstimate silverman_bandwidth(const FeatureMatrix& features);

struct KdeScores {
  std::vector<double> scores;
  std::vector<double> log_scores;
};

/// Gaussian-kernel density score of every candidate against the whole set,
/// self term included:
///   score_i = sum_j exp(-||x_i - x_j||^2 / (2 h^2))
/// With `normalized`, scores are multiplied by 1 / (n (2 pi)^(d/2) h^d),
/// applied in the log domain. Log-domain scores are always returned.
KdeScores kde_scores(const FeatureMatrix& features, double h,
                     bool normalized = false);

/// Same, over a precomputed squared-distance matrix. `dim` is the feature
/// dimension used by the normalization constant.
KdeScores kde_scores_from_distances(const SquareMatrix& sq_dists, int dim,
                                    double h, bool normalized = false);

/// High/low decision from raw scores. Invariant under any uniform positive
/// rescaling of the scores.
DensityClass classify_density(std::span<const double> scores, double alpha,
                              ClassificationRule rule =
                                  ClassificationRule::Intent);

/// Everything the selection step needs to know about one candidate set.
struct DensityReport {
  std::vector<double> scores;      // relative (unnormalized) by default
  std::vector<double> log_scores;
  double bandwidth = 0.0;
  double sigma = 0.0;
  double mean_score = 0.0;
  double max_score = 0.0;
  double d_current = 0.0;          // alpha * mean_score
  double alpha = 0.0;
  DensityClass classification = DensityClass::Low;
  ClassificationRule rule = ClassificationRule::Intent;
  int cosine_fallbacks = 0;        // zero unless the cosine metric fell back
};

DensityReport build_density_report(
    const FeatureMatrix& features, double alpha,
    ClassificationRule rule = ClassificationRule::Intent,
    DistanceMetric metric = DistanceMetric::Euclidean);

}  // namespace varscale
