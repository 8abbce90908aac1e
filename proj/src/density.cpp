#include "varscale/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace varscale {

namespace {

void require_nonempty(const FeatureMatrix& features, const char* where) {
  if (features.rows < 1) {
    throw std::invalid_argument(std::string(where) + ": empty sample set");
  }
  if (features.cols < 1) {
    throw std::invalid_argument(std::string(where) +
                                ": features must have dimension >= 1");
  }
}

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace

SquareMatrix pairwise_sq_distances(const FeatureMatrix& features) {
  require_nonempty(features, "pairwise_sq_distances");
  const int n = features.rows;
  SquareMatrix dists(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d2 = sq_distance(features.row(i), features.row(j));
      dists.at(i, j) = d2;
      dists.at(j, i) = d2;
    }
  }
  return dists;
}

SquareMatrix cosine_sq_distances(const FeatureMatrix& features,
                                 int* fallbacks) {
  require_nonempty(features, "cosine_sq_distances");
  const int n = features.rows;

  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double v : features.row(i)) {
      sum += v * v;
    }
    norms[i] = std::sqrt(sum);
  }

  int fallback_count = 0;
  SquareMatrix dists(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d2;
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        d2 = sq_distance(features.row(i), features.row(j));
        ++fallback_count;
      } else {
        double dot = 0.0;
        const auto a = features.row(i);
        const auto b = features.row(j);
        for (std::size_t c = 0; c < a.size(); ++c) {
          dot += a[c] * b[c];
        }
        d2 = std::max(0.0, 1.0 - dot / (norms[i] * norms[j]));
      }
      dists.at(i, j) = d2;
      dists.at(j, i) = d2;
    }
  }
  if (fallbacks != nullptr) {
    *fallbacks = fallback_count;
  }
  return dists;
}

BandwidthEstimate silverman_bandwidth(const FeatureMatrix& features) {
  require_nonempty(features, "silverman_bandwidth");
  const int n = features.rows;
  const int d = features.cols;

  double sigma_sum = 0.0;
  for (int c = 0; c < d; ++c) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      mean += features.row(i)[c];
    }
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double diff = features.row(i)[c] - mean;
      var += diff * diff;
    }
    sigma_sum += std::sqrt(var / n);
  }
  const double sigma = sigma_sum / d;

  BandwidthEstimate est;
  est.sigma = sigma;
  if (sigma < kSigmaFloor) {
    est.h = kSigmaFloor;
  } else {
    est.h = sigma * std::pow(n * (d + 2) / 4.0, -1.0 / (d + 4));
  }
  return est;
}

KdeScores kde_scores_from_distances(const SquareMatrix& sq_dists, int dim,
                                    double h, bool normalized) {
  if (sq_dists.size < 1) {
    throw std::invalid_argument("kde_scores: empty sample set");
  }
  if (!(h > 0.0)) {
    throw std::invalid_argument("kde_scores: bandwidth must be positive");
  }
  if (dim < 1) {
    throw std::invalid_argument("kde_scores: dimension must be >= 1");
  }

  const int n = sq_dists.size;
  const double inv_two_h2 = 1.0 / (2.0 * h * h);
  // Normalization applied in the log domain so large d / small h cannot
  // underflow the constant.
  const double log_norm =
      normalized ? -(std::log(static_cast<double>(n)) +
                     0.5 * dim * std::log(2.0 * std::numbers::pi) +
                     dim * std::log(h))
                 : 0.0;

  KdeScores out;
  out.scores.resize(n);
  out.log_scores.resize(n);
  for (int i = 0; i < n; ++i) {
    // Fixed ascending-j order keeps sums reproducible.
    double kernel_sum = 0.0;
    double max_arg = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double arg = -sq_dists.at(i, j) * inv_two_h2;
      kernel_sum += std::exp(arg);
      max_arg = std::max(max_arg, arg);
    }
    double lse_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      lse_sum += std::exp(-sq_dists.at(i, j) * inv_two_h2 - max_arg);
    }
    const double log_score = max_arg + std::log(lse_sum) + log_norm;
    out.log_scores[i] = log_score;
    out.scores[i] = normalized ? std::exp(log_score) : kernel_sum;
  }
  return out;
}

KdeScores kde_scores(const FeatureMatrix& features, double h,
                     bool normalized) {
  require_nonempty(features, "kde_scores");
  return kde_scores_from_distances(pairwise_sq_distances(features),
                                   features.cols, h, normalized);
}

DensityClass classify_density(std::span<const double> scores, double alpha,
                              ClassificationRule rule) {
  if (scores.empty()) {
    throw std::invalid_argument("classify_density: empty score list");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("classify_density: alpha must be positive");
  }
  double mean = 0.0;
  double max = scores[0];
  for (double s : scores) {
    mean += s;
    max = std::max(max, s);
  }
  mean /= static_cast<double>(scores.size());
  const double d_current = alpha * mean;

  if (rule == ClassificationRule::Intent) {
    return max >= d_current ? DensityClass::High : DensityClass::Low;
  }
  return d_current >= max ? DensityClass::High : DensityClass::Low;
}

DensityReport build_density_report(const FeatureMatrix& features, double alpha,
                                   ClassificationRule rule,
                                   DistanceMetric metric) {
  require_nonempty(features, "build_density_report");
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("build_density_report: alpha must be positive");
  }

  DensityReport report;
  const BandwidthEstimate bw = silverman_bandwidth(features);
  report.bandwidth = bw.h;
  report.sigma = bw.sigma;

  SquareMatrix dists;
  if (metric == DistanceMetric::Cosine) {
    dists = cosine_sq_distances(features, &report.cosine_fallbacks);
  } else {
    dists = pairwise_sq_distances(features);
  }
  KdeScores kde =
      kde_scores_from_distances(dists, features.cols, bw.h, /*normalized=*/false);
  report.scores = std::move(kde.scores);
  report.log_scores = std::move(kde.log_scores);

  double mean = 0.0;
  double max = report.scores[0];
  for (double s : report.scores) {
    mean += s;
    max = std::max(max, s);
  }
  report.mean_score = mean / static_cast<double>(report.scores.size());
  report.max_score = max;
  report.alpha = alpha;
  report.d_current = alpha * report.mean_score;
  report.rule = rule;
  report.classification = classify_density(report.scores, alpha, rule);
  return report;
}

}  // namespace varscale
