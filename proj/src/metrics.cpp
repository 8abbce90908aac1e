#include "varscale/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace varscale {

namespace {

constexpr double kCovarianceRidge = 1e-6;

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>>
as_eigen(const FeatureMatrix& m) {
  return {m.data.data(), m.rows, m.cols};
}

// Population covariance with a small ridge on the diagonal.
void fit_gaussian(const FeatureMatrix& samples, Eigen::VectorXd& mean,
                  Eigen::MatrixXd& cov) {
  const auto x = as_eigen(samples);
  mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  cov = (centered.transpose() * centered) / static_cast<double>(samples.rows);
  cov.diagonal().array() += kCovarianceRidge;
}

// Symmetric PSD square root; negative eigenvalues are clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() *
         solver.eigenvectors().transpose();
}

void require_set(const FeatureMatrix& m, int min_rows, const char* where) {
  if (m.rows < min_rows) {
    throw std::invalid_argument(std::string(where) + ": need at least " +
                                std::to_string(min_rows) + " samples");
  }
  if (m.cols < 1) {
    throw std::invalid_argument(std::string(where) + ": empty feature vectors");
  }
}

}  // namespace

double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b) {
  require_set(a, 2, "frechet_distance");
  require_set(b, 2, "frechet_distance");
  if (a.cols != b.cols) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }

  Eigen::VectorXd mean_a, mean_b;
  Eigen::MatrixXd cov_a, cov_b;
  fit_gaussian(a, mean_a, cov_a);
  fit_gaussian(b, mean_b, cov_b);

  // (S_a^(1/2) S_b S_a^(1/2))^(1/2) keeps the cross term symmetric, so the
  // result stays real; its trace equals tr((S_a S_b)^(1/2)).
  const Eigen::MatrixXd root_a = psd_sqrt(cov_a);
  Eigen::MatrixXd inner = root_a * cov_b * root_a;
  inner = 0.5 * (inner + inner.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(inner);
  const double cross_trace =
      solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double value = (mean_a - mean_b).squaredNorm() + cov_a.trace() +
                       cov_b.trace() - 2.0 * cross_trace;
  if (!std::isfinite(value)) {
    throw std::runtime_error("frechet_distance: non-finite result");
  }
  return std::max(0.0, value);
}

double mode_fidelity(const FeatureMatrix& outputs, const FeatureMatrix& modes) {
  require_set(outputs, 1, "mode_fidelity");
  require_set(modes, 1, "mode_fidelity");
  if (outputs.cols != modes.cols) {
    throw std::invalid_argument("mode_fidelity: dimension mismatch");
  }

  double total = 0.0;
  for (int i = 0; i < outputs.rows; ++i) {
    const auto x = outputs.row(i);
    double best_sq = std::numeric_limits<double>::infinity();
    for (int m = 0; m < modes.rows; ++m) {
      const auto mode = modes.row(m);
      double sq = 0.0;
      for (std::size_t c = 0; c < x.size(); ++c) {
        const double diff = x[c] - mode[c];
        sq += diff * diff;
      }
      best_sq = std::min(best_sq, sq);
    }
    total += std::sqrt(best_sq);
  }
  return total / outputs.rows;
}

double mode_coverage(const FeatureMatrix& outputs, const FeatureMatrix& modes,
                     double radius) {
  require_set(outputs, 1, "mode_coverage");
  require_set(modes, 1, "mode_coverage");
  if (outputs.cols != modes.cols) {
    throw std::invalid_argument("mode_coverage: dimension mismatch");
  }
  if (!(radius > 0.0)) {
    throw std::invalid_argument("mode_coverage: radius must be positive");
  }

  const double radius_sq = radius * radius;
  int covered = 0;
  for (int m = 0; m < modes.rows; ++m) {
    const auto mode = modes.row(m);
    for (int i = 0; i < outputs.rows; ++i) {
      const auto x = outputs.row(i);
      double sq = 0.0;
      for (std::size_t c = 0; c < x.size(); ++c) {
        const double diff = x[c] - mode[c];
        sq += diff * diff;
      }
      if (sq <= radius_sq) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / modes.rows;
}

}  // namespace varscale
