// Independent reference implementations used to cross-check the library.
// Everything here is deliberately naive: plain double loops, direct formula
// evaluation, no shared code with the implementations under test.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "varscale/feature_matrix.hpp"
#include "varscale/rng.hpp"

namespace oracle {

inline std::vector<std::vector<double>> naive_pairwise_sq(
    const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t c = 0; c < rows[i].size(); ++c) {
        const double diff = rows[i][c] - rows[j][c];
        sum += diff * diff;
      }
      d[i][j] = sum;
    }
  }
  return d;
}

inline std::vector<double> naive_kde(
    const std::vector<std::vector<double>>& rows, double h, bool normalized) {
  const std::size_t n = rows.size();
  const std::size_t dim = rows.front().size();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = rows[i][c] - rows[j][c];
        sq += diff * diff;
      }
      sum += std::exp(-sq / (2.0 * h * h));
    }
    if (normalized) {
      sum /= static_cast<double>(n) *
             std::pow(2.0 * std::numbers::pi, dim / 2.0) *
             std::pow(h, static_cast<double>(dim));
    }
    scores[i] = sum;
  }
  return scores;
}

inline double silverman_reference(
    const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t dim = rows.front().size();
  double sigma = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    double mean = 0.0;
    for (const auto& row : rows) {
      mean += row[c];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& row : rows) {
      var += (row[c] - mean) * (row[c] - mean);
    }
    sigma += std::sqrt(var / static_cast<double>(n));
  }
  sigma /= static_cast<double>(dim);
  if (sigma < 1e-12) {
    return 1e-12;
  }
  return sigma * std::pow(static_cast<double>(n) * (dim + 2.0) / 4.0,
                          -1.0 / (static_cast<double>(dim) + 4.0));
}

inline double naive_cosine_distance(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    dot += a[c] * b[c];
    na += a[c] * a[c];
    nb += b[c] * b[c];
  }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double relative_error(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / scale;
}

inline std::vector<std::vector<double>> random_rows(varscale::RngStream& rng,
                                                    int n, int dim,
                                                    double spread = 1.0) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  for (auto& row : rows) {
    for (double& v : row) {
      v = spread * rng.next_normal();
    }
  }
  return rows;
}

inline varscale::FeatureMatrix to_matrix(
    const std::vector<std::vector<double>>& rows) {
  return varscale::FeatureMatrix::from_rows(rows);
}

}  // namespace oracle
