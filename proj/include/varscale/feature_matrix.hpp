#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace varscale {

/// Dense row-major matrix of feature vectors, one row per sample.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;

  FeatureMatrix(int num_rows, int num_cols)
      : rows(num_rows), cols(num_cols) {
    if (num_rows < 0 || num_cols < 0) {
      throw std::invalid_argument("FeatureMatrix: negative dimensions");
    }
    data.assign(static_cast<std::size_t>(num_rows) * num_cols, 0.0);
  }

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rs) {
    if (rs.empty()) {
      return {};
    }
    FeatureMatrix m(static_cast<int>(rs.size()),
                    static_cast<int>(rs.front().size()));
    for (int i = 0; i < m.rows; ++i) {
      if (static_cast<int>(rs[i].size()) != m.cols) {
        throw std::invalid_argument("FeatureMatrix: ragged rows");
      }
      std::copy(rs[i].begin(), rs[i].end(), m.row(i).begin());
    }
    return m;
  }

  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * cols,
            static_cast<std::size_t>(cols)};
  }

  std::span<double> row(int i) {
    return {data.data() + static_cast<std::size_t>(i) * cols,
            static_cast<std::size_t>(cols)};
  }
};

}  // namespace varscale
