#include "varscale/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace varscale {

void SamplingConfig::validate() const {
  if (num_candidates < 1) {
    throw std::invalid_argument("SamplingConfig: num_candidates must be >= 1");
  }
  if (num_representatives < 1 || num_representatives > num_candidates) {
    throw std::invalid_argument(
        "SamplingConfig: need 1 <= num_representatives <= num_candidates");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("SamplingConfig: alpha must be positive");
  }
}

namespace {

std::vector<int> ranked_select(std::span<const double> scores, int k,
                               bool descending) {
  if (k < 1) {
    throw std::invalid_argument("ranked select: k must be >= 1");
  }
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (n <= k) {
    return order;  // keep everything, ascending index
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) {
      return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    }
    return a < b;  // ties resolve to the lowest index
  });
  order.resize(k);
  return order;
}

std::vector<double> normalized_weights(std::span<const double> scores,
                                       std::span<const int> selected) {
  std::vector<double> weights(selected.size());
  double total = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    weights[i] = scores[selected[i]];
    total += weights[i];
  }
  if (total > 0.0) {
    for (double& w : weights) {
      w /= total;
    }
  } else {
    // Degenerate all-zero scores: fall back to uniform.
    const double u = 1.0 / static_cast<double>(weights.size());
    std::fill(weights.begin(), weights.end(), u);
  }
  return weights;
}

}  // namespace

std::vector<int> top_k_select(std::span<const double> scores, int k) {
  return ranked_select(scores, k, /*descending=*/true);
}

std::vector<int> small_k_select(std::span<const double> scores, int k) {
  return ranked_select(scores, k, /*descending=*/false);
}

std::vector<int> random_k_select(int n, int k, RngStream& rng) {
  if (k < 1) {
    throw std::invalid_argument("random_k_select: k must be >= 1");
  }
  if (n < 1) {
    throw std::invalid_argument("random_k_select: n must be >= 1");
  }
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  if (n <= k) {
    return pool;
  }
  // Partial Fisher-Yates; the first k slots are a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

SelectionResult density_adaptive_select(const FeatureMatrix& features,
                                        const SamplingConfig& config,
                                        RngStream& rng) {
  config.validate();
  if (features.rows != config.num_candidates) {
    throw std::invalid_argument(
        "density_adaptive_select: candidate count != config.num_candidates");
  }

  SelectionResult result;
  result.report =
      build_density_report(features, config.alpha, config.rule, config.metric);

  const int k = config.num_representatives;
  if (result.report.classification == DensityClass::High) {
    result.selected = top_k_select(result.report.scores, k);
    result.branch = SelectionBranch::TopK;
  } else {
    result.selected = random_k_select(features.rows, k, rng);
    result.branch = SelectionBranch::RandomK;
  }
  result.weights = normalized_weights(result.report.scores, result.selected);
  return result;
}

SelectionResult run_strategy(const FeatureMatrix& features,
                             const SamplingConfig& config, RngStream& rng) {
  if (config.strategy == Strategy::DensityAdaptive) {
    return density_adaptive_select(features, config, rng);
  }

  config.validate();
  if (features.rows != config.num_candidates) {
    throw std::invalid_argument(
        "run_strategy: candidate count != config.num_candidates");
  }

  SelectionResult result;
  result.report =
      build_density_report(features, config.alpha, config.rule, config.metric);
  const int k = config.num_representatives;
  switch (config.strategy) {
    case Strategy::TopK:
      result.selected = top_k_select(result.report.scores, k);
      break;
    case Strategy::SmallK:
      result.selected = small_k_select(result.report.scores, k);
      break;
    case Strategy::RandomK:
      result.selected = random_k_select(features.rows, k, rng);
      break;
    default:
      break;
  }
  result.branch = SelectionBranch::None;
  result.weights = normalized_weights(result.report.scores, result.selected);
  return result;
}

int weighted_pick(const SelectionResult& selection, RngStream& rng) {
  if (selection.selected.empty()) {
    throw std::logic_error("weighted_pick: selection is empty");
  }
  if (selection.weights.size() != selection.selected.size()) {
    throw std::logic_error("weighted_pick: weights/selection size mismatch");
  }
  double total = 0.0;
  for (double w : selection.weights) {
    total += w;
  }
  const double u = rng.next_double() * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < selection.weights.size(); ++i) {
    cumulative += selection.weights[i];
    if (u < cumulative) {
      return selection.selected[i];
    }
  }
  return selection.selected.back();
}

}  // namespace varscale
