#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "varscale/density.hpp"
#include "varscale/feature_matrix.hpp"
#include "varscale/rng.hpp"

namespace varscale {

enum class Strategy { TopK, SmallK, RandomK, DensityAdaptive };

/// Which arm the adaptive strategy took; None for the fixed strategies.
enum class SelectionBranch { TopK, RandomK, None };

struct SamplingConfig {
  Strategy strategy = Strategy::DensityAdaptive;
  int num_candidates = 20;       // candidates drawn per decision point (#n)
  int num_representatives = 10;  // candidates retained (#rep)
  double alpha = 2.3;            // density threshold coefficient
  std::uint64_t seed = 0;
  ClassificationRule rule = ClassificationRule::Intent;
  DistanceMetric metric = DistanceMetric::Euclidean;

  void validate() const;
};

struct SelectionResult {
  std::vector<int> selected;  // distinct candidate indices, k of them
  SelectionBranch branch = SelectionBranch::None;
  DensityReport report;
  std::vector<double> weights;  // normalized over `selected`, sum 1
};

/// Indices of the k largest scores, ordered by descending score then
/// ascending index. Ties keep the lowest index. If there are at most k
/// scores, all indices are returned in ascending order.
std::vector<int> top_k_select(std::span<const double> scores, int k);

/// Mirror of top_k_select for the k smallest scores (ascending order).
std::vector<int> small_k_select(std::span<const double> scores, int k);

/// k distinct indices drawn uniformly without replacement from [0, n);
/// all indices when n <= k.
std::vector<int> random_k_select(int n, int k, RngStream& rng);

/// Scores the candidate set (Silverman bandwidth + kernel density),
/// classifies it, and keeps the top-k on a High set or a uniform random-k
/// on a Low set. Weights are the selected candidates' scores normalized to
/// sum 1 (uniform if they sum to 0).
SelectionResult density_adaptive_select(const FeatureMatrix& features,
                                        const SamplingConfig& config,
                                        RngStream& rng);

/// Dispatch over config.strategy; fixed strategies also carry the density
/// report so their selections can be weighted by score.
SelectionResult run_strategy(const FeatureMatrix& features,
                             const SamplingConfig& config, RngStream& rng);

/// One index from the selection, drawn with probability equal to its weight.
int weighted_pick(const SelectionResult& selection, RngStream& rng);

}  // namespace varscale
