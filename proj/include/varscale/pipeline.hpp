#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "varscale/codebook.hpp"
#include "varscale/rng.hpp"
#include "varscale/sampling.hpp"

namespace varscale {

/// Resolution ladder, coarse to fine. Areas must be non-decreasing.
struct ScaleSchedule {
  std::vector<std::pair<int, int>> resolutions;  // (height, width) per scale

  /// The standard 10-scale ladder: [1,1],[2,2],[3,3],[4,4],[5,5],[6,6],
  /// [8,8],[10,10],[13,13],[16,16].
  static ScaleSchedule var_default();

  int num_scales() const { return static_cast<int>(resolutions.size()); }
  void validate() const;
};

struct Mode {
  TokenMap map;
  double weight = 1.0;
};

/// Synthetic next-scale predictor: at each scale a mixture over a small set
/// of planted token maps, sharpened by temperature, reweighted by a
/// deterministic hash of the coarse prefix, and smoothed with a small
/// uniform mass over all token maps at that resolution.
class PredictiveModel {
 public:
  PredictiveModel(Codebook codebook, ScaleSchedule schedule,
                  std::vector<std::vector<Mode>> modes_per_scale,
                  double temperature = 1.0, double smoothing = 0.01,
                  double prefix_contrast = 1.0);

  const Codebook& codebook() const { return codebook_; }
  const ScaleSchedule& schedule() const { return schedule_; }
  const std::vector<Mode>& modes_at(int scale) const;
  double temperature() const { return temperature_; }
  double smoothing() const { return smoothing_; }
  double prefix_contrast() const { return prefix_contrast_; }

  /// Mixture weights over the planted modes at `scale`, conditioned on the
  /// generated prefix (maps for scales < scale). Positive, sum to 1.
  std::vector<double> conditional_weights(
      int scale, std::span<const TokenMap> prefix) const;

 private:
  Codebook codebook_;
  ScaleSchedule schedule_;
  std::vector<std::vector<Mode>> modes_;  // weights normalized per scale
  double temperature_;
  double smoothing_;
  double prefix_contrast_;
};

/// One draw from the model's conditional distribution at `scale` given the
/// prefix. Deterministic in the rng stream.
TokenMap sample_scale(const PredictiveModel& model,
                      std::span<const TokenMap> prefix, int scale,
                      RngStream& rng);

/// Dense height x width x channels grid of reals.
struct FeatureGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;  // row-major, cell-major then channel

  double at(int r, int c, int ch) const {
    return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }
};

/// Sum over scales of the nearest-neighbor upsampling (to the final
/// resolution) of each scale's embedded token map. Purely deterministic.
FeatureGrid decode(const Codebook& codebook, std::span<const TokenMap> maps,
                   const ScaleSchedule& schedule);

/// Block-mean pooling to out_h x out_w cells, channels kept.
std::vector<double> pool_grid(const FeatureGrid& grid, int out_h, int out_w);

/// Stream ids used to derive independent rng streams per unit of work.
/// Keeping scale draws on their own channel per (trial, scale) is what lets
/// the perturbation experiment substitute one scale's stream while every
/// other raw draw stays bit-identical.
namespace stream_channel {
inline constexpr std::uint64_t kScaleDraw = 1;
inline constexpr std::uint64_t kCandidates = 2;
inline constexpr std::uint64_t kSelection = 3;
inline constexpr std::uint64_t kContinuation = 4;
inline constexpr std::uint64_t kReference = 5;
}  // namespace stream_channel

/// Candidate maps drawn at one scale plus their embedded features.
struct CandidateSet {
  int scale = 0;
  std::vector<TokenMap> maps;
  FeatureMatrix features;  // one row per candidate, dim = h*w*C
};

/// One completed chain: a chosen map per scale and the decoded output.
struct GenerationTrace {
  std::vector<TokenMap> chosen;  // exactly one map per scale in the schedule
  FeatureGrid decoded;
  int representative = 0;    // ordinal among the retained representatives
  int candidate_index = 0;   // index into the candidate set at target scale
};

struct GenerateOptions {
  SamplingConfig sampling;
  int target_scale = 1;
  /// Continue once via a density-weighted pick instead of once per
  /// retained representative.
  bool single_continuation = false;
};

/// Full record of one scaled inference run.
struct GenerationRun {
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
  GenerateOptions options;
  CandidateSet candidates;
  SelectionResult selection;
  std::vector<GenerationTrace> traces;
};

/// Runs the scale chain, applying the configured candidate-selection
/// strategy at options.target_scale and continuing each retained
/// representative to the final scale.
GenerationRun generate(const PredictiveModel& model,
                       const GenerateOptions& options,
                       std::uint64_t master_seed, std::uint64_t trial);

/// One chain with no candidate selection anywhere, decoded.
GenerationTrace generate_plain(const PredictiveModel& model,
                               std::uint64_t master_seed, std::uint64_t trial);

struct PerturbationResult {
  double mean_divergence = 0.0;
  std::vector<double> per_trial;
};

/// For each trial, generates twice with identical per-scale streams except
/// at `scale`, where the second run draws from a stream derived from
/// alt_seed. Divergence is the Euclidean distance between the two decoded
/// grids, flattened.
PerturbationResult perturb_scale_experiment(const PredictiveModel& model,
                                            int scale,
                                            std::uint64_t base_seed,
                                            std::uint64_t alt_seed,
                                            int trials);

}  // namespace varscale
