#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "varscale/metrics.hpp"
#include "varscale/pipeline.hpp"

namespace varscale {

/// Bad scenario file or experiment configuration. The CLI maps this (and
/// flag parse errors) to exit code 2; anything else that escapes maps to 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Recipe for one scale's planted modes. Mode 0 is a uniformly random base
/// map; every further mode re-randomizes `differing` positions of the base
/// (all positions when differing < 0).
struct ModeGenSpec {
  int count = 1;
  std::vector<double> weights;  // empty = uniform
  int differing = -1;
};

/// A self-contained experiment world: codebook, schedule, planted modes and
/// difficulty knobs, loadable from JSON.
struct Scenario {
  std::string name;
  int vocab_size = 16;
  int dim = 4;
  std::uint64_t codebook_seed = 0;
  ScaleSchedule schedule;
  double temperature = 1.0;
  double smoothing = 0.01;
  double prefix_contrast = 1.0;
  double coverage_radius = 0.0;

  bool planted = true;
  std::uint64_t mode_seed = 0;
  std::vector<ModeGenSpec> mode_specs;          // planted; one per scale
  std::vector<std::vector<Mode>> explicit_modes;  // explicit alternative

  PredictiveModel build_model() const;
  PredictiveModel build_model(double temperature_override) const;
};

Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

/// Decoded prototypes for the modes planted at `target_scale`: every other
/// scale follows its conditionally most likely mode. `full` rows are
/// flattened final grids; `pooled` rows are block-pooled to kPooledCells.
struct GroundTruth {
  FeatureMatrix full;
  FeatureMatrix pooled;
};

inline constexpr int kPooledSide = 2;   // pooled grids are 2x2 x channels
inline constexpr int kReferencePoolSize = 512;

GroundTruth ground_truth_modes(const PredictiveModel& model, int target_scale);

/// Pooled features of `count` plain (selection-free) generations; the
/// reference sample set for distributional comparison.
FeatureMatrix reference_features(const PredictiveModel& model, int count,
                                 std::uint64_t seed);

enum class ReportFormat { Csv, Json };

struct ExperimentConfig {
  std::string scenario_path;
  std::vector<Strategy> strategies{Strategy::DensityAdaptive};
  std::vector<int> target_scales{1};
  std::vector<int> num_samples{20};          // #n axis
  std::vector<int> representatives{10};      // #rep axis
  std::vector<double> alphas{2.0, 2.3, 2.6};  // default sweep spans 2.0-2.6
  std::vector<double> temperatures;          // empty = scenario value
  DistanceMetric metric = DistanceMetric::Euclidean;
  ClassificationRule rule = ClassificationRule::Intent;
  bool single_continuation = false;
  int trials = 1;
  std::uint64_t master_seed = 0;
  int workers = 1;
  std::string out_path;                      // empty = stdout
  ReportFormat format = ReportFormat::Csv;
  bool timing = false;  // per-row wall time; breaks byte-reproducibility

  void validate(const Scenario& scenario) const;
};

enum class RowKind { Data, Aggregate };

struct ReportRow {
  RowKind kind = RowKind::Data;
  Strategy strategy = Strategy::DensityAdaptive;
  int scale = 0;
  int n = 0;
  int k = 0;
  double alpha = 0.0;
  DistanceMetric metric = DistanceMetric::Euclidean;
  ClassificationRule rule = ClassificationRule::Intent;
  double temperature = 1.0;
  int trial = -1;  // -1 on aggregate rows
  std::uint64_t seed = 0;
  bool failed = false;
  std::optional<double> branch_topk;  // DensityAdaptive only
  std::optional<double> frechet;
  std::optional<double> fidelity;
  std::optional<double> coverage;
  std::optional<double> wall_ms;
  // Populated on aggregate rows only: population stddev over the trials
  // that produced each value.
  std::optional<double> branch_topk_std;
  std::optional<double> frechet_std;
  std::optional<double> fidelity_std;
  std::optional<double> coverage_std;
  std::optional<double> wall_ms_std;
};

struct Report {
  std::vector<ReportRow> rows;        // sorted data rows
  std::vector<ReportRow> aggregates;  // one mean +- stddev row per grid point
};

/// One grid point's per-trial metrics; shared by run_experiment and the
/// verification suite so both measure through the same code path.
struct GridPointRequest {
  Strategy strategy = Strategy::DensityAdaptive;
  int target_scale = 1;
  int num_samples = 20;
  int representatives = 10;
  double alpha = 2.3;
  DistanceMetric metric = DistanceMetric::Euclidean;
  ClassificationRule rule = ClassificationRule::Intent;
  double temperature = 1.0;
  bool single_continuation = false;
};

ReportRow run_trial(const PredictiveModel& model, const GroundTruth& truth,
                    const FeatureMatrix& reference, double coverage_radius,
                    const GridPointRequest& request, std::uint64_t master_seed,
                    int trial, bool timing);

/// Full sweep: every grid point x trial, deterministically seeded, executed
/// by up to config.workers threads, rows sorted before emission.
Report run_experiment(const ExperimentConfig& config);

/// Column list of the CSV report, also mirrored by the JSON schema field.
extern const char* const kCsvHeader;

void write_csv(const Report& report, std::ostream& out);
nlohmann::json report_to_json(const Report& report);

/// Runs the experiment and writes the report to config.out_path (stdout
/// when empty).
void run_and_write(const ExperimentConfig& config);

}  // namespace varscale
