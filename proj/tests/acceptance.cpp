// Acceptance suite: one check per claim the library is expected to honor,
// each with a wall-clock budget. Run with no arguments for the full suite
// or with a single number to run one criterion. Prints one line per
// criterion; exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "varscale/harness.hpp"
#include "varscale/metrics.hpp"
#include "varscale/serialize.hpp"

using namespace varscale;

namespace {

struct CriterionResult {
  bool passed = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& note) {
    if (!ok) {
      passed = false;
    }
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + note);
  }
};

std::string scenario_path(const char* name) {
  return std::string(VARSCALE_SCENARIO_DIR) + "/" + name;
}

std::string fmt(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

// ---------------------------------------------------------------------------
// 1. Kernel density scores match a naive double-loop oracle.
// ---------------------------------------------------------------------------
CriterionResult criterion_kde_oracle() {
  CriterionResult result;
  RngStream rng(20250101);
  double worst = 0.0;
  for (int round = 0; round < 200; ++round) {
    const int n = 1 + static_cast<int>(rng.next_below(64));
    const int d = 1 + static_cast<int>(rng.next_below(32));
    const auto rows = oracle::random_rows(rng, n, d, 1.5);
    const double h = 0.25 + 2.75 * rng.next_double();
    const FeatureMatrix m = oracle::to_matrix(rows);

    for (bool normalized : {false, true}) {
      const auto got = kde_scores(m, h, normalized);
      const auto expected = oracle::naive_kde(rows, h, normalized);
      for (int i = 0; i < n; ++i) {
        worst = std::max(worst,
                         oracle::relative_error(got.scores[i], expected[i]));
      }
    }
  }
  result.require(worst <= 1e-12,
                 "200 instances (n<=64, d<=32), worst relative error " +
                     fmt(worst) + " <= 1e-12");
  return result;
}

// ---------------------------------------------------------------------------
// 2. Silverman bandwidth matches closed-form evaluation.
// ---------------------------------------------------------------------------
CriterionResult criterion_silverman() {
  CriterionResult result;
  RngStream rng(20250202);
  double worst = 0.0;
  for (int round = 0; round < 100; ++round) {
    const int n = 1 + static_cast<int>(rng.next_below(64));
    const int d = 1 + static_cast<int>(rng.next_below(16));
    const auto rows = oracle::random_rows(rng, n, d, 2.0);
    const auto est = silverman_bandwidth(oracle::to_matrix(rows));
    worst = std::max(
        worst, oracle::relative_error(est.h, oracle::silverman_reference(rows)));
  }
  result.require(worst <= 1e-12, "100 random instances, worst relative error " +
                                     fmt(worst) + " <= 1e-12");

  const auto pinned = silverman_bandwidth(
      FeatureMatrix::from_rows({{-1.0}, {-1.0}, {1.0}, {1.0}}));
  const double expected = std::pow(3.0, -0.2);
  result.require(std::fabs(pinned.h - expected) <= 1e-9,
                 "h(n=4, d=1, sigma=1) = " + fmt(pinned.h) + " within 1e-9 of " +
                     fmt(expected));
  return result;
}

// ---------------------------------------------------------------------------
// 3. Mean selected score orders top-k > random-k > small-k on the bimodal
//    scenario, per trial and in aggregate.
// ---------------------------------------------------------------------------
CriterionResult criterion_strategy_ordering() {
  CriterionResult result;
  const Scenario scenario = load_scenario(scenario_path("bimodal.json"));
  const PredictiveModel model = scenario.build_model();
  const std::uint64_t master = 30303;
  const int trials = 1000;
  const int n = 100;
  const int k = 20;
  const int target = 1;

  int consistent = 0;
  double top_total = 0.0, random_total = 0.0, small_total = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto trial = static_cast<std::uint64_t>(t);
    std::vector<TokenMap> prefix;
    for (int j = 0; j < target; ++j) {
      RngStream rng = RngStream::derive(
          master, {stream_channel::kScaleDraw, trial,
                   static_cast<std::uint64_t>(j)});
      prefix.push_back(sample_scale(model, prefix, j, rng));
    }
    RngStream candidate_rng = RngStream::derive(
        master, {stream_channel::kCandidates, trial,
                 static_cast<std::uint64_t>(target)});
    std::vector<TokenMap> maps;
    maps.reserve(n);
    for (int i = 0; i < n; ++i) {
      maps.push_back(sample_scale(model, prefix, target, candidate_rng));
    }
    const FeatureMatrix features = embed_all(model.codebook(), maps);
    const BandwidthEstimate bw = silverman_bandwidth(features);
    const std::vector<double> scores = kde_scores(features, bw.h).scores;

    const auto mean_of = [&](const std::vector<int>& picked) {
      double sum = 0.0;
      for (int idx : picked) {
        sum += scores[idx];
      }
      return sum / picked.size();
    };
    RngStream selection_rng = RngStream::derive(
        master, {stream_channel::kSelection, trial,
                 static_cast<std::uint64_t>(target)});
    const double top = mean_of(top_k_select(scores, k));
    const double random = mean_of(random_k_select(n, k, selection_rng));
    const double small = mean_of(small_k_select(scores, k));
    top_total += top;
    random_total += random;
    small_total += small;
    if (top > random && random > small) {
      ++consistent;
    }
  }

  result.require(top_total > random_total && random_total > small_total,
                 "aggregate means ordered: top " + fmt(top_total / trials) +
                     " > random " + fmt(random_total / trials) + " > small " +
                     fmt(small_total / trials));
  const double rate = consistent / static_cast<double>(trials);
  result.require(rate >= 0.99, "per-trial consistency " + fmt(rate) + " >= 0.99");
  return result;
}

// ---------------------------------------------------------------------------
// 4. Branch behavior on the two constructed candidate sets.
// ---------------------------------------------------------------------------
CriterionResult criterion_branch_behavior() {
  CriterionResult result;

  std::vector<std::vector<double>> concentrated_rows;
  for (int i = 0; i < 12; ++i) {
    concentrated_rows.push_back({1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
  }
  for (int j = 0; j < 8; ++j) {
    std::vector<double> far(8, 0.0);
    far[j] = 100.0;
    concentrated_rows.push_back(far);
  }
  const FeatureMatrix concentrated = oracle::to_matrix(concentrated_rows);

  std::vector<std::vector<double>> simplex_rows;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> row(20, 0.0);
    row[i] = 10.0;
    simplex_rows.push_back(row);
  }
  const FeatureMatrix simplex = oracle::to_matrix(simplex_rows);

  const auto branch_of = [](const FeatureMatrix& features,
                            ClassificationRule rule) {
    SamplingConfig config;
    config.strategy = Strategy::DensityAdaptive;
    config.num_candidates = 20;
    config.num_representatives = 10;
    config.alpha = 2.3;
    config.rule = rule;
    RngStream rng(7);
    return density_adaptive_select(features, config, rng);
  };

  const auto dup_default = branch_of(concentrated, ClassificationRule::Intent);
  const auto dup_flipped =
      branch_of(concentrated, ClassificationRule::PaperLiteral);
  const auto simplex_default = branch_of(simplex, ClassificationRule::Intent);
  const auto simplex_flipped =
      branch_of(simplex, ClassificationRule::PaperLiteral);

  result.require(dup_default.branch == SelectionBranch::TopK,
                 "concentrated 12/20 instance takes the top-k branch under the "
                 "default rule (max=" +
                     fmt(dup_default.report.max_score) + ", alpha*mean=" +
                     fmt(dup_default.report.d_current) + ")");
  result.require(simplex_default.branch == SelectionBranch::RandomK,
                 "equidistant simplex takes the random-k branch under the "
                 "default rule");
  result.require(dup_flipped.branch != dup_default.branch &&
                     simplex_flipped.branch != simplex_default.branch,
                 "paper-literal rule inverts both branches");
  return result;
}

// ---------------------------------------------------------------------------
// 5. Quality/diversity trade-off on the bimodal scenario.
// ---------------------------------------------------------------------------
struct PointSummary {
  double fidelity = 0.0;
  double coverage = 0.0;
  double frechet = 0.0;
};

PointSummary summarize_point(const PredictiveModel& model,
                             const GroundTruth& truth,
                             const FeatureMatrix& reference, double radius,
                             Strategy strategy, int n, int k, int trials,
                             std::uint64_t master) {
  GridPointRequest request;
  request.strategy = strategy;
  request.target_scale = 1;
  request.num_samples = n;
  request.representatives = k;
  request.alpha = 2.3;

  // Strategies at the same n share candidate and continuation streams, so
  // the comparison is paired: only the selection logic differs.
  const std::uint64_t seed =
      RngStream::derive(master, {static_cast<std::uint64_t>(n)}).next_u64();
  PointSummary summary;
  int ok = 0;
  for (int t = 0; t < trials; ++t) {
    const ReportRow row = run_trial(model, truth, reference, radius, request,
                                    seed, t, /*timing=*/false);
    if (row.failed) {
      continue;
    }
    summary.fidelity += *row.fidelity;
    summary.coverage += *row.coverage;
    summary.frechet += *row.frechet;
    ++ok;
  }
  summary.fidelity /= ok;
  summary.coverage /= ok;
  summary.frechet /= ok;
  return summary;
}

CriterionResult criterion_quality_diversity() {
  CriterionResult result;
  const Scenario scenario = load_scenario(scenario_path("bimodal.json"));
  const PredictiveModel model = scenario.build_model();
  const GroundTruth truth = ground_truth_modes(model, 1);
  const std::uint64_t master = 50505;
  const FeatureMatrix reference = reference_features(
      model, kReferencePoolSize,
      RngStream::derive(master, {stream_channel::kReference}).next_u64());

  const int trials = 500;
  const int k = 10;
  for (int n : {20, 50, 100}) {
    const PointSummary top =
        summarize_point(model, truth, reference, scenario.coverage_radius,
                        Strategy::TopK, n, k, trials, master);
    const PointSummary random =
        summarize_point(model, truth, reference, scenario.coverage_radius,
                        Strategy::RandomK, n, k, trials, master);
    const PointSummary adaptive =
        summarize_point(model, truth, reference, scenario.coverage_radius,
                        Strategy::DensityAdaptive, n, k, trials, master);

    if (n == 100) {
      result.require(top.coverage < random.coverage,
                     "n=100: top-k coverage " + fmt(top.coverage) +
                         " strictly below random-k coverage " +
                         fmt(random.coverage));
    }
    result.require(adaptive.fidelity <= 1.05 * top.fidelity,
                   "n=" + std::to_string(n) + ": adaptive fidelity " +
                       fmt(adaptive.fidelity) + " <= 1.05 x top-k " +
                       fmt(top.fidelity));
    result.require(adaptive.coverage >= 0.90 * random.coverage,
                   "n=" + std::to_string(n) + ": adaptive coverage " +
                       fmt(adaptive.coverage) + " >= 0.90 x random-k " +
                       fmt(random.coverage));
    result.require(adaptive.frechet <= 1.10 * random.frechet,
                   "n=" + std::to_string(n) + ": adaptive frechet " +
                       fmt(adaptive.frechet) + " <= 1.10 x random-k " +
                       fmt(random.frechet));
  }
  return result;
}

// ---------------------------------------------------------------------------
// 6. Perturbation divergence ordering across scales.
// ---------------------------------------------------------------------------
double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) {
    return 1.0;
  }
  const int extreme = std::max(wins, losses);
  double tail = 0.0;
  for (int i = extreme; i <= n; ++i) {
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                     std::lgamma(n - i + 1.0) - n * std::log(2.0));
  }
  return std::min(1.0, 2.0 * tail);
}

CriterionResult criterion_perturbation() {
  CriterionResult result;
  const Scenario scenario = load_scenario(scenario_path("default.json"));
  const PredictiveModel model = scenario.build_model();
  const int trials = 200;

  const PerturbationResult at1 =
      perturb_scale_experiment(model, 1, 606, 707, trials);
  const PerturbationResult at5 =
      perturb_scale_experiment(model, 5, 606, 707, trials);
  const PerturbationResult at9 =
      perturb_scale_experiment(model, 9, 606, 707, trials);

  result.require(at1.mean_divergence > at5.mean_divergence &&
                     at5.mean_divergence > at9.mean_divergence,
                 "mean divergence ordered: scale1 " + fmt(at1.mean_divergence) +
                     " > scale5 " + fmt(at5.mean_divergence) + " > scale9 " +
                     fmt(at9.mean_divergence));

  const auto paired_sign_test = [&](const std::vector<double>& a,
                                    const std::vector<double>& b) {
    int wins = 0, losses = 0;
    for (int t = 0; t < trials; ++t) {
      if (a[t] > b[t]) {
        ++wins;
      } else if (a[t] < b[t]) {
        ++losses;
      }
    }
    return std::tuple<int, int, double>(wins, losses, sign_test_p(wins, losses));
  };

  const auto [w15, l15, p15] = paired_sign_test(at1.per_trial, at5.per_trial);
  result.require(w15 > l15 && p15 < 0.01,
                 "sign test scale1 vs scale5: " + std::to_string(w15) + "/" +
                     std::to_string(l15) + " wins, p = " + fmt(p15) + " < 0.01");
  const auto [w59, l59, p59] = paired_sign_test(at5.per_trial, at9.per_trial);
  result.require(w59 > l59 && p59 < 0.01,
                 "sign test scale5 vs scale9: " + std::to_string(w59) + "/" +
                     std::to_string(l59) + " wins, p = " + fmt(p59) + " < 0.01");
  return result;
}

// ---------------------------------------------------------------------------
// 7. Frechet metric basics.
// ---------------------------------------------------------------------------
CriterionResult criterion_frechet() {
  CriterionResult result;
  RngStream rng(70707);
  const FeatureMatrix a = oracle::to_matrix(oracle::random_rows(rng, 64, 8));
  const FeatureMatrix b =
      oracle::to_matrix(oracle::random_rows(rng, 48, 8, 2.0));

  const double self = frechet_distance(a, a);
  result.require(self <= 1e-8, "FD(A, A) = " + fmt(self) + " <= 1e-8");

  const double gap = std::fabs(frechet_distance(a, b) - frechet_distance(b, a));
  result.require(gap <= 1e-8, "symmetry gap " + fmt(gap) + " <= 1e-8");

  const double one_dim =
      frechet_distance(FeatureMatrix::from_rows({{-1.0}, {1.0}}),
                       FeatureMatrix::from_rows({{1.0}, {5.0}}));
  result.require(std::fabs(one_dim - 10.0) <= 1e-6,
                 "1-D moments (0,1) vs (3,2): " + fmt(one_dim) +
                     " within 1e-6 of 10");
  return result;
}

// ---------------------------------------------------------------------------
// 8. Report determinism across worker counts.
// ---------------------------------------------------------------------------
CriterionResult criterion_determinism() {
  CriterionResult result;
  ExperimentConfig config;
  config.scenario_path = scenario_path("bimodal.json");
  config.strategies = {Strategy::DensityAdaptive, Strategy::TopK};
  config.target_scales = {1};
  config.num_samples = {10, 20};
  config.representatives = {5};
  config.alphas = {2.3};
  config.trials = 3;
  config.master_seed = 80808;

  config.workers = 1;
  const Report serial = run_experiment(config);
  config.workers = 8;
  const Report parallel = run_experiment(config);

  std::ostringstream csv_serial, csv_parallel;
  write_csv(serial, csv_serial);
  write_csv(parallel, csv_parallel);
  result.require(csv_serial.str() == csv_parallel.str(),
                 "csv reports byte-identical at --workers 1 and --workers 8 (" +
                     std::to_string(csv_serial.str().size()) + " bytes)");
  result.require(report_to_json(serial) == report_to_json(parallel),
                 "json reports identical at --workers 1 and --workers 8");
  return result;
}

// ---------------------------------------------------------------------------
// 9. Scale invariance of the classification and rank selectors.
// ---------------------------------------------------------------------------
CriterionResult criterion_scale_invariance() {
  CriterionResult result;
  RngStream rng(90909);
  int failures = 0;
  for (int round = 0; round < 1000; ++round) {
    const int n = 2 + static_cast<int>(rng.next_below(40));
    std::vector<double> scores(n);
    for (double& s : scores) {
      s = rng.next_double() * 10.0;
    }
    if (rng.next_below(4) == 0) {
      scores[rng.next_below(n)] = scores[rng.next_below(n)];  // plant a tie
    }
    const double factor = std::exp((rng.next_double() - 0.5) * 27.0);
    std::vector<double> scaled(n);
    for (int i = 0; i < n; ++i) {
      scaled[i] = scores[i] * factor;
    }
    const double alpha = 0.2 + 3.0 * rng.next_double();
    const int k = 1 + static_cast<int>(rng.next_below(n));

    const bool same =
        classify_density(scores, alpha) == classify_density(scaled, alpha) &&
        classify_density(scores, alpha, ClassificationRule::PaperLiteral) ==
            classify_density(scaled, alpha, ClassificationRule::PaperLiteral) &&
        top_k_select(scores, k) == top_k_select(scaled, k) &&
        small_k_select(scores, k) == small_k_select(scaled, k);
    if (!same) {
      ++failures;
    }
  }
  result.require(failures == 0, "1000 cases, " + std::to_string(failures) +
                                    " rescaling mismatches");
  return result;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<CriterionResult()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "kernel density scores match the double-loop oracle", 5.0,
       criterion_kde_oracle},
      {2, "Silverman bandwidth matches closed-form evaluation", 1.0,
       criterion_silverman},
      {3, "selected-score ordering: top-k > random-k > small-k", 30.0,
       criterion_strategy_ordering},
      {4, "density-adaptive branch behavior on constructed sets", 1.0,
       criterion_branch_behavior},
      {5, "quality/diversity trade-off across strategies", 120.0,
       criterion_quality_diversity},
      {6, "perturbation divergence ordering across scales", 60.0,
       criterion_perturbation},
      {7, "frechet metric self-distance, symmetry, 1-D oracle", 1.0,
       criterion_frechet},
      {8, "byte-identical reports across worker counts", 60.0,
       criterion_determinism},
      {9, "scale invariance of classification and rank selection", 5.0,
       criterion_scale_invariance},
  };

  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
  }

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (only != 0 && criterion.id != only) {
      continue;
    }
    const auto started = std::chrono::steady_clock::now();
    CriterionResult outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.passed = false;
      outcome.notes.push_back(std::string("FAIL exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    const bool in_budget = seconds < criterion.budget_seconds;
    const bool passed = outcome.passed && in_budget;
    std::printf("[%s] criterion %d: %s [%.2f s, budget %.0f s]\n",
                passed ? "PASS" : "FAIL", criterion.id, criterion.name,
                seconds, criterion.budget_seconds);
    for (const std::string& note : outcome.notes) {
      std::printf("       %s\n", note.c_str());
    }
    if (!in_budget) {
      std::printf("       FAIL over budget\n");
    }
    if (!passed) {
      ++failures;
    }
  }
  return failures;
}
