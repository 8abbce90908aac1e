#include "varscale/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "varscale/serialize.hpp"

namespace varscale {

using nlohmann::json;

namespace {

constexpr std::uint64_t kExperimentChannel = 11;

[[noreturn]] void config_fail(const std::string& message) {
  throw ConfigError(message);
}

int line_of_byte_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
    }
  }
  return line;
}

}  // namespace

PredictiveModel Scenario::build_model() const {
  return build_model(temperature);
}

PredictiveModel Scenario::build_model(double temperature_override) const {
  Codebook codebook = make_synthetic_codebook(vocab_size, dim, codebook_seed);
  schedule.validate();

  std::vector<std::vector<Mode>> modes;
  if (!planted) {
    modes = explicit_modes;
  } else {
    if (static_cast<int>(mode_specs.size()) != schedule.num_scales()) {
      config_fail("scenario '" + name + "': modes.per_scale must list " +
                  std::to_string(schedule.num_scales()) + " entries");
    }
    modes.resize(mode_specs.size());
    for (int k = 0; k < schedule.num_scales(); ++k) {
      const ModeGenSpec& spec = mode_specs[k];
      const auto [h, w] = schedule.resolutions[k];
      const int positions = h * w;
      if (spec.count < 1) {
        config_fail("scenario '" + name + "': mode count must be >= 1");
      }
      if (!spec.weights.empty() &&
          static_cast<int>(spec.weights.size()) != spec.count) {
        config_fail("scenario '" + name +
                    "': weights length must equal mode count");
      }

      // Base map, then variants that re-randomize `differing` positions.
      RngStream base_rng = RngStream::derive(
          mode_seed, {static_cast<std::uint64_t>(k), 0});
      TokenMap base;
      base.scale_index = k;
      base.height = h;
      base.width = w;
      base.tokens.resize(positions);
      for (auto& t : base.tokens) {
        t = static_cast<std::int32_t>(
            base_rng.next_below(static_cast<std::uint64_t>(vocab_size)));
      }

      for (int m = 0; m < spec.count; ++m) {
        TokenMap map = base;
        if (m > 0) {
          RngStream rng = RngStream::derive(
              mode_seed, {static_cast<std::uint64_t>(k),
                          static_cast<std::uint64_t>(m)});
          const int differing =
              spec.differing < 0 ? positions : std::min(spec.differing, positions);
          std::vector<int> order(positions);
          for (int i = 0; i < positions; ++i) {
            order[i] = i;
          }
          for (int i = 0; i < differing; ++i) {
            const int j = i + static_cast<int>(rng.next_below(
                                  static_cast<std::uint64_t>(positions - i)));
            std::swap(order[i], order[j]);
          }
          for (int i = 0; i < differing; ++i) {
            const int pos = order[i];
            // Draw from the other V-1 tokens so the variant really differs.
            auto t = static_cast<std::int32_t>(
                rng.next_below(static_cast<std::uint64_t>(vocab_size - 1)));
            if (t >= base.tokens[pos]) {
              ++t;
            }
            map.tokens[pos] = t;
          }
        }
        const double weight =
            spec.weights.empty() ? 1.0 : spec.weights[static_cast<std::size_t>(m)];
        modes[k].push_back(Mode{std::move(map), weight});
      }
    }
  }

  try {
    return PredictiveModel(std::move(codebook), schedule, std::move(modes),
                           temperature_override, smoothing, prefix_contrast);
  } catch (const std::exception& e) {
    config_fail("scenario '" + name + "': " + e.what());
  }
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  try {
    s.name = j.value("name", "unnamed");
    const auto& cb = j.at("codebook");
    s.vocab_size = cb.at("V").get<int>();
    s.dim = cb.at("C").get<int>();
    s.codebook_seed = cb.at("seed").get<std::uint64_t>();

    for (const auto& res : j.at("schedule")) {
      if (!res.is_array() || res.size() != 2) {
        config_fail("scenario schedule entries must be [height, width]");
      }
      s.schedule.resolutions.emplace_back(res[0].get<int>(), res[1].get<int>());
    }

    s.temperature = j.value("temperature", 1.0);
    s.smoothing = j.value("smoothing", 0.01);
    s.prefix_contrast = j.value("prefix_contrast", 1.0);
    s.coverage_radius = j.value("coverage_radius", 0.0);

    const auto& modes = j.at("modes");
    const std::string kind = modes.value("kind", "planted");
    if (kind == "planted") {
      s.planted = true;
      s.mode_seed = modes.at("seed").get<std::uint64_t>();
      for (const auto& spec_json : modes.at("per_scale")) {
        ModeGenSpec spec;
        spec.count = spec_json.at("count").get<int>();
        if (spec_json.contains("weights")) {
          spec.weights = spec_json.at("weights").get<std::vector<double>>();
        }
        spec.differing = spec_json.value("differing", -1);
        s.mode_specs.push_back(std::move(spec));
      }
    } else if (kind == "explicit") {
      s.planted = false;
      for (const auto& scale_modes : modes.at("per_scale")) {
        std::vector<Mode> parsed;
        for (const auto& mode_json : scale_modes) {
          Mode mode;
          mode.map = token_map_from_json(mode_json.at("map"));
          mode.weight = mode_json.value("weight", 1.0);
          parsed.push_back(std::move(mode));
        }
        s.explicit_modes.push_back(std::move(parsed));
      }
    } else {
      config_fail("scenario modes.kind must be 'planted' or 'explicit'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    config_fail(std::string("scenario json: ") + e.what());
  } catch (const std::exception& e) {
    config_fail(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    config_fail("cannot open scenario file: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& e) {
    config_fail(path + ":" + std::to_string(line_of_byte_offset(text, e.byte)) +
                ": " + e.what());
  }
  return scenario_from_json(parsed);
}

GroundTruth ground_truth_modes(const PredictiveModel& model, int target_scale) {
  const ScaleSchedule& schedule = model.schedule();
  if (target_scale < 0 || target_scale >= schedule.num_scales()) {
    throw std::invalid_argument("ground_truth_modes: target scale out of range");
  }
  const int num_modes =
      static_cast<int>(model.modes_at(target_scale).size());
  const auto [out_h, out_w] = schedule.resolutions.back();
  const int full_dim = out_h * out_w * model.codebook().dim();
  const int pooled_dim = kPooledSide * kPooledSide * model.codebook().dim();

  GroundTruth truth;
  truth.full = FeatureMatrix(num_modes, full_dim);
  truth.pooled = FeatureMatrix(num_modes, pooled_dim);

  for (int mode_index = 0; mode_index < num_modes; ++mode_index) {
    std::vector<TokenMap> chain;
    chain.reserve(schedule.num_scales());
    for (int k = 0; k < schedule.num_scales(); ++k) {
      int choice = mode_index;
      if (k != target_scale) {
        const std::vector<double> weights = model.conditional_weights(k, chain);
        choice = static_cast<int>(std::distance(
            weights.begin(), std::max_element(weights.begin(), weights.end())));
      }
      TokenMap map = model.modes_at(k)[static_cast<std::size_t>(choice)].map;
      map.scale_index = k;
      chain.push_back(std::move(map));
    }
    const FeatureGrid grid = decode(model.codebook(), chain, schedule);
    std::copy(grid.data.begin(), grid.data.end(),
              truth.full.row(mode_index).begin());
    const std::vector<double> pooled = pool_grid(grid, kPooledSide, kPooledSide);
    std::copy(pooled.begin(), pooled.end(),
              truth.pooled.row(mode_index).begin());
  }
  return truth;
}

FeatureMatrix reference_features(const PredictiveModel& model, int count,
                                 std::uint64_t seed) {
  if (count < 1) {
    throw std::invalid_argument("reference_features: count must be >= 1");
  }
  const int pooled_dim = kPooledSide * kPooledSide * model.codebook().dim();
  FeatureMatrix features(count, pooled_dim);
  for (int t = 0; t < count; ++t) {
    const GenerationTrace trace =
        generate_plain(model, seed, static_cast<std::uint64_t>(t));
    const std::vector<double> pooled =
        pool_grid(trace.decoded, kPooledSide, kPooledSide);
    std::copy(pooled.begin(), pooled.end(), features.row(t).begin());
  }
  return features;
}

void ExperimentConfig::validate(const Scenario& scenario) const {
  if (strategies.empty()) config_fail("config: no strategies");
  if (target_scales.empty()) config_fail("config: no target scales");
  if (num_samples.empty()) config_fail("config: no sample counts");
  if (representatives.empty()) config_fail("config: no representative counts");
  if (alphas.empty()) config_fail("config: no alpha values");
  if (trials < 1) config_fail("config: trials must be >= 1");
  if (workers < 1) config_fail("config: workers must be >= 1");

  for (int scale : target_scales) {
    if (scale < 0 || scale >= scenario.schedule.num_scales()) {
      config_fail("config: target scale " + std::to_string(scale) +
                  " outside the scenario schedule");
    }
  }
  for (int n : num_samples) {
    if (n < 1) config_fail("config: sample counts must be >= 1");
  }
  for (int k : representatives) {
    if (k < 1) config_fail("config: representative counts must be >= 1");
    for (int n : num_samples) {
      if (k > n) {
        config_fail("config: representatives " + std::to_string(k) +
                    " exceeds sample count " + std::to_string(n));
      }
    }
  }
  for (double a : alphas) {
    if (!(a > 0.0)) config_fail("config: alpha values must be positive");
  }
  for (double t : temperatures) {
    if (!(t > 0.0)) config_fail("config: temperatures must be positive");
  }
  if (!(scenario.coverage_radius > 0.0)) {
    config_fail("scenario '" + scenario.name +
                "': coverage_radius must be positive");
  }
}

ReportRow run_trial(const PredictiveModel& model, const GroundTruth& truth,
                    const FeatureMatrix& reference, double coverage_radius,
                    const GridPointRequest& request, std::uint64_t master_seed,
                    int trial, bool timing) {
  ReportRow row;
  row.kind = RowKind::Data;
  row.strategy = request.strategy;
  row.scale = request.target_scale;
  row.n = request.num_samples;
  row.k = request.representatives;
  row.alpha = request.alpha;
  row.metric = request.metric;
  row.rule = request.rule;
  row.temperature = request.temperature;
  row.trial = trial;
  row.seed = master_seed;

  const auto started = std::chrono::steady_clock::now();
  try {
    GenerateOptions options;
    options.sampling.strategy = request.strategy;
    options.sampling.num_candidates = request.num_samples;
    options.sampling.num_representatives = request.representatives;
    options.sampling.alpha = request.alpha;
    options.sampling.seed = master_seed;
    options.sampling.rule = request.rule;
    options.sampling.metric = request.metric;
    options.target_scale = request.target_scale;
    options.single_continuation = request.single_continuation;

    const GenerationRun run =
        generate(model, options, master_seed, static_cast<std::uint64_t>(trial));

    if (request.strategy == Strategy::DensityAdaptive) {
      row.branch_topk =
          run.selection.branch == SelectionBranch::TopK ? 1.0 : 0.0;
    }

    const int outputs = static_cast<int>(run.traces.size());
    const int full_dim = truth.full.cols;
    const int pooled_dim = reference.cols;
    FeatureMatrix full(outputs, full_dim);
    FeatureMatrix pooled(outputs, pooled_dim);
    for (int i = 0; i < outputs; ++i) {
      const FeatureGrid& grid = run.traces[static_cast<std::size_t>(i)].decoded;
      std::copy(grid.data.begin(), grid.data.end(), full.row(i).begin());
      const std::vector<double> p = pool_grid(grid, kPooledSide, kPooledSide);
      std::copy(p.begin(), p.end(), pooled.row(i).begin());
    }

    // Each proxy metric fails independently; a failed row keeps whatever
    // did compute and is marked rather than dropped.
    try {
      row.fidelity = mode_fidelity(full, truth.full);
    } catch (const std::exception&) {
      row.failed = true;
    }
    try {
      row.coverage = mode_coverage(full, truth.full, coverage_radius);
    } catch (const std::exception&) {
      row.failed = true;
    }
    try {
      row.frechet = frechet_distance(pooled, reference);
    } catch (const std::exception&) {
      row.failed = true;
    }
  } catch (const std::exception&) {
    row.failed = true;
  }

  if (timing) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    row.wall_ms =
        std::chrono::duration<double, std::milli>(elapsed).count();
  }
  return row;
}

namespace {

struct GridPoint {
  GridPointRequest request;
  std::uint64_t seed = 0;
  int temperature_index = 0;
};

std::uint64_t grid_point_seed(std::uint64_t master, const GridPointRequest& r) {
  return RngStream::derive(
             master,
             {kExperimentChannel, static_cast<std::uint64_t>(r.strategy),
              static_cast<std::uint64_t>(r.target_scale),
              static_cast<std::uint64_t>(r.num_samples),
              static_cast<std::uint64_t>(r.representatives),
              std::bit_cast<std::uint64_t>(r.alpha),
              std::bit_cast<std::uint64_t>(r.temperature)})
      .next_u64();
}

bool row_order(const ReportRow& a, const ReportRow& b) {
  const auto key = [](const ReportRow& r) {
    return std::make_tuple(static_cast<int>(r.strategy), r.scale, r.n, r.k,
                           r.alpha, r.temperature, r.trial);
  };
  return key(a) < key(b);
}

ReportRow aggregate_rows(const std::vector<const ReportRow*>& rows,
                         std::uint64_t master_seed) {
  ReportRow out = *rows.front();
  out.kind = RowKind::Aggregate;
  out.trial = -1;
  out.seed = master_seed;
  out.failed = true;  // cleared below when any trial succeeded

  // Mean and population stddev over the trials that produced a value.
  const auto fold = [&](auto getter, std::optional<double>& mean_out,
                        std::optional<double>& std_out) {
    double sum = 0.0;
    int count = 0;
    for (const ReportRow* r : rows) {
      if (const auto v = getter(*r)) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) {
      mean_out.reset();
      std_out.reset();
      return;
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (const ReportRow* r : rows) {
      if (const auto v = getter(*r)) {
        const double diff = *v - mean;
        sq += diff * diff;
      }
    }
    mean_out = mean;
    std_out = std::sqrt(sq / count);
  };

  for (const ReportRow* r : rows) {
    if (!r->failed) {
      out.failed = false;
    }
  }
  const auto unless_failed = [](const std::optional<double>& v,
                                const ReportRow& r) {
    return r.failed ? std::optional<double>{} : v;
  };
  fold([](const ReportRow& r) { return r.branch_topk; }, out.branch_topk,
       out.branch_topk_std);
  fold([&](const ReportRow& r) { return unless_failed(r.frechet, r); },
       out.frechet, out.frechet_std);
  fold([&](const ReportRow& r) { return unless_failed(r.fidelity, r); },
       out.fidelity, out.fidelity_std);
  fold([&](const ReportRow& r) { return unless_failed(r.coverage, r); },
       out.coverage, out.coverage_std);
  fold([](const ReportRow& r) { return r.wall_ms; }, out.wall_ms,
       out.wall_ms_std);
  return out;
}

}  // namespace

Report run_experiment(const ExperimentConfig& config) {
  const Scenario scenario = load_scenario(config.scenario_path);
  config.validate(scenario);

  const std::vector<double> temps = config.temperatures.empty()
                                        ? std::vector<double>{scenario.temperature}
                                        : config.temperatures;

  // Shared read-only context per temperature: model, ground truth per
  // target scale, reference sample set.
  struct TempContext {
    PredictiveModel model;
    std::map<int, GroundTruth> truths;
    FeatureMatrix reference;
  };
  std::vector<TempContext> contexts;
  contexts.reserve(temps.size());
  for (std::size_t ti = 0; ti < temps.size(); ++ti) {
    TempContext ctx{scenario.build_model(temps[ti]), {}, {}};
    for (int scale : config.target_scales) {
      ctx.truths.emplace(scale, ground_truth_modes(ctx.model, scale));
    }
    const std::uint64_t ref_seed =
        RngStream::derive(config.master_seed,
                          {stream_channel::kReference,
                           std::bit_cast<std::uint64_t>(temps[ti])})
            .next_u64();
    ctx.reference =
        reference_features(ctx.model, kReferencePoolSize, ref_seed);
    contexts.push_back(std::move(ctx));
  }

  std::vector<GridPoint> grid;
  for (Strategy strategy : config.strategies) {
    for (int scale : config.target_scales) {
      for (int n : config.num_samples) {
        for (int k : config.representatives) {
          for (double alpha : config.alphas) {
            for (std::size_t ti = 0; ti < temps.size(); ++ti) {
              GridPoint point;
              point.request.strategy = strategy;
              point.request.target_scale = scale;
              point.request.num_samples = n;
              point.request.representatives = k;
              point.request.alpha = alpha;
              point.request.metric = config.metric;
              point.request.rule = config.rule;
              point.request.temperature = temps[ti];
              point.request.single_continuation = config.single_continuation;
              point.temperature_index = static_cast<int>(ti);
              point.seed = grid_point_seed(config.master_seed, point.request);
              grid.push_back(point);
            }
          }
        }
      }
    }
  }

  const std::size_t total_tasks = grid.size() * config.trials;
  std::vector<ReportRow> rows(total_tasks);
  std::atomic<std::size_t> next_task{0};

  const auto worker = [&]() {
    for (;;) {
      const std::size_t task = next_task.fetch_add(1);
      if (task >= total_tasks) {
        return;
      }
      const GridPoint& point = grid[task / config.trials];
      const int trial = static_cast<int>(task % config.trials);
      const TempContext& ctx = contexts[point.temperature_index];
      rows[task] = run_trial(ctx.model, ctx.truths.at(point.request.target_scale),
                             ctx.reference, scenario.coverage_radius,
                             point.request, point.seed, trial, config.timing);
    }
  };

  const std::size_t thread_count =
      std::min(static_cast<std::size_t>(config.workers),
               std::max<std::size_t>(total_tasks, 1));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t i = 0; i < thread_count; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  // Completion order never matters: rows land in fixed slots and the final
  // report is sorted on the grid key.
  std::sort(rows.begin(), rows.end(), row_order);

  Report report;
  report.rows = std::move(rows);

  std::map<std::tuple<int, int, int, int, double, double>,
           std::vector<const ReportRow*>>
      by_point;
  for (const ReportRow& row : report.rows) {
    by_point[{static_cast<int>(row.strategy), row.scale, row.n, row.k,
              row.alpha, row.temperature}]
        .push_back(&row);
  }
  for (const auto& [key, members] : by_point) {
    report.aggregates.push_back(aggregate_rows(members, config.master_seed));
  }
  return report;
}

namespace {

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", v);
  return buffer;
}

std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

const char* kind_name(RowKind kind) {
  return kind == RowKind::Aggregate ? "aggregate" : "data";
}

void write_row(const ReportRow& row, std::ostream& out) {
  out << kind_name(row.kind) << ',' << strategy_name(row.strategy) << ','
      << row.scale << ',' << row.n << ',' << row.k << ','
      << format_double(row.alpha) << ',' << metric_name(row.metric) << ','
      << rule_name(row.rule) << ',' << format_double(row.temperature) << ',';
  if (row.trial >= 0) {
    out << row.trial;
  }
  out << ',' << row.seed << ',' << (row.failed ? "failed" : "ok") << ','
      << cell(row.branch_topk) << ',' << cell(row.frechet) << ','
      << cell(row.fidelity) << ',' << cell(row.coverage) << ','
      << cell(row.wall_ms) << ',' << cell(row.branch_topk_std) << ','
      << cell(row.frechet_std) << ',' << cell(row.fidelity_std) << ','
      << cell(row.coverage_std) << ',' << cell(row.wall_ms_std) << '\n';
}

json row_to_json(const ReportRow& row) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  return json{{"kind", kind_name(row.kind)},
              {"strategy", strategy_name(row.strategy)},
              {"scale", row.scale},
              {"n", row.n},
              {"k", row.k},
              {"alpha", row.alpha},
              {"metric", metric_name(row.metric)},
              {"rule", rule_name(row.rule)},
              {"temperature", row.temperature},
              {"trial", row.trial >= 0 ? json(row.trial) : json(nullptr)},
              {"seed", row.seed},
              {"status", row.failed ? "failed" : "ok"},
              {"branch_topk", opt(row.branch_topk)},
              {"frechet", opt(row.frechet)},
              {"fidelity", opt(row.fidelity)},
              {"coverage", opt(row.coverage)},
              {"wall_ms", opt(row.wall_ms)},
              {"branch_topk_std", opt(row.branch_topk_std)},
              {"frechet_std", opt(row.frechet_std)},
              {"fidelity_std", opt(row.fidelity_std)},
              {"coverage_std", opt(row.coverage_std)},
              {"wall_ms_std", opt(row.wall_ms_std)}};
}

}  // namespace

const char* const kCsvHeader =
    "kind,strategy,scale,n,k,alpha,metric,rule,temperature,trial,seed,"
    "status,branch_topk,frechet,fidelity,coverage,wall_ms,"
    "branch_topk_std,frechet_std,fidelity_std,coverage_std,wall_ms_std";

void write_csv(const Report& report, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const ReportRow& row : report.rows) {
    write_row(row, out);
  }
  for (const ReportRow& row : report.aggregates) {
    write_row(row, out);
  }
}

json report_to_json(const Report& report) {
  json rows = json::array();
  for (const ReportRow& row : report.rows) {
    rows.push_back(row_to_json(row));
  }
  json aggregates = json::array();
  for (const ReportRow& row : report.aggregates) {
    aggregates.push_back(row_to_json(row));
  }
  return json{
      {"schema",
       {"kind", "strategy", "scale", "n", "k", "alpha", "metric", "rule",
        "temperature", "trial", "seed", "status", "branch_topk", "frechet",
        "fidelity", "coverage", "wall_ms", "branch_topk_std", "frechet_std",
        "fidelity_std", "coverage_std", "wall_ms_std"}},
      {"rows", std::move(rows)},
      {"aggregates", std::move(aggregates)}};
}

void run_and_write(const ExperimentConfig& config) {
  // Open the sink first so a bad path fails before hours of sweeping.
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!config.out_path.empty() && config.out_path != "-") {
    file.open(config.out_path);
    if (!file) {
      throw std::runtime_error("cannot open output file: " + config.out_path);
    }
    out = &file;
  }

  const Report report = run_experiment(config);
  if (config.format == ReportFormat::Csv) {
    write_csv(report, *out);
  } else {
    *out << report_to_json(report).dump(1) << '\n';
  }
}

}  // namespace varscale
