#include "varscale/serialize.hpp"

#include <stdexcept>

namespace varscale {

using nlohmann::json;

json codebook_to_json(const Codebook& codebook) {
  json entries = json::array();
  for (int v = 0; v < codebook.vocab_size(); ++v) {
    const auto e = codebook.entry(v);
    entries.push_back(std::vector<double>(e.begin(), e.end()));
  }
  return json{{"V", codebook.vocab_size()},
              {"C", codebook.dim()},
              {"seed", codebook.seed()},
              {"entries", std::move(entries)}};
}

Codebook codebook_from_json(const json& j) {
  const int vocab = j.at("V").get<int>();
  const int dim = j.at("C").get<int>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  const auto& rows = j.at("entries");
  if (!rows.is_array() || static_cast<int>(rows.size()) != vocab) {
    throw std::invalid_argument("codebook json: entries must hold V rows");
  }
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(vocab) * dim);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != dim) {
      throw std::invalid_argument("codebook json: entry of wrong dimension");
    }
    for (const auto& v : row) {
      entries.push_back(v.get<double>());
    }
  }
  return Codebook(vocab, dim, std::move(entries), seed);
}

json token_map_to_json(const TokenMap& map) {
  return json{{"scale", map.scale_index},
              {"height", map.height},
              {"width", map.width},
              {"tokens", map.tokens}};
}

TokenMap token_map_from_json(const json& j) {
  TokenMap map;
  map.scale_index = j.at("scale").get<int>();
  map.height = j.at("height").get<int>();
  map.width = j.at("width").get<int>();
  map.tokens = j.at("tokens").get<std::vector<std::int32_t>>();
  map.validate();
  return map;
}

json density_report_to_json(const DensityReport& report) {
  return json{
      {"scores", report.scores},
      {"log_scores", report.log_scores},
      {"bandwidth", report.bandwidth},
      {"sigma", report.sigma},
      {"mean_score", report.mean_score},
      {"max_score", report.max_score},
      {"d_current", report.d_current},
      {"alpha", report.alpha},
      {"classification",
       report.classification == DensityClass::High ? "high" : "low"},
      {"rule", rule_name(report.rule)},
      {"cosine_fallbacks", report.cosine_fallbacks}};
}

json trace_to_json(const GenerationTrace& trace) {
  json chosen = json::array();
  for (const auto& map : trace.chosen) {
    chosen.push_back(token_map_to_json(map));
  }
  return json{{"representative", trace.representative},
              {"candidate_index", trace.candidate_index},
              {"chosen", std::move(chosen)},
              {"decoded",
               {{"height", trace.decoded.height},
                {"width", trace.decoded.width},
                {"channels", trace.decoded.channels},
                {"data", trace.decoded.data}}}};
}

json generation_run_to_json(const GenerationRun& run) {
  json candidates = json::array();
  for (const auto& map : run.candidates.maps) {
    candidates.push_back(token_map_to_json(map));
  }
  json traces = json::array();
  for (const auto& trace : run.traces) {
    traces.push_back(trace_to_json(trace));
  }
  const char* branch = run.selection.branch == SelectionBranch::TopK
                           ? "top-k"
                           : (run.selection.branch == SelectionBranch::RandomK
                                  ? "random-k"
                                  : "n/a");
  return json{{"master_seed", run.master_seed},
              {"trial", run.trial},
              {"strategy", strategy_name(run.options.sampling.strategy)},
              {"target_scale", run.options.target_scale},
              {"single_continuation", run.options.single_continuation},
              {"candidates", std::move(candidates)},
              {"selection",
               {{"selected", run.selection.selected},
                {"branch", branch},
                {"weights", run.selection.weights},
                {"report", density_report_to_json(run.selection.report)}}},
              {"traces", std::move(traces)}};
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::TopK:
      return "top-k";
    case Strategy::SmallK:
      return "small-k";
    case Strategy::RandomK:
      return "random-k";
    case Strategy::DensityAdaptive:
      return "density-adaptive";
  }
  return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "top-k") return Strategy::TopK;
  if (name == "small-k") return Strategy::SmallK;
  if (name == "random-k") return Strategy::RandomK;
  if (name == "density-adaptive") return Strategy::DensityAdaptive;
  throw std::invalid_argument("unknown strategy: " + name);
}

const char* metric_name(DistanceMetric m) {
  return m == DistanceMetric::Euclidean ? "euclidean" : "cosine";
}

DistanceMetric metric_from_name(const std::string& name) {
  if (name == "euclidean") return DistanceMetric::Euclidean;
  if (name == "cosine") return DistanceMetric::Cosine;
  throw std::invalid_argument("unknown distance metric: " + name);
}

const char* rule_name(ClassificationRule r) {
  return r == ClassificationRule::Intent ? "intent" : "paper-literal";
}

ClassificationRule rule_from_name(const std::string& name) {
  if (name == "intent") return ClassificationRule::Intent;
  if (name == "paper-literal") return ClassificationRule::PaperLiteral;
  throw std::invalid_argument("unknown classification rule: " + name);
}

}  // namespace varscale
