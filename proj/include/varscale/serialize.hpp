#pragma once

#include <json.hpp>

#include "varscale/codebook.hpp"
#include "varscale/density.hpp"
#include "varscale/pipeline.hpp"

namespace varscale {

/// {"V": ..., "C": ..., "seed": ..., "entries": [[...], ...]}
nlohmann::json codebook_to_json(const Codebook& codebook);
Codebook codebook_from_json(const nlohmann::json& j);

nlohmann::json token_map_to_json(const TokenMap& map);
TokenMap token_map_from_json(const nlohmann::json& j);

nlohmann::json density_report_to_json(const DensityReport& report);

nlohmann::json trace_to_json(const GenerationTrace& trace);

/// Debug dump of a full scaled run: candidates, selection, traces.
nlohmann::json generation_run_to_json(const GenerationRun& run);

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

const char* metric_name(DistanceMetric m);
DistanceMetric metric_from_name(const std::string& name);

const char* rule_name(ClassificationRule r);
ClassificationRule rule_from_name(const std::string& name);

}  // namespace varscale
