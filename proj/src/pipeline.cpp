#include "varscale/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace varscale {

ScaleSchedule ScaleSchedule::var_default() {
  ScaleSchedule s;
  s.resolutions = {{1, 1}, {2, 2},   {3, 3},   {4, 4},   {5, 5},
                   {6, 6}, {8, 8}, {10, 10}, {13, 13}, {16, 16}};
  return s;
}

void ScaleSchedule::validate() const {
  if (resolutions.empty()) {
    throw std::invalid_argument("ScaleSchedule: no scales");
  }
  long prev_area = 0;
  for (const auto& [h, w] : resolutions) {
    if (h < 1 || w < 1) {
      throw std::invalid_argument("ScaleSchedule: resolutions must be >= 1");
    }
    const long area = static_cast<long>(h) * w;
    if (area < prev_area) {
      throw std::invalid_argument(
          "ScaleSchedule: scale areas must be non-decreasing");
    }
    prev_area = area;
  }
}

PredictiveModel::PredictiveModel(Codebook codebook, ScaleSchedule schedule,
                                 std::vector<std::vector<Mode>> modes_per_scale,
                                 double temperature, double smoothing,
                                 double prefix_contrast)
    : codebook_(std::move(codebook)), schedule_(std::move(schedule)),
      modes_(std::move(modes_per_scale)), temperature_(temperature),
      smoothing_(smoothing), prefix_contrast_(prefix_contrast) {
  schedule_.validate();
  if (static_cast<int>(modes_.size()) != schedule_.num_scales()) {
    throw std::invalid_argument(
        "PredictiveModel: one mode set per scale required");
  }
  if (!(temperature_ > 0.0)) {
    throw std::invalid_argument("PredictiveModel: temperature must be > 0");
  }
  if (smoothing_ < 0.0 || smoothing_ >= 1.0) {
    throw std::invalid_argument("PredictiveModel: smoothing must be in [0, 1)");
  }
  if (!(prefix_contrast_ > 0.0)) {
    throw std::invalid_argument("PredictiveModel: prefix_contrast must be > 0");
  }
  for (int k = 0; k < schedule_.num_scales(); ++k) {
    auto& modes = modes_[k];
    if (modes.empty()) {
      throw std::invalid_argument("PredictiveModel: scale " +
                                  std::to_string(k) + " has no modes");
    }
    const auto [h, w] = schedule_.resolutions[k];
    double total = 0.0;
    for (auto& mode : modes) {
      mode.map.validate();
      if (mode.map.height != h || mode.map.width != w) {
        throw std::invalid_argument(
            "PredictiveModel: mode resolution mismatch at scale " +
            std::to_string(k));
      }
      for (std::int32_t t : mode.map.tokens) {
        if (t < 0 || t >= codebook_.vocab_size()) {
          throw std::out_of_range("PredictiveModel: mode token out of range");
        }
      }
      if (!(mode.weight > 0.0)) {
        throw std::invalid_argument(
            "PredictiveModel: mode weights must be positive");
      }
      total += mode.weight;
    }
    for (auto& mode : modes) {
      mode.weight /= total;
    }
  }
}

const std::vector<Mode>& PredictiveModel::modes_at(int scale) const {
  if (scale < 0 || scale >= schedule_.num_scales()) {
    throw std::invalid_argument("PredictiveModel: scale out of schedule");
  }
  return modes_[static_cast<std::size_t>(scale)];
}

namespace {

// Hash of the coarse prefix (at most the first two chosen maps). Coarse
// choices deterministically steer every later scale's mixture, which gives
// them the dominant causal weight over the final output.
std::uint64_t coarse_prefix_hash(std::span<const TokenMap> prefix) {
  std::uint64_t h = 0x707265666978ull;
  const std::size_t take = std::min<std::size_t>(prefix.size(), 2);
  for (std::size_t i = 0; i < take; ++i) {
    h = mix64(h ^ static_cast<std::uint64_t>(prefix[i].height));
    h = mix64(h ^ static_cast<std::uint64_t>(prefix[i].width));
    for (std::int32_t t : prefix[i].tokens) {
      h = mix64(h ^ (static_cast<std::uint64_t>(t) + 1));
    }
  }
  return h;
}

}  // namespace

std::vector<double> PredictiveModel::conditional_weights(
    int scale, std::span<const TokenMap> prefix) const {
  const auto& modes = modes_at(scale);
  const int m = static_cast<int>(modes.size());

  // Temperature sharpening in the log domain; robust for T -> 0.
  std::vector<double> logw(m);
  for (int i = 0; i < m; ++i) {
    logw[i] = std::log(modes[i].weight) / temperature_;
  }
  if (!prefix.empty() && prefix_contrast_ != 1.0 && m > 1) {
    const int favored =
        static_cast<int>(coarse_prefix_hash(prefix) % static_cast<std::uint64_t>(m));
    logw[favored] += std::log(prefix_contrast_);
  }

  const double max_log = *std::max_element(logw.begin(), logw.end());
  std::vector<double> weights(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    weights[i] = std::exp(logw[i] - max_log);
    total += weights[i];
  }
  for (double& w : weights) {
    w /= total;
  }
  return weights;
}

TokenMap sample_scale(const PredictiveModel& model,
                      std::span<const TokenMap> prefix, int scale,
                      RngStream& rng) {
  const ScaleSchedule& schedule = model.schedule();
  if (scale < 0 || scale >= schedule.num_scales()) {
    throw std::invalid_argument("sample_scale: scale out of schedule");
  }
  if (static_cast<int>(prefix.size()) != scale) {
    throw std::invalid_argument(
        "sample_scale: prefix must hold exactly the maps for scales < k");
  }

  const auto [h, w] = schedule.resolutions[scale];
  const double gate = rng.next_double();
  if (gate < model.smoothing()) {
    TokenMap map;
    map.scale_index = scale;
    map.height = h;
    map.width = w;
    map.tokens.resize(static_cast<std::size_t>(h) * w);
    const auto vocab = static_cast<std::uint64_t>(model.codebook().vocab_size());
    for (auto& t : map.tokens) {
      t = static_cast<std::int32_t>(rng.next_below(vocab));
    }
    return map;
  }

  const std::vector<double> weights = model.conditional_weights(scale, prefix);
  const double u = rng.next_double();
  double cumulative = 0.0;
  std::size_t choice = weights.size() - 1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (u < cumulative) {
      choice = i;
      break;
    }
  }
  TokenMap map = model.modes_at(scale)[choice].map;
  map.scale_index = scale;
  return map;
}

FeatureGrid decode(const Codebook& codebook, std::span<const TokenMap> maps,
                   const ScaleSchedule& schedule) {
  schedule.validate();
  if (static_cast<int>(maps.size()) != schedule.num_scales()) {
    throw std::invalid_argument("decode: one map per scale required");
  }

  const auto [out_h, out_w] = schedule.resolutions.back();
  const int channels = codebook.dim();
  FeatureGrid grid;
  grid.height = out_h;
  grid.width = out_w;
  grid.channels = channels;
  grid.data.assign(
      static_cast<std::size_t>(out_h) * out_w * channels, 0.0);

  for (int k = 0; k < schedule.num_scales(); ++k) {
    const auto [h, w] = schedule.resolutions[k];
    const TokenMap& map = maps[k];
    if (map.height != h || map.width != w) {
      throw std::invalid_argument("decode: map resolution mismatch at scale " +
                                  std::to_string(k));
    }
    for (int r = 0; r < out_h; ++r) {
      const int sr = r * h / out_h;
      for (int c = 0; c < out_w; ++c) {
        const int sc = c * w / out_w;
        const auto entry = codebook.entry(map.tokens[sr * w + sc]);
        double* cell =
            grid.data.data() + (static_cast<std::size_t>(r) * out_w + c) * channels;
        for (int ch = 0; ch < channels; ++ch) {
          cell[ch] += entry[ch];
        }
      }
    }
  }
  return grid;
}

std::vector<double> pool_grid(const FeatureGrid& grid, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1 || out_h > grid.height || out_w > grid.width) {
    throw std::invalid_argument("pool_grid: bad output resolution");
  }
  const int channels = grid.channels;
  std::vector<double> pooled(
      static_cast<std::size_t>(out_h) * out_w * channels, 0.0);
  std::vector<int> counts(static_cast<std::size_t>(out_h) * out_w, 0);
  for (int r = 0; r < grid.height; ++r) {
    const int br = r * out_h / grid.height;
    for (int c = 0; c < grid.width; ++c) {
      const int bc = c * out_w / grid.width;
      const std::size_t cell = static_cast<std::size_t>(br) * out_w + bc;
      ++counts[cell];
      for (int ch = 0; ch < channels; ++ch) {
        pooled[cell * channels + ch] += grid.at(r, c, ch);
      }
    }
  }
  for (std::size_t cell = 0; cell < counts.size(); ++cell) {
    for (int ch = 0; ch < channels; ++ch) {
      pooled[cell * channels + ch] /= counts[cell];
    }
  }
  return pooled;
}

namespace {

// One full chain where the stream for each scale comes from `stream_for`.
std::vector<TokenMap> plain_chain(
    const PredictiveModel& model,
    const std::function<RngStream(int)>& stream_for) {
  const int num_scales = model.schedule().num_scales();
  std::vector<TokenMap> chain;
  chain.reserve(num_scales);
  for (int k = 0; k < num_scales; ++k) {
    RngStream rng = stream_for(k);
    chain.push_back(sample_scale(model, chain, k, rng));
  }
  return chain;
}

}  // namespace

GenerationRun generate(const PredictiveModel& model,
                       const GenerateOptions& options,
                       std::uint64_t master_seed, std::uint64_t trial) {
  options.sampling.validate();
  const int num_scales = model.schedule().num_scales();
  const int target = options.target_scale;
  if (target < 0 || target >= num_scales) {
    throw std::invalid_argument("generate: target_scale out of schedule");
  }

  GenerationRun run;
  run.master_seed = master_seed;
  run.trial = trial;
  run.options = options;

  // Prefix up to the target scale.
  std::vector<TokenMap> prefix;
  prefix.reserve(num_scales);
  for (int k = 0; k < target; ++k) {
    RngStream rng = RngStream::derive(
        master_seed, {stream_channel::kScaleDraw, trial,
                      static_cast<std::uint64_t>(k)});
    prefix.push_back(sample_scale(model, prefix, k, rng));
  }

  // Candidate pool at the target scale, drawn with replacement.
  run.candidates.scale = target;
  RngStream candidate_rng = RngStream::derive(
      master_seed, {stream_channel::kCandidates, trial,
                    static_cast<std::uint64_t>(target)});
  run.candidates.maps.reserve(options.sampling.num_candidates);
  for (int i = 0; i < options.sampling.num_candidates; ++i) {
    run.candidates.maps.push_back(
        sample_scale(model, prefix, target, candidate_rng));
  }
  run.candidates.features = embed_all(model.codebook(), run.candidates.maps);

  RngStream selection_rng = RngStream::derive(
      master_seed, {stream_channel::kSelection, trial,
                    static_cast<std::uint64_t>(target)});
  run.selection =
      run_strategy(run.candidates.features, options.sampling, selection_rng);

  std::vector<int> continuations;
  if (options.single_continuation) {
    continuations.push_back(weighted_pick(run.selection, selection_rng));
  } else {
    continuations = run.selection.selected;
  }

  run.traces.reserve(continuations.size());
  for (std::size_t rep = 0; rep < continuations.size(); ++rep) {
    GenerationTrace trace;
    trace.representative = static_cast<int>(rep);
    trace.candidate_index = continuations[rep];
    trace.chosen = prefix;
    trace.chosen.push_back(run.candidates.maps[continuations[rep]]);
    for (int k = target + 1; k < num_scales; ++k) {
      RngStream rng = RngStream::derive(
          master_seed, {stream_channel::kContinuation, trial,
                        static_cast<std::uint64_t>(rep),
                        static_cast<std::uint64_t>(k)});
      trace.chosen.push_back(sample_scale(model, trace.chosen, k, rng));
    }
    trace.decoded = decode(model.codebook(), trace.chosen, model.schedule());
    run.traces.push_back(std::move(trace));
  }
  return run;
}

GenerationTrace generate_plain(const PredictiveModel& model,
                               std::uint64_t master_seed,
                               std::uint64_t trial) {
  GenerationTrace trace;
  trace.chosen = plain_chain(model, [&](int scale) {
    return RngStream::derive(master_seed,
                             {stream_channel::kScaleDraw, trial,
                              static_cast<std::uint64_t>(scale)});
  });
  trace.decoded = decode(model.codebook(), trace.chosen, model.schedule());
  return trace;
}

PerturbationResult perturb_scale_experiment(const PredictiveModel& model,
                                            int scale,
                                            std::uint64_t base_seed,
                                            std::uint64_t alt_seed,
                                            int trials) {
  if (scale < 0 || scale >= model.schedule().num_scales()) {
    throw std::invalid_argument(
        "perturb_scale_experiment: scale out of schedule");
  }
  if (trials < 1) {
    throw std::invalid_argument("perturb_scale_experiment: trials must be >= 1");
  }

  PerturbationResult result;
  result.per_trial.reserve(trials);
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto trial = static_cast<std::uint64_t>(t);
    const auto base = plain_chain(model, [&](int k) {
      return RngStream::derive(base_seed,
                               {stream_channel::kScaleDraw, trial,
                                static_cast<std::uint64_t>(k)});
    });
    const auto perturbed = plain_chain(model, [&](int k) {
      const std::uint64_t seed = (k == scale) ? alt_seed : base_seed;
      return RngStream::derive(seed, {stream_channel::kScaleDraw, trial,
                                      static_cast<std::uint64_t>(k)});
    });
    const FeatureGrid a = decode(model.codebook(), base, model.schedule());
    const FeatureGrid b = decode(model.codebook(), perturbed, model.schedule());
    double sq = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const double diff = a.data[i] - b.data[i];
      sq += diff * diff;
    }
    const double divergence = std::sqrt(sq);
    result.per_trial.push_back(divergence);
    total += divergence;
  }
  result.mean_divergence = total / trials;
  return result;
}

}  // namespace varscale
