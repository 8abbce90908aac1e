#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "varscale/feature_matrix.hpp"

namespace varscale {

/// Discrete vocabulary of embedding vectors. Immutable after construction;
/// safe to share across threads.
class Codebook {
 public:
  /// `entries` is row-major, vocab_size * dim values, all finite.
  Codebook(int vocab_size, int dim, std::vector<double> entries,
           std::uint64_t seed = 0);

  int vocab_size() const { return vocab_size_; }
  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  /// Embedding vector of one vocabulary entry (dim values).
  std::span<const double> entry(int index) const;

  const std::vector<double>& entries() const { return entries_; }

 private:
  int vocab_size_;
  int dim_;
  std::uint64_t seed_;
  std::vector<double> entries_;
};

/// Codebook with standard-normal entries, deterministic in `seed`.
/// Entries are guaranteed pairwise distinct (colliding draws are retried).
Codebook make_synthetic_codebook(int vocab_size, int dim, std::uint64_t seed);

/// Grid of codebook indices at one scale; the unit the generator predicts.
struct TokenMap {
  int scale_index = 0;
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> tokens;  // row-major, height * width entries

  int num_tokens() const { return height * width; }

  /// Shape consistency; token range is checked against a codebook at use.
  void validate() const;

  bool operator==(const TokenMap&) const = default;
};

/// Row-major concatenation of the codebook entries of every token.
/// Result dimension is height * width * codebook.dim().
std::vector<double> embed(const Codebook& codebook, const TokenMap& map);

/// Embeds a batch of token maps, one row per map.
FeatureMatrix embed_all(const Codebook& codebook,
                        std::span<const TokenMap> maps);

}  // namespace varscale
