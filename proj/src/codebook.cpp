#include "varscale/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "varscale/rng.hpp"

namespace varscale {

Codebook::Codebook(int vocab_size, int dim, std::vector<double> entries,
                   std::uint64_t seed)
    : vocab_size_(vocab_size), dim_(dim), seed_(seed),
      entries_(std::move(entries)) {
  if (vocab_size_ < 2) {
    throw std::invalid_argument("Codebook: vocab_size must be >= 2");
  }
  if (dim_ < 1) {
    throw std::invalid_argument("Codebook: dim must be >= 1");
  }
  if (entries_.size() !=
      static_cast<std::size_t>(vocab_size_) * static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("Codebook: entries size != vocab_size * dim");
  }
  for (double v : entries_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("Codebook: entries must be finite");
    }
  }
}

std::span<const double> Codebook::entry(int index) const {
  if (index < 0 || index >= vocab_size_) {
    throw std::out_of_range("Codebook::entry: index " + std::to_string(index) +
                            " out of range [0, " + std::to_string(vocab_size_) +
                            ")");
  }
  return {entries_.data() + static_cast<std::size_t>(index) * dim_,
          static_cast<std::size_t>(dim_)};
}

Codebook make_synthetic_codebook(int vocab_size, int dim, std::uint64_t seed) {
  if (vocab_size < 2) {
    throw std::invalid_argument(
        "make_synthetic_codebook: vocab_size must be >= 2");
  }
  if (dim < 1) {
    throw std::invalid_argument("make_synthetic_codebook: dim must be >= 1");
  }

  RngStream rng = RngStream::derive(seed, {0x636f6465626f6full});
  std::vector<double> entries(static_cast<std::size_t>(vocab_size) * dim);

  auto equal_entry = [&](int a, int b) {
    for (int c = 0; c < dim; ++c) {
      if (entries[static_cast<std::size_t>(a) * dim + c] !=
          entries[static_cast<std::size_t>(b) * dim + c]) {
        return false;
      }
    }
    return true;
  };

  for (int i = 0; i < vocab_size; ++i) {
    for (;;) {
      for (int c = 0; c < dim; ++c) {
        entries[static_cast<std::size_t>(i) * dim + c] = rng.next_normal();
      }
      bool collides = false;
      for (int j = 0; j < i && !collides; ++j) {
        collides = equal_entry(i, j);
      }
      if (!collides) {
        break;
      }
    }
  }
  return Codebook(vocab_size, dim, std::move(entries), seed);
}

void TokenMap::validate() const {
  if (scale_index < 0) {
    throw std::invalid_argument("TokenMap: scale_index must be >= 0");
  }
  if (height < 1 || width < 1) {
    throw std::invalid_argument("TokenMap: height and width must be >= 1");
  }
  if (tokens.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("TokenMap: tokens size != height * width");
  }
}

std::vector<double> embed(const Codebook& codebook, const TokenMap& map) {
  map.validate();
  const int dim = codebook.dim();
  std::vector<double> out(static_cast<std::size_t>(map.num_tokens()) * dim);
  for (std::size_t p = 0; p < map.tokens.size(); ++p) {
    const auto e = codebook.entry(map.tokens[p]);  // throws on bad index
    std::copy(e.begin(), e.end(), out.begin() + p * dim);
  }
  return out;
}

FeatureMatrix embed_all(const Codebook& codebook,
                        std::span<const TokenMap> maps) {
  if (maps.empty()) {
    return {};
  }
  const int d = maps.front().num_tokens() * codebook.dim();
  FeatureMatrix features(static_cast<int>(maps.size()), d);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const std::vector<double> v = embed(codebook, maps[i]);
    if (static_cast<int>(v.size()) != d) {
      throw std::invalid_argument("embed_all: maps of mixed dimension");
    }
    std::copy(v.begin(), v.end(), features.row(static_cast<int>(i)).begin());
  }
  return features;
}

}  // namespace varscale
