#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace varscale {

/// Deterministic random stream (xoshiro256++, seeded via splitmix64).
///
/// Every unit of work that needs randomness owns its own stream, derived
/// from a master seed plus a path of integer ids. Substituting one derived
/// stream never disturbs the draws of any sibling stream, and results are
/// identical regardless of how work is scheduled across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Stream for (master, id0, id1, ...). Same inputs, same stream.
  static RngStream derive(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double next_double();

  /// Uniform in [0, bound), unbiased (rejection). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double next_normal();

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

/// splitmix64 finalizer; also used for hashing small integer tuples.
std::uint64_t mix64(std::uint64_t x);

}  // namespace varscale
