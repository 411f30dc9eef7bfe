#pragma once

#include <cstdint>
#include <random>

namespace lanedef {

/// Combines two 64-bit values into a well-mixed seed (splitmix64 finaliser).
/// Used to derive per-episode and per-stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so the bounded-integer,
/// uniform-real and normal draws are implemented here to keep sampled
/// trajectories identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  int uniform_int(int lo, int hi);

  /// Uniform double in [0, 1) with 53 bits of resolution.
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

  bool operator==(const Rng& other) const = default;

 private:
  std::mt19937_64 engine_;
};

}  // namespace lanedef
