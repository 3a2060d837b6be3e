#pragma once

// Counter-based random streams.
//
// A stream is fully described by (seed, gamma): the k-th output is
// mix64(seed + k * gamma). Streams are derived from (master_seed, task_id)
// by hashing, with a per-stream odd gamma, so distinct task ids give
// independent sequences and the value of a stream never depends on when or
// on which thread it is consumed.

#include <cstdint>
#include <limits>

namespace rwre {

[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

[[nodiscard]] constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x9E3779B97F4A7C15ULL));
}

class Rng {
 public:
  using result_type = std::uint64_t;

  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t key) : state_(mix64(key)), gamma_(make_gamma(key)) {}

  [[nodiscard]] static constexpr result_type min() noexcept { return 0; }
  [[nodiscard]] static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += gamma_;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Child stream keyed by this stream's identity and `id`; does not advance *this.
  [[nodiscard]] Rng split(std::uint64_t id) const noexcept {
    return Rng(hash_combine(hash_combine(state_, gamma_), id));
  }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  static constexpr std::uint64_t make_gamma(std::uint64_t key) noexcept {
    std::uint64_t g = mix64(key + 0xD1B54A32D192ED03ULL) | 1ULL;
    // Weak gammas (too few bit transitions) are patched as in SplittableRandom.
    const std::uint64_t n = static_cast<std::uint64_t>(__builtin_popcountll(g ^ (g >> 1)));
    if (n < 24) g ^= 0xAAAAAAAAAAAAAAAAULL;
    return g;
  }

  std::uint64_t state_;
  std::uint64_t gamma_;
};

/// Independent reproducible stream for task `task_id` of a run seeded by `master_seed`.
[[nodiscard]] inline Rng substream(std::uint64_t master_seed, std::uint64_t task_id) noexcept {
  return Rng(hash_combine(master_seed, task_id));
}

}  // namespace rwre
