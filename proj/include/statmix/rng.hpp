#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace statmix {

// Purpose tag for per-batch derived streams. The numeric values are part of
// the seeding contract: changing them reshuffles every downstream result.
enum class StreamPurpose : std::uint64_t {
  kGate = 0,
  kTarget = 1,
  kCrop = 2,
  kFlip = 3,
  kShuffle = 4,
  kInit = 5,
};

namespace detail {

// splitmix64 finalizer (full-avalanche 64-bit mixer).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kSeedSalt = 0x853C49E6748FEA9Bull;
constexpr std::uint64_t kLabelSalt = 0x2545F4914F6CDD1Dull;

}  // namespace detail

// Counter-based splitmix64 stream. Cheap to construct, no shared state, and
// bit-identical across platforms (no std::*_distribution anywhere).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    state_ += detail::kGamma;
    return detail::mix64(state_);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), unbiased via threshold rejection.
  std::uint64_t next_below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  // Uniform in [lo, hi], symmetric around (lo+hi)/2 for lo = -hi.
  double next_double_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

// Keyed derivation: (global_seed, labels...) -> independent stream. Tuples of
// different lengths are domain-separated by folding the length into the state,
// so (r) can never collide with (r, 0).
inline RandomStream derive_stream(std::uint64_t global_seed, std::span<const std::uint64_t> labels) {
  std::uint64_t h = detail::mix64(global_seed ^ detail::kSeedSalt);
  for (const std::uint64_t label : labels) {
    h = detail::mix64((h + detail::kGamma) ^ detail::mix64(label + detail::kLabelSalt));
  }
  h = detail::mix64(h + detail::kGamma * (static_cast<std::uint64_t>(labels.size()) + 1));
  return RandomStream(h);
}

inline RandomStream derive_stream(std::uint64_t global_seed,
                                  std::initializer_list<std::uint64_t> labels) {
  return derive_stream(global_seed, std::span<const std::uint64_t>(labels.begin(), labels.size()));
}

}  // namespace statmix
