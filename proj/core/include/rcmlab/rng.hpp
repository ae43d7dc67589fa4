#pragma once

// Counter-based, splittable randomness.
//
// Every random quantity in the library is a pure function of a 64-bit key and
// a counter. Keys are derived hierarchically (master seed -> subcommand tag ->
// replicate -> stream tag), so any replicate or any single edge mark can be
// regenerated in isolation and in any order.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace rcmlab {

/// SplitMix64 finalizer; a bijective avalanche mix on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child key of `parent` for the child label `label`.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t label) noexcept {
  return mix64(mix64(parent ^ 0x6a09e667f3bcc909ULL) + (label + 1) * 0x9e3779b97f4a7c15ULL);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of a named stream family, e.g. stream_seed(master, "theta").
constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view tag) noexcept {
  return derive_key(master, fnv1a64(tag));
}

/// Root key of one replicate (the "task seed" recorded in run manifests).
constexpr std::uint64_t task_seed(std::uint64_t seed, std::uint64_t replicate) noexcept {
  return derive_key(seed, replicate);
}

/// Maps 64 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based generator. Satisfies UniformRandomBitGenerator so it can feed
/// std distributions, but library code only uses `uniform()` so that streams
/// are identical across standard-library implementations.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  constexpr double uniform() noexcept { return to_unit((*this)()); }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Poisson variate by sequential CDF inversion of a single uniform. Linear in
/// the mean, which is only ever small here (chunk means are 1).
inline std::uint32_t poisson_by_inversion(double mean, double u) noexcept {
  double p = std::exp(-mean);
  double cdf = p;
  std::uint32_t k = 0;
  while (u >= cdf && p > 0.0) {
    ++k;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

/// Independent sub-streams of one replicate.
struct ReplicateStreams {
  std::uint64_t root;
  std::uint64_t points;
  std::uint64_t edges;
  std::uint64_t palm;

  constexpr ReplicateStreams(std::uint64_t seed, std::uint64_t replicate) noexcept
      : root(task_seed(seed, replicate)),
        points(derive_key(root, 1)),
        edges(derive_key(root, 2)),
        palm(derive_key(root, 3)) {}
};

}  // namespace rcmlab
