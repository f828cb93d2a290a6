#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace eivgmm {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to turn structured keys into well-mixed seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent generator for the stream identified by `keys`, e.g.
/// (seed, replicate) or (seed, setting, rep, purpose). Streams depend only
/// on the keys, never on scheduling, so parallel runs stay reproducible.
inline Rng make_stream(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x2545F4914F6CDD1DULL;
  for (const std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(splitmix64(h)),
                    static_cast<std::uint32_t>(splitmix64(h) >> 32)};
  return Rng(seq);
}

// Stream purposes, kept distinct so adding a consumer never shifts another.
enum class StreamTag : std::uint64_t {
  bootstrap = 1,
  covariates = 2,
  error_cov = 3,
  meas_error = 4,
  outcome_error = 5,
  mcd = 6,
};

inline std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

}  // namespace eivgmm
