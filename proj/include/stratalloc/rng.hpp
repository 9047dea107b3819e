#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stratalloc {

// Project-wide random source: std::mt19937_64 (bit-exact across standard
// libraries) with hand-written variate transforms, since the std
// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  // Standard normal (Marsaglia polar method).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

// Sub-seed rule: splitmix64(splitmix64(seed ^ fnv1a(stage)) ^ fnv1a(id)).
// Streams are keyed by identifiers, never by execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::string_view id) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::uint64_t index) noexcept;

}  // namespace stratalloc
