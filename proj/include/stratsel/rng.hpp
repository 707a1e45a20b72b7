#pragma once

#include <cmath>
#include <cstdint>

// Counter-friendly RNG built on splitmix64. Simulation code derives one
// substream per (seed, stream, step, agent) so that records are reproducible
// regardless of evaluation order.

namespace stratsel {

// splitmix64 finalizer: full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  return mix64(state);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : state_(mix64(seed + 0x9E3779B97F4A7C15ull)) {}

  // Substream keys must pass through the full finalizer at every step;
  // keeping only the additive state leaves counter structure across agents,
  // which shows up as stratified (non-iid-like) ensembles.
  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
    std::uint64_t s = mix64(seed + 0x9E3779B97F4A7C15ull);
    s = mix64(s ^ (a + 0xA0761D6478BD642Full));
    s = mix64(s ^ (b + 0xE7037ED1A0B428DBull));
    s = mix64(s ^ (c + 0x8EBC6AF09C88C6E3ull));
    return Rng(s);
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via Box-Muller; the spare is kept per-instance.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  int next_rademacher() { return (next_u64() >> 63) ? 1 : -1; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stratsel
