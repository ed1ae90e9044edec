#pragma once

// Reproducible random streams. Each (master seed, stream index) pair maps to an
// independent mt19937_64 state, so ensembles do not depend on execution order.
// Variate transforms are written out here so output is identical across
// standard-library implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace vjump {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t index)
      : engine_(splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL))) {}

  /// Uniform on (0, 1).
  double uniform() {
    for (;;) {
      const double u = double(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Index drawn from a discrete distribution given by three weights.
  int categorical(double w0, double w1, double w2) {
    const double u = uniform() * (w0 + w1 + w2);
    if (u < w0) return 0;
    if (u < w0 + w1) return 1;
    if (w2 > 0.0) return 2;
    return w1 > 0.0 ? 1 : 0;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vjump
