#pragma once

#include <random>

#include "vjump/vjump.hpp"

namespace vjump::testing {

inline ModelParams theta_A() { return {{20, -15, 0}, {1, 0.5, 0.3}, 0.2, 0.3, 0.7}; }
inline ModelParams theta_C() { return {{20, -15, 0}, {1, 0.5, 0.3}, 0.0, 61.0 / 268, 108.0 / 175}; }
inline Weights w_A() { return {237.0 / 1441, 24.0 / 131, 940.0 / 1441}; }
inline Weights w_C() { return {1479.0 / 10087, 1608.0 / 10087, 1000.0 / 1441}; }
inline InitialCondition gaussian_ic(const Weights& a) { return {a, GaussianProfile{5.0}, 40.0}; }

/// Random irreducible model with pairwise distinct velocities.
class RandomModels {
 public:
  explicit RandomModels(std::uint64_t seed) : gen_(seed) {}

  ModelParams next() {
    std::uniform_real_distribution<double> vel(-30.0, 30.0), rate(0.1, 3.0), prob(0.02, 0.98);
    ModelParams th;
    do {
      th.v = {vel(gen_), vel(gen_), vel(gen_)};
    } while (std::abs(th.v[0] - th.v[1]) < 0.5 || std::abs(th.v[1] - th.v[2]) < 0.5 ||
             std::abs(th.v[0] - th.v[2]) < 0.5);
    th.lambda = {rate(gen_), rate(gen_), rate(gen_)};
    th.p12 = prob(gen_);
    th.p21 = prob(gen_);
    th.p31 = prob(gen_);
    return th;
  }

  Weights weights() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double a = u(gen_), b = u(gen_), c = u(gen_);
    const double s = a + b + c;
    a /= s;
    b /= s;
    return {a, b, 1.0 - a - b};
  }

  Permutation permutation() {
    const auto all = all_permutations();
    return all[std::uniform_int_distribution<int>(0, 5)(gen_)];
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace vjump::testing
