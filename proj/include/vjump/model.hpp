#pragma once

// Parameters of the three-state velocity-jump process, the generator of its
// state chain and the stationary distribution. States are indexed 0..2 in code
// and named 1..3 in reports.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "vjump/error.hpp"

namespace vjump {

using Vec3 = std::array<double, 3>;
using Weights = Vec3;
using Permutation = std::array<int, 3>;

struct ModelParams {
  Vec3 v{};       // velocities
  Vec3 lambda{};  // total switching rate out of each state
  double p12 = 0.0;
  double p21 = 0.0;
  double p31 = 0.0;

  /// Full jump-chain probability P[s][u]; zero diagonal, rows sum to one.
  double prob(int s, int u) const {
    switch (s * 3 + u) {
      case 1: return p12;
      case 2: return 1.0 - p12;
      case 3: return p21;
      case 5: return 1.0 - p21;
      case 6: return p31;
      case 7: return 1.0 - p31;
      default: return 0.0;
    }
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Generator convention: q[s][u] = lambda_s * p_su for u != s, q[s][s] = -lambda_s.
struct TransitionMatrix {
  Eigen::Matrix3d q;
};

struct StationaryDistribution {
  Weights w{};
};

struct VelocityDegeneracy {
  enum class Kind { AllDistinct, TwoEqual, AllEqual };
  Kind kind = Kind::AllDistinct;
  int distinct_state = -1;  // set only for TwoEqual

  friend bool operator==(const VelocityDegeneracy&, const VelocityDegeneracy&) = default;
};

inline std::string to_string(const VelocityDegeneracy& d) {
  switch (d.kind) {
    case VelocityDegeneracy::Kind::AllDistinct: return "AllDistinct";
    case VelocityDegeneracy::Kind::AllEqual: return "AllEqual";
    case VelocityDegeneracy::Kind::TwoEqual:
      return "TwoEqual(distinct=state " + std::to_string(d.distinct_state + 1) + ")";
  }
  return "Unknown";
}

namespace detail {

inline bool strongly_connected(const std::array<std::array<bool, 3>, 3>& edge) {
  // Floyd-Warshall closure on three nodes.
  auto reach = edge;
  for (int s = 0; s < 3; ++s) reach[s][s] = true;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) reach[i][j] = reach[i][j] || (reach[i][k] && reach[k][j]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!reach[i][j]) return false;
  return true;
}

}  // namespace detail

inline ModelParams validate_params(const ModelParams& theta) {
  for (double v : theta.v)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "velocity is not finite");
  for (int s = 0; s < 3; ++s) {
    const double l = theta.lambda[s];
    if (!(l > 0.0) || !std::isfinite(l))
      throw Error(ErrorCode::NonPositiveRate,
                  "lambda" + std::to_string(s + 1) + " = " + std::to_string(l) + " must be > 0");
  }
  const std::array<std::pair<const char*, double>, 3> probs{
      {{"p12", theta.p12}, {"p21", theta.p21}, {"p31", theta.p31}}};
  for (const auto& [name, p] : probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorCode::ProbabilityOutOfRange,
                  std::string(name) + " = " + std::to_string(p) + " outside [0,1]");

  std::array<std::array<bool, 3>, 3> edge{};
  for (int s = 0; s < 3; ++s)
    for (int u = 0; u < 3; ++u) edge[s][u] = s != u && theta.lambda[s] * theta.prob(s, u) > 0.0;
  if (!detail::strongly_connected(edge))
    throw Error(ErrorCode::ReducibleChain, "jump chain does not connect all three states");
  return theta;
}

inline TransitionMatrix build_transition_matrix(const ModelParams& theta) {
  TransitionMatrix tm;
  for (int s = 0; s < 3; ++s) {
    for (int u = 0; u < 3; ++u)
      tm.q(s, u) = s == u ? -theta.lambda[s] : theta.lambda[s] * theta.prob(s, u);
  }
  return tm;
}

/// w = phi / sum(phi), phi_s = lambda_u lambda_z (1 - p_uz p_zu) over the two other states.
inline StationaryDistribution stationary_distribution(const ModelParams& theta) {
  Vec3 phi{};
  for (int s = 0; s < 3; ++s) {
    const int u = (s + 1) % 3;
    const int z = (s + 2) % 3;
    phi[s] = theta.lambda[u] * theta.lambda[z] * (1.0 - theta.prob(u, z) * theta.prob(z, u));
  }
  const double total = phi[0] + phi[1] + phi[2];
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateKernel, "phi sums to zero");
  return {{phi[0] / total, phi[1] / total, phi[2] / total}};
}

inline VelocityDegeneracy classify_velocity_degeneracy(const ModelParams& theta, double tol = 0.0) {
  if (tol < 0.0) throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
  const auto& v = theta.v;
  const bool e01 = std::abs(v[0] - v[1]) <= tol;
  const bool e02 = std::abs(v[0] - v[2]) <= tol;
  const bool e12 = std::abs(v[1] - v[2]) <= tol;
  const int n_equal = int(e01) + int(e02) + int(e12);
  if (n_equal == 3) return {VelocityDegeneracy::Kind::AllEqual, -1};
  if (n_equal == 0) return {VelocityDegeneracy::Kind::AllDistinct, -1};
  if (n_equal == 2)
    throw Error(ErrorCode::AmbiguousDegeneracy,
                "tolerance groups velocities non-transitively");
  const int distinct = e12 ? 0 : (e02 ? 1 : 2);
  return {VelocityDegeneracy::Kind::TwoEqual, distinct};
}

/// Relabel states: new state i is old state perm[i].
inline ModelParams permute_states(const ModelParams& theta, const Permutation& perm) {
  ModelParams out;
  for (int i = 0; i < 3; ++i) {
    out.v[i] = theta.v[perm[i]];
    out.lambda[i] = theta.lambda[perm[i]];
  }
  out.p12 = theta.prob(perm[0], perm[1]);
  out.p21 = theta.prob(perm[1], perm[0]);
  out.p31 = theta.prob(perm[2], perm[0]);
  return out;
}

inline Weights permute_weights(const Weights& a, const Permutation& perm) {
  return {a[perm[0]], a[perm[1]], a[perm[2]]};
}

inline constexpr std::array<Permutation, 6> all_permutations() {
  return {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
}

inline void validate_weights(const Weights& a) {
  double sum = 0.0;
  for (double x : a) {
    if (!(x >= 0.0 && x <= 1.0))
      throw Error(ErrorCode::InvalidInitialCondition, "weight outside [0,1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidInitialCondition, "weights must sum to 1");
}

/// Q^T a, the first-order change of the state weights.
inline Vec3 weight_drift(const ModelParams& theta, const Weights& a) {
  Vec3 out{};
  for (int s = 0; s < 3; ++s) {
    double acc = -theta.lambda[s] * a[s];
    for (int u = 0; u < 3; ++u)
      if (u != s) acc += theta.lambda[u] * theta.prob(u, s) * a[u];
    out[s] = acc;
  }
  return out;
}

}  // namespace vjump
