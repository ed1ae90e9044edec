#pragma once

// Exact simulation of single-particle paths and parameter recovery from them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vjump/error.hpp"
#include "vjump/initial_condition.hpp"
#include "vjump/model.hpp"
#include "vjump/parallel.hpp"
#include "vjump/rng.hpp"

namespace vjump {

struct JumpEvent {
  double t = 0.0;
  double x = 0.0;
  int state = 0;

  friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

/// Piecewise-linear path: the start point followed by one event per state switch.
struct Trajectory {
  std::vector<JumpEvent> events;
  double horizon = 0.0;
  double final_position = 0.0;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

inline Trajectory simulate_trajectory(const ModelParams& theta, const InitialCondition& ic,
                                      double horizon, std::uint64_t seed,
                                      std::uint64_t stream_index = 0) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be > 0");
  Stream rng(seed, stream_index);
  const auto& a = ic.weights();

  Trajectory traj;
  traj.horizon = horizon;
  int state = rng.categorical(a[0], a[1], a[2]);
  double t = 0.0;
  double x = ic.sample_position(rng);
  traj.events.push_back({t, x, state});
  for (;;) {
    const double t_next = t + rng.exponential(theta.lambda[state]);
    if (t_next >= horizon) break;
    x = x + theta.v[state] * (t_next - t);
    t = t_next;
    const int u1 = (state + 1) % 3;
    const int u2 = (state + 2) % 3;
    state = rng.uniform() < theta.prob(state, u1) ? u1 : u2;
    traj.events.push_back({t, x, state});
  }
  traj.final_position = x + theta.v[state] * (horizon - t);
  return traj;
}

/// M independent trajectories; trajectory m uses stream (seed, m).
inline std::vector<Trajectory> simulate_ensemble(const ModelParams& theta,
                                                 const InitialCondition& ic, std::size_t count,
                                                 double horizon, std::uint64_t seed) {
  std::vector<Trajectory> out(count);
  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m)
      out[m] = simulate_trajectory(theta, ic, horizon, seed, m);
  });
  return out;
}

struct DwellSamples {
  std::array<std::vector<double>, 3> dwell;                // completed dwells per state
  std::array<std::array<std::int64_t, 3>, 3> switches{};  // N_su
  Vec3 censored_time{};                                    // time in the final, unfinished dwell
};

inline DwellSamples extract_dwell_samples(const Trajectory& traj) {
  if (traj.events.size() < 2)
    throw Error(ErrorCode::NoCompletedDwells, "trajectory has no state switch before the horizon");
  DwellSamples out;
  for (std::size_t k = 0; k + 1 < traj.events.size(); ++k) {
    const auto& e = traj.events[k];
    const auto& next = traj.events[k + 1];
    out.dwell[e.state].push_back(next.t - e.t);
    ++out.switches[e.state][next.state];
  }
  const auto& last = traj.events.back();
  out.censored_time[last.state] += traj.horizon - last.t;
  return out;
}

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct EnsembleEstimate {
  std::array<Estimate, 3> v;
  std::array<Estimate, 3> lambda;
  std::array<std::array<Estimate, 3>, 3> p;  // full jump-chain matrix
  std::array<Estimate, 3> a;
  std::array<std::int64_t, 3> completed_dwells{};
  std::size_t trajectories = 0;

  const Estimate& p12() const { return p[0][1]; }
  const Estimate& p21() const { return p[1][0]; }
  const Estimate& p31() const { return p[2][0]; }

  ModelParams params() const {
    return {{v[0].value, v[1].value, v[2].value},
            {lambda[0].value, lambda[1].value, lambda[2].value},
            p12().value,
            p21().value,
            p31().value};
  }

  Weights weights() const { return {a[0].value, a[1].value, a[2].value}; }

  /// Relabel so that state i has the velocity closest to reference[i].
  EnsembleEstimate aligned_to(const Vec3& reference) const {
    Permutation best{0, 1, 2};
    double best_cost = INFINITY;
    for (const auto& perm : all_permutations()) {
      double cost = 0.0;
      for (int i = 0; i < 3; ++i) cost += std::abs(v[perm[i]].value - reference[i]);
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    }
    EnsembleEstimate out = *this;
    for (int i = 0; i < 3; ++i) {
      out.v[i] = v[best[i]];
      out.lambda[i] = lambda[best[i]];
      out.a[i] = a[best[i]];
      out.completed_dwells[i] = completed_dwells[best[i]];
      for (int j = 0; j < 3; ++j) out.p[i][j] = p[best[i]][best[j]];
    }
    return out;
  }
};

namespace detail {

inline double segment_slope(const Trajectory& traj, std::size_t k) {
  const auto& e = traj.events[k];
  if (k + 1 < traj.events.size()) {
    const auto& next = traj.events[k + 1];
    return (next.x - e.x) / (next.t - e.t);
  }
  return (traj.final_position - e.x) / (traj.horizon - e.t);
}

inline bool same_slope(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Recovers all nine parameters and the initial weights from observed paths only
/// (event labels are ignored; states are read from segment slopes). States are
/// reported in descending velocity order.
inline EnsembleEstimate estimate_from_ensemble(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw Error(ErrorCode::InvalidArgument, "no trajectories");

  std::vector<double> slopes;
  for (const auto& traj : trajs)
    for (std::size_t k = 0; k < traj.events.size(); ++k) {
      const double s = detail::segment_slope(traj, k);
      if (std::none_of(slopes.begin(), slopes.end(),
                       [&](double c) { return detail::same_slope(c, s); }))
        slopes.push_back(s);
      if (slopes.size() > 3)
        throw Error(ErrorCode::InvalidArgument, "more than three distinct slopes observed");
    }
  if (slopes.size() < 3)
    throw Error(ErrorCode::IndistinguishableStates,
                "only " + std::to_string(slopes.size()) + " distinct slopes observed");
  std::sort(slopes.begin(), slopes.end(), std::greater<>());
  auto label_of = [&](double s) {
    for (int i = 0; i < 3; ++i)
      if (detail::same_slope(slopes[i], s)) return i;
    return -1;
  };

  std::array<double, 3> dwell_sum{};
  std::array<double, 3> slope_sum{};
  std::array<std::int64_t, 3> slope_count{};
  std::array<std::int64_t, 3> initial{};
  DwellSamples pooled;
  for (const auto& traj : trajs) {
    Trajectory observed = traj;
    for (std::size_t k = 0; k < traj.events.size(); ++k) {
      const double s = detail::segment_slope(traj, k);
      const int label = label_of(s);
      observed.events[k].state = label;
      slope_sum[label] += s;
      ++slope_count[label];
    }
    ++initial[observed.events.front().state];
    if (observed.events.size() < 2) {
      pooled.censored_time[observed.events.front().state] += traj.horizon;
      continue;
    }
    const auto samples = extract_dwell_samples(observed);
    for (int s = 0; s < 3; ++s) {
      for (double d : samples.dwell[s]) dwell_sum[s] += d;
      pooled.dwell[s].insert(pooled.dwell[s].end(), samples.dwell[s].begin(),
                             samples.dwell[s].end());
      pooled.censored_time[s] += samples.censored_time[s];
      for (int u = 0; u < 3; ++u) pooled.switches[s][u] += samples.switches[s][u];
    }
  }

  EnsembleEstimate est;
  est.trajectories = trajs.size();
  const double m = double(trajs.size());
  for (int s = 0; s < 3; ++s) {
    est.v[s] = {slope_sum[s] / double(slope_count[s]), 0.0};
    const auto k = std::int64_t(pooled.dwell[s].size());
    est.completed_dwells[s] = k;
    if (k == 0)
      throw Error(ErrorCode::NoCompletedDwells,
                  "no completed dwell in state " + std::to_string(s + 1));
    // Right-censored exponential MLE: events / total exposure.
    const double rate = double(k) / (dwell_sum[s] + pooled.censored_time[s]);
    est.lambda[s] = {rate, rate / std::sqrt(double(k))};
    const double leaving = double(pooled.switches[s][0] + pooled.switches[s][1] +
                                  pooled.switches[s][2]);
    for (int u = 0; u < 3; ++u) {
      const double p = u == s ? 0.0 : double(pooled.switches[s][u]) / leaving;
      est.p[s][u] = {p, std::sqrt(p * (1.0 - p) / leaving)};
    }
    const double a = double(initial[s]) / m;
    est.a[s] = {a, std::sqrt(a * (1.0 - a) / m)};
  }
  return est;
}

}  // namespace vjump
