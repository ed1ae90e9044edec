#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace vjump;
using namespace vjump::testing;

TEST(Simulate, SameSeedGivesIdenticalEvents) {
  const auto ic = gaussian_ic(w_A());
  EXPECT_EQ(simulate_trajectory(theta_A(), ic, 200.0, 42, 3),
            simulate_trajectory(theta_A(), ic, 200.0, 42, 3));
  EXPECT_FALSE(simulate_trajectory(theta_A(), ic, 200.0, 42, 3) ==
               simulate_trajectory(theta_A(), ic, 200.0, 43, 3));
}

TEST(Simulate, EventInvariants) {
  const auto th = theta_A();
  const auto traj = simulate_trajectory(th, gaussian_ic(w_A()), 500.0, 5);
  ASSERT_GT(traj.events.size(), 10u);
  EXPECT_EQ(traj.events.front().t, 0.0);
  for (std::size_t k = 0; k + 1 < traj.events.size(); ++k) {
    const auto& e = traj.events[k];
    const auto& n = traj.events[k + 1];
    EXPECT_LT(e.t, n.t);
    EXPECT_NE(e.state, n.state);
    EXPECT_EQ(n.x, e.x + th.v[e.state] * (n.t - e.t));
  }
  EXPECT_LT(traj.events.back().t, traj.horizon);
  const auto& last = traj.events.back();
  EXPECT_EQ(traj.final_position, last.x + th.v[last.state] * (traj.horizon - last.t));
}

TEST(Simulate, AllEqualVelocitiesMoveRigidly) {
  ModelParams th = theta_A();
  th.v = {3.0, 3.0, 3.0};
  const auto traj = simulate_trajectory(th, gaussian_ic(w_A()), 100.0, 9);
  const double expected = traj.events.front().x + 3.0 * 100.0;
  EXPECT_NEAR(traj.final_position, expected, 1e-12 * std::abs(expected) + 1e-12);
}

TEST(Simulate, MeanDwellInStateOneWithinClt) {
  const auto traj = simulate_trajectory(theta_A(), gaussian_ic(w_A()), 1e4, 21);
  const auto d = extract_dwell_samples(traj);
  const auto& s1 = d.dwell[0];
  ASSERT_GT(s1.size(), 500u);
  double mean = 0.0;
  for (double x : s1) mean += x;
  mean /= double(s1.size());
  EXPECT_NEAR(mean, 1.0, 3.0 / std::sqrt(double(s1.size())));
}

TEST(Dwell, HandBuiltTrajectory) {
  Trajectory t;
  t.events = {{0.0, 0.0, 0}, {2.0, 1.0, 2}, {5.0, 1.0, 1}};
  t.horizon = 6.0;
  const auto d = extract_dwell_samples(t);
  EXPECT_EQ(d.dwell[0], std::vector<double>{2.0});
  EXPECT_EQ(d.dwell[2], std::vector<double>{3.0});
  EXPECT_TRUE(d.dwell[1].empty());
  EXPECT_EQ(d.switches[0][2], 1);
  EXPECT_EQ(d.switches[2][1], 1);
  EXPECT_DOUBLE_EQ(d.censored_time[1], 1.0);
}

TEST(Dwell, NoJumpMeansNoCompletedDwell) {
  Trajectory t;
  t.events = {{0.0, 0.0, 0}};
  t.horizon = 1.0;
  try {
    extract_dwell_samples(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoCompletedDwells);
  }
}

TEST(Dwell, SwitchCountsMatchDwellCounts) {
  const auto d = extract_dwell_samples(simulate_trajectory(theta_A(), gaussian_ic(w_A()), 2000.0, 8));
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(d.switches[s][s], 0);
    EXPECT_EQ(d.switches[s][0] + d.switches[s][1] + d.switches[s][2], std::int64_t(d.dwell[s].size()));
    for (double x : d.dwell[s]) EXPECT_GT(x, 0.0);
  }
}

TEST(Dwell, SwitchFractionConvergesToP12) {
  const auto d = extract_dwell_samples(simulate_trajectory(theta_A(), gaussian_ic(w_A()), 2e4, 31));
  const double n = double(d.switches[0][1] + d.switches[0][2]);
  const double p = double(d.switches[0][1]) / n;
  EXPECT_NEAR(p, 0.2, 3.0 * std::sqrt(0.2 * 0.8 / n));
}

// Kolmogorov-Smirnov against 1 - exp(-lambda t); 1.628 / sqrt(n) is the 1% critical value.
TEST(Dwell, KolmogorovSmirnovPerState) {
  const auto th = theta_A();
  const auto trajs = simulate_ensemble(th, gaussian_ic(w_A()), 16000, 150.0, 77);
  std::array<std::vector<double>, 3> pooled;
  // Completed dwells are biased short near the horizon; only dwells starting
  // before t = 75 are pooled, where P(censored) < e^-22.
  for (const auto& t : trajs) {
    for (std::size_t k = 0; k + 1 < t.events.size() && t.events[k].t < 75.0; ++k)
      pooled[t.events[k].state].push_back(t.events[k + 1].t - t.events[k].t);
  }
  for (int s = 0; s < 3; ++s) {
    auto& x = pooled[s];
    if (x.size() > 100000) x.resize(100000);
    ASSERT_EQ(x.size(), 100000u) << "state " << s;
    std::sort(x.begin(), x.end());
    const double n = double(x.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double cdf = -std::expm1(-th.lambda[s] * x[i]);
      dmax = std::max({dmax, std::abs(double(i + 1) / n - cdf), std::abs(cdf - double(i) / n)});
    }
    EXPECT_LT(dmax, 1.628 / std::sqrt(n)) << "state " << s;
  }
}

TEST(Ensemble, OccupancyApproachesStationary) {
  const auto th = theta_A();
  const Weights start{1.0, 0.0, 0.0};
  const auto trajs = simulate_ensemble(th, gaussian_ic(start), 20000, 40.0, 5);
  std::array<double, 3> count{};
  for (const auto& t : trajs) count[t.events.back().state] += 1.0;
  const double m = double(trajs.size());
  for (int s = 0; s < 3; ++s) {
    const double w = w_A()[s];
    EXPECT_NEAR(count[s] / m, w, 3.0 * std::sqrt(w * (1.0 - w) / m)) << "state " << s;
  }
}

TEST(Ensemble, ResultIndependentOfThreadCount) {
  const auto ic = gaussian_ic(w_A());
  const auto a = simulate_ensemble(theta_A(), ic, 64, 20.0, 3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], simulate_trajectory(theta_A(), ic, 20.0, 3, i));
}

TEST(Estimate, SharedVelocityIsIndistinguishable) {
  ModelParams th = theta_A();
  th.v = {20.0, -15.0, -15.0};
  const auto trajs = simulate_ensemble(th, gaussian_ic(w_A()), 200, 50.0, 1);
  try {
    estimate_from_ensemble(trajs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndistinguishableStates);
  }
}

TEST(Estimate, StatesReportedInDescendingVelocity) {
  const auto est = estimate_from_ensemble(simulate_ensemble(theta_A(), gaussian_ic(w_A()), 500, 50.0, 4));
  EXPECT_NEAR(est.v[0].value, 20.0, 1e-9);
  EXPECT_NEAR(est.v[1].value, 0.0, 1e-9);
  EXPECT_NEAR(est.v[2].value, -15.0, 1e-9);
  const auto aligned = est.aligned_to(theta_A().v);
  EXPECT_NEAR(aligned.v[1].value, -15.0, 1e-9);
  EXPECT_DOUBLE_EQ(aligned.lambda[1].value, est.lambda[2].value);
  EXPECT_DOUBLE_EQ(aligned.p[1][0].value, est.p[2][0].value);
}

TEST(Estimate, WeightsAndProbabilitiesAreDistributions) {
  const auto est = estimate_from_ensemble(simulate_ensemble(theta_A(), gaussian_ic(w_A()), 1000, 30.0, 6));
  double sum = 0.0;
  for (const auto& a : est.a) {
    EXPECT_GE(a.value, 0.0);
    EXPECT_LE(a.value, 1.0);
    sum += a.value;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  for (int s = 0; s < 3; ++s) {
    double row = 0.0;
    for (int u = 0; u < 3; ++u) row += est.p[s][u].value;
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
}
