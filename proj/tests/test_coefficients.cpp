#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace vjump;
using namespace vjump::testing;

TEST(Coefficients, ThetaAInputOutputBlock) {
  const auto c = compute_coefficients(theta_A(), w_A());
  EXPECT_NEAR(c(7), 1441.0 / 2000, 1e-12);
  EXPECT_NEAR(c(8), 39.0 / 100, 1e-12);
  const double expected[6] = {5, -300, 0, 1.8, -3.5, -90};
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(c(i + 1), expected[i], 1e-12);
}

TEST(Coefficients, StationaryWeightsHaveNoDrift) {
  const auto c = compute_coefficients(theta_A(), w_A());
  for (int i = 13; i <= 15; ++i) EXPECT_NEAR(c(i), 0.0, 1e-15);
  EXPECT_NEAR(c(9), 20 * w_A()[0] - 15 * w_A()[1], 1e-14);
}

TEST(Coefficients, EqualVelocitiesNeedTheVariant) {
  auto th = theta_A();
  th.v = {20, -15, -15};
  try {
    compute_coefficients(th, w_A());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongDegeneracy);
  }
}

TEST(Coefficients, PermutationInvariantInputOutputBlock) {
  RandomModels gen(21);
  for (int n = 0; n < 1000; ++n) {
    const auto th = gen.next();
    const auto a = gen.weights();
    const auto perm = gen.permutation();
    const auto c = compute_coefficients(th, a);
    const auto cp = compute_coefficients(permute_states(th, perm), permute_weights(a, perm));
    for (int i = 1; i <= 9; ++i) EXPECT_NEAR(c(i), cp(i), 1e-12 * std::max(1.0, std::abs(c(i)))) << "c" << i;
  }
}

TEST(Coefficients, DriftSumsToZeroAndWeightsToOne) {
  RandomModels gen(22);
  for (int n = 0; n < 1000; ++n) {
    const auto c = compute_coefficients(gen.next(), gen.weights());
    EXPECT_NEAR(c(15), -c(13) - c(14), 1e-12);
    EXPECT_NEAR(c(10) + c(11) + c(12), 1.0, 1e-12);
  }
}

TEST(EqualVelocity, ReferenceValues) {
  ModelParams th = theta_A();
  th.v = {20, -15, -15};
  const auto e = compute_equal_velocity_coefficients(th, w_A());
  EXPECT_NEAR(e.k[0], 0.8, 1e-15);
  EXPECT_NEAR(e.k[1], 0.15 * (1.0 - 0.7 * 0.3), 1e-15);
  EXPECT_NEAR(e.chat[0], -10.0, 1e-15);
  EXPECT_NEAR(e.chat9[4], -e.chat9[3], 1e-15);
}

TEST(EqualVelocity, AgreesWithGeneralFormulas) {
  RandomModels gen(23);
  for (int n = 0; n < 1000; ++n) {
    auto th = gen.next();
    th.v[2] = th.v[1];
    const auto a = gen.weights();
    const auto e = compute_equal_velocity_coefficients(th, a);
    const auto raw = detail::raw_coefficients(th, a);
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(e.chat[i], raw[i], 1e-10 * std::max(1.0, std::abs(raw[i])));
    EXPECT_NEAR(e.chat9[0], raw[8], 1e-12 * std::max(1.0, std::abs(raw[8])));
    EXPECT_NEAR(e.chat9[3], raw[12], 1e-12);
    EXPECT_NEAR(e.k[3], th.lambda[1] * th.p21 * a[1] + th.lambda[2] * th.p31 * a[2], 1e-12);
  }
}

TEST(EqualVelocity, OddStateMovedToFront) {
  ModelParams th = theta_A();
  th.v = {-15, 20, -15};
  const auto e = compute_equal_velocity_coefficients(th, w_A());
  EXPECT_EQ(e.relabel[0], 1);
  EXPECT_NEAR(e.chat[0], -10.0, 1e-15);
  EXPECT_NEAR(e.chat9[1], w_A()[1], 1e-15);
}

TEST(EqualVelocity, DistinctVelocitiesRejected) {
  EXPECT_THROW(compute_equal_velocity_coefficients(theta_A(), w_A()), Error);
}

TEST(RecoverVelocities, Examples) {
  auto v = recover_velocities(5, -300, 0);
  EXPECT_NEAR(v[0], 20, 1e-12);
  EXPECT_NEAR(v[1], 0, 1e-12);
  EXPECT_NEAR(v[2], -15, 1e-12);
  v = recover_velocities(0, 0, 0);
  for (double x : v) EXPECT_EQ(x, 0.0);
  v = recover_velocities(3, 3, 1);
  for (double x : v) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(RecoverVelocities, DoubleRoot) {
  const auto v = recover_velocities(20 - 30, 2 * 20 * -15 + 225, 20 * 225);
  EXPECT_NEAR(v[0], 20, 1e-9);
  EXPECT_NEAR(v[1], -15, 1e-6);
  EXPECT_NEAR(v[2], -15, 1e-6);
}

TEST(RecoverVelocities, ComplexRootsRejected) {
  try {
    recover_velocities(0, 1, 0);  // z^3 + z
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ComplexRoots);
  }
}

TEST(RecoverRates, Examples) {
  const auto l = recover_rates(1.8, -3.5, -90, {20, -15, 0});
  EXPECT_NEAR(l[0], 1.0, 1e-12);
  EXPECT_NEAR(l[1], 0.5, 1e-12);
  EXPECT_NEAR(l[2], 0.3, 1e-12);
  const Vec3 v{4, -1, 2.5};
  const double lam = 0.7;
  const double e1 = v[0] + v[1] + v[2], e2 = v[0] * v[1] + v[1] * v[2] + v[0] * v[2];
  for (double x : recover_rates(3 * lam, 2 * lam * e1, lam * e2, v)) EXPECT_NEAR(x, lam, 1e-12);
}

TEST(RecoverRates, RepeatedVelocitySingular) {
  try {
    recover_rates(1, 1, 1, {1, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularSystem);
  }
}

TEST(RoundTrip, VelocitiesThenRates) {
  RandomModels gen(24);
  for (int n = 0; n < 1000; ++n) {
    auto th = gen.next();
    // put states in descending-velocity order so recovered labels line up
    Permutation order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return th.v[a] > th.v[b]; });
    th = permute_states(th, order);
    const auto c = compute_coefficients(th, gen.weights());
    const auto v = recover_velocities(c(1), c(2), c(3));
    const auto l = recover_rates(c(4), c(5), c(6), v);
    for (int s = 0; s < 3; ++s) {
      EXPECT_NEAR(v[s], th.v[s], 1e-9 * std::max(1.0, std::abs(th.v[s])));
      EXPECT_NEAR(l[s], th.lambda[s], 1e-9 * std::max(1.0, th.lambda[s]));
    }
  }
}

TEST(Taylor, TimeZeroIsProfile) {
  const auto ic = gaussian_ic({0.2, 0.5, 0.3});
  for (double xi : {-3.0, 0.0, 7.5}) EXPECT_NEAR(taylor_density(theta_A(), ic, xi, 0.0), ic.profile_value(xi), 1e-16);
}

TEST(Taylor, StationaryWeightsHaveNoCorrection) {
  const auto ic = gaussian_ic(w_A());
  const double t = 0.05, xi = 2.0;
  double expected = 0.0;
  for (int s = 0; s < 3; ++s) expected += w_A()[s] * ic.profile_value(xi - theta_A().v[s] * t);
  EXPECT_NEAR(taylor_density(theta_A(), ic, xi, t), expected, 1e-16);
}

TEST(Taylor, GapShrinksQuadratically) {
  const auto ic = gaussian_ic({0.6, 0.1, 0.3});
  std::vector<double> gaps;
  for (double t : {0.02, 0.01, 0.005}) {
    const auto f = solve_spectral(theta_A(), ic, 1024, {t});
    double gap = 0.0;
    for (std::size_t j = 0; j < f.x.size(); ++j)
      gap = std::max(gap, std::abs(f.snapshots[0].total[j] - taylor_density(theta_A(), ic, f.x[j], t)));
    gaps.push_back(gap);
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_GE(gaps[i] / gaps[i + 1], 3.5);
    EXPECT_LE(gaps[i] / gaps[i + 1], 4.5);
  }
}

TEST(FMatrix, RepeatedVelocityGivesZero) {
  const auto ic = gaussian_ic(w_A());
  EXPECT_EQ(f_matrix_determinant(ic, {20, -15, -15}, 0.01), 0.0);
  EXPECT_EQ(f_matrix_determinant(ic, {20, -15, 0}, 0.0), 0.0);
}

TEST(FMatrix, MatchesDirectDeterminantAtModerateTime) {
  const auto ic = gaussian_ic(w_A());
  const Vec3 v{20, -15, 0};
  for (double t : {0.05, 0.2, 1.0}) {
    Eigen::Matrix3d f;
    for (int z = 0; z < 3; ++z)
      for (int s = 0; s < 3; ++s) f(z, s) = ic.profile_value((v[z] - v[s]) * t);
    EXPECT_NEAR(f_matrix_determinant(ic, v, t) / f.determinant(), 1.0, 1e-6) << t;
  }
}

TEST(FMatrix, FullLeadingTermDescribesSmallTimes) {
  const auto ic = gaussian_ic(w_A());
  const Vec3 v{20, -15, 0};
  EXPECT_NEAR(f_matrix_determinant(ic, v, 1e-3) / f_matrix_leading_term_full(ic, v, 1e-3), 1.0, 0.05);
  EXPECT_NEAR(f_matrix_determinant(ic, v, 1e-4) / f_matrix_leading_term_full(ic, v, 1e-4), 1.0, 0.01);
}

// The f''(0)^3/4 term alone has the wrong sign and half the size for a Gaussian.
TEST(FMatrix, SecondDerivativeTermAloneIsOffByMinusTwo) {
  const auto ic = gaussian_ic(w_A());
  const Vec3 v{20, -15, 0};
  EXPECT_NEAR(f_matrix_determinant(ic, v, 1e-4) / f_matrix_leading_term(ic, v, 1e-4), -2.0, 1e-4);
}

TEST(FMatrix, GaussianDerivativesAtZero) {
  const auto ic = gaussian_ic(w_A());
  const double s2 = 25.0;
  EXPECT_NEAR(ic.profile_derivative_at_zero(2), -2.0 / (s2 * std::sqrt(std::numbers::pi * s2)), 1e-16);
}

TEST(Taylor, StationaryWeightsLeaveThirdOrderGap) {
  const auto ic = gaussian_ic(w_A());
  std::vector<double> gaps;
  for (double t : {0.02, 0.01}) {
    const auto f = solve_spectral(theta_A(), ic, 1024, {t});
    double gap = 0.0;
    for (std::size_t j = 0; j < f.x.size(); ++j)
      gap = std::max(gap, std::abs(f.snapshots[0].total[j] - taylor_density(theta_A(), ic, f.x[j], t)));
    gaps.push_back(gap);
  }
  EXPECT_NEAR(gaps[0] / gaps[1], 8.0, 0.5);
}
