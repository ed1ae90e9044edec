#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace vjump;
using namespace vjump::testing;

namespace {

ModelParams equal_velocity_model(double l2 = 0.5, double l3 = 0.3) {
  return {{20, -15, -15}, {1, l2, l3}, 0.2, 0.3, 0.7};
}

ProbTriple random_triple(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.02, 0.98);
  return {u(gen), u(gen), u(gen)};
}

}  // namespace

TEST(MergedLaw, CoefficientsForReferenceTriple) {
  const auto law = merged_dwell_law(equal_velocity_model());
  EXPECT_NEAR(law.A, 0.06, 1e-15);
  EXPECT_NEAR(law.B, 0.56, 1e-15);
  EXPECT_NEAR(law.C, 0.17, 1e-15);
  EXPECT_NEAR(law.D, 0.21, 1e-15);
  EXPECT_EQ(law.lambda2, 0.5);
  EXPECT_EQ(law.lambda3, 0.3);
}

TEST(MergedLaw, RelabelsWhenOddStateIsNotFirst) {
  ModelParams th = equal_velocity_model();
  const auto moved = permute_states(th, {1, 2, 0});
  const auto a = merged_dwell_law(th);
  const auto b = merged_dwell_law(moved);
  EXPECT_NEAR(a.A, b.A, 1e-15);
  EXPECT_NEAR(a.C, b.C, 1e-15);
  EXPECT_EQ(a.lambda2, b.lambda2);
}

TEST(MergedLaw, DistinctVelocitiesRejected) {
  try {
    merged_dwell_law(theta_A());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongDegeneracy);
  }
}

TEST(MergedLaw, SurvivalStartsAtOneForRandomTriples) {
  std::mt19937_64 gen(1);
  for (int n = 0; n < 1000; ++n) {
    const auto p = random_triple(gen);
    auto law = merged_dwell_coefficients(p.p12, p.p21, p.p31);
    law.lambda2 = 0.7;
    law.lambda3 = 1.3;
    EXPECT_NEAR((law.A + law.B + law.C) / (1.0 - law.D), 1.0, 1e-12);
    EXPECT_NEAR(merged_dwell_survival(law, 0.0), 1.0, 1e-12);
    EXPECT_GE(std::min({law.A, law.B, law.C, law.D}), 0.0);
    EXPECT_LT(law.D, 1.0);
  }
}

TEST(MergedLaw, SurvivalBoundedAndNonIncreasing) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> rate(0.05, 5.0);
  for (int n = 0; n < 200; ++n) {
    const auto p = random_triple(gen);
    auto law = merged_dwell_coefficients(p.p12, p.p21, p.p31);
    law.lambda2 = rate(gen);
    law.lambda3 = rate(gen);
    double prev = 1.0;
    for (int i = 0; i <= 400; ++i) {
      const double s = merged_dwell_survival(law, 0.05 * i);
      EXPECT_LE(s, prev + 1e-15);
      EXPECT_GE(s, 0.0);
      prev = s;
    }
  }
}

TEST(MergedLaw, CircularNetworkSpecialisation) {
  const auto law0 = merged_dwell_coefficients(1.0, 0.0, 0.6);
  EXPECT_EQ(law0.A, 0.0);
  EXPECT_EQ(law0.B, 0.0);
  MergedDwellLaw law = law0;
  law.lambda2 = 0.4;
  law.lambda3 = 0.9;
  const double t = 1.7;
  const double e = std::exp(-1.3 * t);
  EXPECT_NEAR(merged_dwell_survival(law, t), law.C * e / (1.0 - law.D * e), 1e-15);
}

TEST(Recover, ReferenceRoundTrip) {
  const auto c = recover_probs_from_merged_law(0.06, 0.56, 0.17, 0.21);
  ASSERT_FALSE(c.empty());
  const bool found = std::any_of(c.begin(), c.end(), [](const ProbTriple& p) {
    return std::abs(p.p12 - 0.2) < 1e-9 && std::abs(p.p21 - 0.3) < 1e-9 && std::abs(p.p31 - 0.7) < 1e-9;
  });
  EXPECT_TRUE(found);
}

TEST(Recover, RandomTriplesRoundTrip) {
  std::mt19937_64 gen(3);
  for (int n = 0; n < 1000; ++n) {
    const auto p = random_triple(gen);
    const auto law = merged_dwell_coefficients(p.p12, p.p21, p.p31);
    const auto cands = recover_probs_from_merged_law(law.A, law.B, law.C, law.D);
    bool found = false;
    for (const auto& q : cands) {
      const auto back = merged_dwell_coefficients(q.p12, q.p21, q.p31);
      EXPECT_NEAR(back.A, law.A, 1e-9);
      EXPECT_NEAR(back.B, law.B, 1e-9);
      EXPECT_NEAR(back.C, law.C, 1e-9);
      EXPECT_NEAR(back.D, law.D, 1e-9);
      found |= std::abs(q.p12 - p.p12) < 1e-9 && std::abs(q.p21 - p.p21) < 1e-9 &&
               std::abs(q.p31 - p.p31) < 1e-9;
    }
    EXPECT_TRUE(found) << p.p12 << " " << p.p21 << " " << p.p31;
  }
}

TEST(Recover, CircularNetworkHasNoUniqueSolution) {
  try {
    recover_probs_from_merged_law(0.0, 0.0, 0.5, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSolutionInBox);
    EXPECT_NE(std::string(e.what()).find("CircularNetwork"), std::string::npos);
  }
}

TEST(Recover, InconsistentCDetected) {
  try {
    recover_probs_from_merged_law(0.06, 0.56, 0.30, 0.21);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentC);
  }
}

// Binomial 3-sigma bands from 10^6 simulated excursions with lambda2 = lambda3 = 1.
TEST(MonteCarlo, ExactSurvivalMatchesSimulation) {
  const auto th = equal_velocity_model(1.0, 1.0);
  const auto samples = simulate_merged_dwells(th, 1000000, 11);
  for (double t : {0.5, 1.0, 2.0}) {
    const double frac = double(std::count_if(samples.begin(), samples.end(), [&](double s) { return s > t; })) /
                        double(samples.size());
    const double exact = merged_dwell_survival_exact(th, t);
    EXPECT_NEAR(frac, exact, 3.0 * std::sqrt(exact * (1.0 - exact) / double(samples.size()))) << "t=" << t;
  }
}

TEST(MonteCarlo, ClosedFormIsNotTheExcursionSurvival) {
  const auto th = equal_velocity_model(1.0, 1.0);
  const auto law = merged_dwell_law(th);
  EXPECT_GT(std::abs(merged_dwell_survival(law, 1.0) - merged_dwell_survival_exact(th, 1.0)), 0.2);
}

TEST(MonteCarlo, ExactSurvivalStartsAtOne) {
  EXPECT_NEAR(merged_dwell_survival_exact(equal_velocity_model(), 0.0), 1.0, 1e-15);
}

TEST(Fit, TooFewSamplesRejected) {
  try {
    fit_merged_dwell_survival({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

// Dvoretzky-Kiefer-Wolfowitz: the fitted curve must stay within the 1% band of
// the empirical survival on the fitting grid.
TEST(Fit, StaysWithinDkwBand) {
  const auto samples = simulate_merged_dwells(equal_velocity_model(), 100000, 5);
  const auto fit = fit_merged_dwell_survival(samples);
  const double band = std::sqrt(std::log(2.0 / 0.01) / (2.0 * double(samples.size())));
  double worst = 0.0;
  for (std::size_t i = 0; i < fit.grid.size(); ++i)
    worst = std::max(worst, std::abs(merged_dwell_survival(fit.law, fit.grid[i]) - fit.empirical[i]));
  EXPECT_LT(worst, band);
  EXPECT_NEAR(merged_dwell_survival(fit.law, 0.0), 1.0, 1e-12);
}

TEST(Fit, DeterministicForFixedSamples) {
  const auto samples = simulate_merged_dwells(equal_velocity_model(), 20000, 6);
  const auto a = fit_merged_dwell_survival(samples);
  const auto b = fit_merged_dwell_survival(samples);
  EXPECT_EQ(a.law.lambda2, b.law.lambda2);
  EXPECT_EQ(a.law.A, b.law.A);
}
