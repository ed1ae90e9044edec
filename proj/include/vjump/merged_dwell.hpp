#pragma once

// Two states sharing one velocity: the particle's path only reveals the total
// time spent in the pair {2, 3} between visits to state 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "vjump/error.hpp"
#include "vjump/model.hpp"
#include "vjump/parallel.hpp"
#include "vjump/rng.hpp"

namespace vjump {

struct MergedDwellLaw {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
};

struct ProbTriple {
  double p12 = 0.0;
  double p21 = 0.0;
  double p31 = 0.0;
};

/// Relabels a TwoEqual model so that state 1 carries the odd velocity (cyclic shift).
inline ModelParams distinct_state_first(const ModelParams& theta) {
  const auto deg = classify_velocity_degeneracy(theta);
  if (deg.kind != VelocityDegeneracy::Kind::TwoEqual)
    throw Error(ErrorCode::WrongDegeneracy, "expected exactly two equal velocities, got " +
                                                to_string(deg));
  const int d = deg.distinct_state;
  return permute_states(theta, {d, (d + 1) % 3, (d + 2) % 3});
}

inline MergedDwellLaw merged_dwell_coefficients(double p12, double p21, double p31) {
  MergedDwellLaw law;
  law.A = p12 * p21;
  law.B = (1.0 - p12) * p31;
  law.C = p12 * (1.0 - p21) * p31 + (1.0 - p12) * (1.0 - p31) * p21;
  law.D = (1.0 - p21) * (1.0 - p31);
  return law;
}

inline MergedDwellLaw merged_dwell_law(const ModelParams& theta) {
  const ModelParams t = distinct_state_first(theta);
  MergedDwellLaw law = merged_dwell_coefficients(t.p12, t.p21, t.p31);
  law.lambda2 = t.lambda[1];
  law.lambda3 = t.lambda[2];
  return law;
}

/// Closed form (A e^{-l2 t} + B e^{-l3 t} + C e^{-(l2+l3) t}) / (1 - D e^{-(l2+l3) t}).
///
/// Note: this expression equals one at t = 0 and decreases, but it is not the
/// distribution of the summed dwell time of simulated excursions. That
/// distribution is merged_dwell_survival_exact.
inline double merged_dwell_survival(const MergedDwellLaw& law, double t) {
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "t must be >= 0");
  const double e2 = std::exp(-law.lambda2 * t);
  const double e3 = std::exp(-law.lambda3 * t);
  const double e23 = e2 * e3;
  return (law.A * e2 + law.B * e3 + law.C * e23) / (1.0 - law.D * e23);
}

/// P(total time in {2,3} > t) for an excursion entered from state 1: the
/// phase-type survival alpha exp(tS) 1 on the two-state sub-generator S.
inline double merged_dwell_survival_exact(const ModelParams& theta, double t) {
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "t must be >= 0");
  const ModelParams m = distinct_state_first(theta);
  Eigen::Matrix2d sub;
  sub << -m.lambda[1], m.lambda[1] * m.prob(1, 2), m.lambda[2] * m.prob(2, 1), -m.lambda[2];
  const Eigen::Matrix2d propagator = (sub * t).exp();
  const Eigen::RowVector2d entry(m.p12, 1.0 - m.p12);
  return (entry * propagator * Eigen::Vector2d::Ones())(0);
}

/// n excursion lengths through the equal-velocity pair, excursion i on stream (seed, i).
inline std::vector<double> simulate_merged_dwells(const ModelParams& theta, std::size_t n,
                                                  std::uint64_t seed) {
  const ModelParams m = distinct_state_first(theta);
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Stream rng(seed, i);
      int state = rng.uniform() < m.p12 ? 1 : 2;
      double total = 0.0;
      for (;;) {
        total += rng.exponential(m.lambda[state]);
        if (rng.uniform() < m.prob(state, 0)) break;
        state = 3 - state;
      }
      out[i] = total;
    }
  });
  return out;
}

namespace detail {

/// Real roots of a x^2 + b x + c (degenerate leading terms allowed).
inline std::vector<double> real_quadratic_roots(double a, double b, double c) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) return {};
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) <= 1e-14 * scale) return {};
    return {-c / b};
  }
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    if (disc < -1e-12 * std::max(b * b, std::abs(4.0 * a * c))) return {};
    disc = 0.0;
  }
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (q == 0.0) return {0.0};
  std::vector<double> roots{q / a, c / q};
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace detail

/// Solves A = p12 p21, B = (1-p12) p31, D = (1-p21)(1-p31) for the probability
/// triple. Eliminating p12 and p31 leaves a quadratic in p21, so up to two
/// triples can generate the same (A, B, D); all of them are returned. C is
/// checked as a consistency residual.
inline std::vector<ProbTriple> recover_probs_from_merged_law(double A, double B, double C,
                                                             double D) {
  constexpr double kTol = 1e-9;
  for (double c : {A, B, C, D})
    if (!(c >= -kTol && c <= 1.0 + kTol))
      throw Error(ErrorCode::NoSolutionInBox, "coefficients must lie in [0,1]");
  if (std::abs(A) <= 1e-14 && std::abs(B) <= 1e-14)
    throw Error(ErrorCode::NoSolutionInBox,
                "CircularNetwork: A = B = 0, only lambda2 + lambda3 is identifiable");

  std::vector<ProbTriple> candidates;
  auto consider = [&](double p12, double p21, double p31) {
    const auto inside = [](double p) { return p >= -kTol && p <= 1.0 + kTol; };
    if (!inside(p12) || !inside(p21) || !inside(p31)) return;
    candidates.push_back({std::clamp(p12, 0.0, 1.0), std::clamp(p21, 0.0, 1.0),
                          std::clamp(p31, 0.0, 1.0)});
  };
  // (p21 - A)(1 - D - p21) = B p21 (1 - p21)
  for (double p21 : detail::real_quadratic_roots(B - 1.0, 1.0 - D + A - B, -A * (1.0 - D))) {
    if (std::abs(1.0 - p21) <= 1e-12) {
      if (1.0 - A > 1e-14) consider(A, 1.0, B / (1.0 - A));
    } else if (std::abs(p21) <= 1e-12) {
      if (1.0 - D > 1e-14) consider(1.0 - B / (1.0 - D), 0.0, 1.0 - D);
    } else {
      consider(A / p21, p21, 1.0 - D / (1.0 - p21));
    }
  }
  if (candidates.empty()) throw Error(ErrorCode::NoSolutionInBox, "no probability triple in [0,1]^3");

  std::vector<ProbTriple> out;
  for (const auto& c : candidates) {
    const auto law = merged_dwell_coefficients(c.p12, c.p21, c.p31);
    if (std::abs(law.A - A) > kTol || std::abs(law.B - B) > kTol || std::abs(law.D - D) > kTol)
      continue;
    if (std::abs(law.C - C) > kTol) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const ProbTriple& o) {
      return std::abs(o.p12 - c.p12) + std::abs(o.p21 - c.p21) + std::abs(o.p31 - c.p31) < 1e-10;
    });
    if (!duplicate) out.push_back(c);
  }
  if (out.empty())
    throw Error(ErrorCode::InconsistentC, "C residual exceeds 1e-9 for every candidate");
  return out;
}

struct MergedDwellFit {
  MergedDwellLaw law;
  ProbTriple probs;        // triple the fitted law was parametrised by
  double rms_residual = 0.0;
  std::vector<double> grid;
  std::vector<double> empirical;
};

namespace detail {

struct SurvivalFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<double>* grid;
  const std::vector<double>* empirical;

  SurvivalFunctor(const std::vector<double>& g, const std::vector<double>& e)
      : grid(&g), empirical(&e) {}

  int inputs() const { return 5; }
  int values() const { return int(grid->size()); }

  static MergedDwellLaw decode(const Eigen::VectorXd& x) {
    auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    MergedDwellLaw law = merged_dwell_coefficients(logistic(x[2]), logistic(x[3]), logistic(x[4]));
    law.lambda2 = std::exp(x[0]);
    law.lambda3 = std::exp(x[1]);
    return law;
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    const auto law = decode(x);
    for (std::size_t i = 0; i < grid->size(); ++i)
      fvec[Eigen::Index(i)] = merged_dwell_survival(law, (*grid)[i]) - (*empirical)[i];
    return 0;
  }
};

}  // namespace detail

/// Least-squares fit of the closed-form survival to the empirical survival of
/// `samples` on a log-spaced grid. tau(0) = 1 holds by construction because the
/// law is parametrised through a probability triple. Multi-start over
/// rates {0.3, 1, 3, 10} / mean x {same} and p in {0.25, 0.75}.
inline MergedDwellFit fit_merged_dwell_survival(std::vector<double> samples,
                                                std::size_t grid_points = 120) {
  if (samples.size() < 1000)
    throw Error(ErrorCode::InvalidArgument, "at least 1000 merged-dwell samples required");
  for (double s : samples)
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error(ErrorCode::InvalidArgument, "samples must be positive and finite");
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s / n;

  const double t_lo = samples[std::size_t(0.001 * n)];
  const double t_hi = samples[std::size_t(0.999 * n)];
  MergedDwellFit fit;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double t = t_lo * std::pow(t_hi / t_lo, double(i) / double(grid_points - 1));
    fit.grid.push_back(t);
    const auto above = samples.end() - std::upper_bound(samples.begin(), samples.end(), t);
    fit.empirical.push_back(double(above) / n);
  }

  detail::SurvivalFunctor functor(fit.grid, fit.empirical);
  Eigen::NumericalDiff<detail::SurvivalFunctor> numdiff(functor);
  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best;
  const std::array<double, 4> rate_factors{0.3, 1.0, 3.0, 10.0};
  for (double f2 : rate_factors)
    for (double f3 : rate_factors)
      for (double p : {0.25, 0.75}) {
        Eigen::VectorXd x(5);
        const double z = std::log(p / (1.0 - p));
        x << std::log(f2 / mean), std::log(f3 / mean), z, z, z;
        Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::SurvivalFunctor>> lm(numdiff);
        lm.parameters.maxfev = 4000;
        const auto status = lm.minimize(x);
        if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) continue;
        Eigen::VectorXd r(fit.grid.size());
        functor(x, r);
        const double cost = r.squaredNorm();
        if (std::isfinite(cost) && x.allFinite() && cost < best_cost) {
          best_cost = cost;
          best = x;
        }
      }
  if (!std::isfinite(best_cost))
    throw Error(ErrorCode::FitDiverged, "no start of the multi-start grid converged");

  fit.law = detail::SurvivalFunctor::decode(best);
  auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  fit.probs = {logistic(best[2]), logistic(best[3]), logistic(best[4])};
  fit.rms_residual = std::sqrt(best_cost / double(fit.grid.size()));
  return fit;
}

}  // namespace vjump
