#pragma once

// Parameter sets that share every coefficient with a reference model. With
// velocities, rates and weights globally identified, only (p12, p21, p31) can
// move, constrained by c7, c8 (quadratic) and c13, c14 (linear).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vjump/coefficients.hpp"
#include "vjump/density.hpp"
#include "vjump/error.hpp"
#include "vjump/model.hpp"
#include "vjump/parallel.hpp"

namespace vjump {

enum class Verdict { Equivalent, Distinct, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Equivalent: return "Equivalent";
    case Verdict::Distinct: return "Distinct";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct EquivalenceReport {
  std::array<double, 15> coeff_dev{};
  double max_coeff_dev = 0.0;
  std::vector<LinfPoint> density_linf_trace;
  double max_density_linf = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

struct CertificationSettings {
  double coeff_tol = 1e-10;
  double equivalent_linf = 1e-8;
  double distinct_linf = 1e-4;
  double t_final = 0.5;
  int n_times = 51;
  int n_modes = 1024;
};

/// Compares two models through their coefficients and spectral total densities.
inline EquivalenceReport certify_equivalence(const ModelParams& thetaA, const Weights& aA,
                                             const ModelParams& thetaB, const Weights& aB,
                                             const InitialCondition& base,
                                             const CertificationSettings& cfg = {}) {
  EquivalenceReport r;
  const auto ca = detail::raw_coefficients(thetaA, aA);
  const auto cb = detail::raw_coefficients(thetaB, aB);
  for (std::size_t i = 0; i < 15; ++i) {
    r.coeff_dev[i] = std::abs(ca[i] - cb[i]);
    r.max_coeff_dev = std::max(r.max_coeff_dev, r.coeff_dev[i]);
  }
  std::vector<double> times(std::size_t(cfg.n_times));
  for (int i = 0; i < cfg.n_times; ++i)
    times[std::size_t(i)] = cfg.t_final * i / std::max(1, cfg.n_times - 1);
  const auto fa = solve_spectral(thetaA, base.with_weights(aA), cfg.n_modes, times);
  const auto fb = solve_spectral(thetaB, base.with_weights(aB), cfg.n_modes, times);
  r.density_linf_trace = linf_difference(fa, fb);
  for (const auto& p : r.density_linf_trace) r.max_density_linf = std::max(r.max_density_linf, p.linf);
  if (r.max_coeff_dev <= cfg.coeff_tol && r.max_density_linf <= cfg.equivalent_linf)
    r.verdict = Verdict::Equivalent;
  else if (r.max_density_linf >= cfg.distinct_linf)
    r.verdict = Verdict::Distinct;
  return r;
}

inline EquivalenceReport certify_equivalence(const ModelParams& thetaA, const ModelParams& thetaB,
                                             const Weights& a, const InitialCondition& base,
                                             const CertificationSettings& cfg = {}) {
  return certify_equivalence(thetaA, a, thetaB, a, base, cfg);
}

struct EquivalenceMember {
  ModelParams theta;
  EquivalenceReport certification;
};

struct EquivalenceClass {
  ModelParams reference;
  Weights weights{};
  std::vector<EquivalenceMember> members;  // members[0] is the reference
};

namespace detail {

using P3 = Eigen::Vector3d;

/// The four constraints (c7, c8, c13, c14) as functions of (p12, p21, p31),
/// each divided by a natural scale so that residuals are comparable.
class ProbabilitySystem {
 public:
  ProbabilitySystem(const ModelParams& theta, const Weights& a) : th_(theta), a_(a) {
    const double lmax = std::max({theta.lambda[0], theta.lambda[1], theta.lambda[2]});
    scale_ = {lmax * lmax, lmax * lmax * std::max(1.0, max_abs_velocity(theta)), lmax, lmax};
    target_ = values(P3(theta.p12, theta.p21, theta.p31));
  }

  Eigen::Vector4d values(const P3& p) const {
    const auto& l = th_.lambda;
    const auto& v = th_.v;
    const double X = 1.0 - (1.0 - p[1]) * (1.0 - p[2]);
    const double Y = 1.0 - (1.0 - p[0]) * p[2];
    const double Z = 1.0 - p[0] * p[1];
    Eigen::Vector4d out;
    out[0] = l[1] * l[2] * X + l[0] * l[2] * Y + l[0] * l[1] * Z;
    out[1] = l[1] * l[2] * X * v[0] + l[0] * l[2] * Y * v[1] + l[0] * l[1] * Z * v[2];
    out[2] = -l[0] * a_[0] + l[1] * p[1] * a_[1] + l[2] * p[2] * a_[2];
    out[3] = l[0] * p[0] * a_[0] - l[1] * a_[1] + l[2] * (1.0 - p[2]) * a_[2];
    return out.cwiseQuotient(scale_);
  }

  Eigen::Vector4d residual(const P3& p) const { return values(p) - target_; }

  Eigen::Matrix<double, 4, 3> jacobian(const P3& p) const {
    const auto& l = th_.lambda;
    const auto& v = th_.v;
    // d/dp of X, Y, Z
    const Eigen::RowVector3d dX(0.0, 1.0 - p[2], 1.0 - p[1]);
    const Eigen::RowVector3d dY(p[2], 0.0, -(1.0 - p[0]));
    const Eigen::RowVector3d dZ(-p[1], -p[0], 0.0);
    Eigen::Matrix<double, 4, 3> j;
    j.row(0) = l[1] * l[2] * dX + l[0] * l[2] * dY + l[0] * l[1] * dZ;
    j.row(1) = l[1] * l[2] * v[0] * dX + l[0] * l[2] * v[1] * dY + l[0] * l[1] * v[2] * dZ;
    j.row(2) << 0.0, l[1] * a_[1], l[2] * a_[2];
    j.row(3) << l[0] * a_[0], 0.0, -l[2] * a_[2];
    for (int i = 0; i < 4; ++i) j.row(i) /= scale_[i];
    return j;
  }

  /// Rows of the two linear constraints (unscaled is fine for rank tests).
  Eigen::Matrix<double, 2, 3> linear_rows() const {
    Eigen::Matrix<double, 2, 3> m;
    m << 0.0, th_.lambda[1] * a_[1], th_.lambda[2] * a_[2], th_.lambda[0] * a_[0], 0.0,
        -th_.lambda[2] * a_[2];
    return m;
  }

  ModelParams with(const P3& p) const {
    ModelParams out = th_;
    out.p12 = p[0];
    out.p21 = p[1];
    out.p31 = p[2];
    return out;
  }

 private:
  ModelParams th_;
  Weights a_;
  Eigen::Vector4d scale_, target_;
};

/// Damped Gauss-Newton inside the unit box.
inline P3 polish(const ProbabilitySystem& sys, P3 p) {
  auto clip = [](P3 x) { return x.cwiseMax(0.0).cwiseMin(1.0); };
  p = clip(p);
  double r = sys.residual(p).norm();
  for (int it = 0; it < 100 && r > 1e-16; ++it) {
    const auto j = sys.jacobian(p);
    const P3 step = j.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(-sys.residual(p));
    double damp = 1.0;
    bool moved = false;
    for (int k = 0; k < 30; ++k, damp *= 0.5) {
      const P3 trial = clip(p + damp * step);
      const double rt = sys.residual(trial).norm();
      if (rt < r) {
        p = trial;
        r = rt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return p;
}

/// Quadratic g(s) = g0 + g1 s + g2 s^2 recovered from three samples.
struct Quadratic {
  double g0, g1, g2;
};

inline Quadratic fit_quadratic(const std::function<double(double)>& g) {
  const double gm = g(-1.0), g0 = g(0.0), gp = g(1.0);
  return {g0, 0.5 * (gp - gm), 0.5 * (gp + gm) - g0};
}

inline std::vector<double> quadratic_roots(const Quadratic& q, double tol) {
  const double mag = std::max({std::abs(q.g0), std::abs(q.g1), std::abs(q.g2)});
  if (mag <= tol) throw Error(ErrorCode::SolverExhausted, "constraint vanishes along a line");
  if (std::abs(q.g2) <= tol) {
    if (std::abs(q.g1) <= tol) return {};
    return {-q.g0 / q.g1};
  }
  double disc = q.g1 * q.g1 - 4.0 * q.g2 * q.g0;
  if (disc < 0.0) {
    if (disc > -tol) disc = 0.0;
    else return {};
  }
  const double sq = std::sqrt(disc);
  const double qq = -0.5 * (q.g1 + std::copysign(sq, q.g1));
  std::vector<double> out;
  if (qq != 0.0) out.push_back(q.g0 / qq);
  out.push_back(qq / q.g2);
  return out;
}

/// Roots of {g7, g8} restricted to the line p0 + s*dir.
inline std::vector<P3> line_candidates(const ProbabilitySystem& sys, const P3& p0, const P3& dir) {
  std::vector<P3> out;
  std::array<Quadratic, 2> q;
  for (int i = 0; i < 2; ++i)
    q[i] = fit_quadratic([&](double s) { return sys.residual(p0 + s * dir)[i]; });
  constexpr double tol = 1e-13;
  const bool zero7 = std::max({std::abs(q[0].g0), std::abs(q[0].g1), std::abs(q[0].g2)}) <= tol;
  const bool zero8 = std::max({std::abs(q[1].g0), std::abs(q[1].g1), std::abs(q[1].g2)}) <= tol;
  if (zero7 && zero8)
    throw Error(ErrorCode::SolverExhausted, "a whole line of parameters shares the coefficients");
  for (double s : quadratic_roots(zero7 ? q[1] : q[0], tol)) {
    const P3 p = p0 + s * dir;
    if (std::abs(sys.residual(p)[zero7 ? 0 : 1]) <= 1e-6) out.push_back(p);
  }
  return out;
}

/// Candidates from the algebraic reduction; nullopt when it does not apply.
inline std::optional<std::vector<P3>> algebraic_candidates(const ProbabilitySystem& sys,
                                                           const P3& p0) {
  Eigen::Matrix<double, 2, 3> rows = sys.linear_rows();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
  const auto sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * std::max(smax, 1e-300)) ++rank;
  const Eigen::Matrix3d V = svd.matrixV();

  if (rank == 2) return line_candidates(sys, p0, V.col(2));
  if (rank != 1) return std::nullopt;

  // Plane p0 + s n1 + u n2: combine g7 and g8 so the quadratic part cancels.
  const P3 n1 = V.col(1), n2 = V.col(2);
  auto hessian = [&](int i) {
    auto g = [&](double s, double u) { return sys.residual(p0 + s * n1 + u * n2)[i]; };
    Eigen::Matrix2d h;
    h(0, 0) = g(1, 0) + g(-1, 0) - 2.0 * g(0, 0);
    h(1, 1) = g(0, 1) + g(0, -1) - 2.0 * g(0, 0);
    h(0, 1) = h(1, 0) = 0.25 * (g(1, 1) - g(1, -1) - g(-1, 1) + g(-1, -1));
    return h;
  };
  const Eigen::Matrix2d h7 = hessian(0), h8 = hessian(1);
  Eigen::Matrix<double, 4, 2> stack;
  stack.col(0) << h7(0, 0), h7(0, 1), h7(1, 1), 0.0;
  stack.col(1) << h8(0, 0), h8(0, 1), h8(1, 1), 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> hs(stack, Eigen::ComputeFullV);
  const auto hsv = hs.singularValues();
  if (hsv[0] == 0.0 || hsv[1] > 1e-12 * hsv[0]) return std::nullopt;
  const Eigen::Vector2d mu = hs.matrixV().col(1);
  // The combination is linear in (s, u) and vanishes at the origin.
  auto lin = [&](double s, double u) {
    const auto r = sys.residual(p0 + s * n1 + u * n2);
    return mu[0] * r[0] + mu[1] * r[1];
  };
  const Eigen::Vector2d grad(0.5 * (lin(1, 0) - lin(-1, 0)), 0.5 * (lin(0, 1) - lin(0, -1)));
  if (grad.norm() <= 1e-13) return std::nullopt;
  const Eigen::Vector2d along(-grad[1], grad[0]);
  return line_candidates(sys, p0, along[0] * n1 + along[1] * n2);
}

/// Local minima of the residual on an n^3 grid over [0,1]^3 whose residual is
/// small enough to hide a root within half a cell.
inline std::vector<P3> scan_candidates(const ProbabilitySystem& sys, int n) {
  const double h = 1.0 / (n - 1);
  auto at = [&](int i, int j, int k) { return P3(i * h, j * h, k * h); };
  std::vector<std::vector<double>> slabs(static_cast<std::size_t>(n));
  parallel_for(std::size_t(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& slab = slabs[i];
      slab.resize(std::size_t(n) * std::size_t(n));
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          slab[std::size_t(j) * std::size_t(n) + std::size_t(k)] =
              sys.residual(at(int(i), j, k)).norm();
    }
  });
  auto value = [&](int i, int j, int k) {
    return slabs[std::size_t(i)][std::size_t(j) * std::size_t(n) + std::size_t(k)];
  };
  std::vector<std::vector<P3>> found(static_cast<std::size_t>(n));
  parallel_for(std::size_t(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t ii = begin; ii < end; ++ii) {
      const int i = int(ii);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double r = value(i, j, k);
          const P3 p = at(i, j, k);
          const double bound = sys.jacobian(p).norm() * h;
          if (r > bound) continue;
          bool minimum = true;
          for (int di = -1; di <= 1 && minimum; ++di)
            for (int dj = -1; dj <= 1 && minimum; ++dj)
              for (int dk = -1; dk <= 1 && minimum; ++dk) {
                const int a = i + di, b = j + dj, c = k + dk;
                if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n) continue;
                if (value(a, b, c) < r) minimum = false;
              }
          if (minimum) found[ii].push_back(p);
        }
    }
  });
  std::vector<P3> out;
  for (auto& f : found) out.insert(out.end(), f.begin(), f.end());
  return out;
}

}  // namespace detail

struct EquivalenceSettings {
  int scan_points = 200;
  double dedup_tol = 1e-7;
  double coeff_tol = 1e-10;
  std::size_t max_members = 16;  // more distinct roots than this means a continuum
  CertificationSettings certification;
};

/// All (p12, p21, p31) in [0,1]^3 reproducing the reference coefficients, with
/// the reference first and every member certified against it.
inline EquivalenceClass find_equivalent_parameters(const ModelParams& theta, const Weights& a,
                                                   const InitialCondition& base,
                                                   const EquivalenceSettings& cfg = {}) {
  validate_params(theta);
  validate_weights(a);
  const auto deg = classify_velocity_degeneracy(theta);
  if (deg.kind != VelocityDegeneracy::Kind::AllDistinct)
    throw Error(ErrorCode::WrongDegeneracy, "equivalence search needs distinct velocities");

  const detail::ProbabilitySystem sys(theta, a);
  const detail::P3 p0(theta.p12, theta.p21, theta.p31);

  std::vector<detail::P3> seeds{p0};
  if (auto alg = detail::algebraic_candidates(sys, p0)) seeds.insert(seeds.end(), alg->begin(), alg->end());
  const auto scanned = detail::scan_candidates(sys, cfg.scan_points);
  seeds.insert(seeds.end(), scanned.begin(), scanned.end());

  const auto ref_c = detail::raw_coefficients(theta, a);
  std::vector<detail::P3> roots;
  for (const auto& s : seeds) {
    const detail::P3 p = (&s == &seeds.front()) ? s : detail::polish(sys, s);
    const auto candidate = sys.with(p);
    const auto c = detail::raw_coefficients(candidate, a);
    double dev = 0.0;
    for (std::size_t i = 0; i < 15; ++i) dev = std::max(dev, std::abs(c[i] - ref_c[i]));
    if (dev > cfg.coeff_tol) continue;
    try {
      validate_params(candidate);
    } catch (const Error&) {
      continue;
    }
    const bool dup = std::any_of(roots.begin(), roots.end(), [&](const detail::P3& r) {
      return (r - p).cwiseAbs().maxCoeff() <= cfg.dedup_tol;
    });
    if (!dup) roots.push_back(p);
    if (roots.size() > cfg.max_members)
      throw Error(ErrorCode::SolverExhausted,
                  "more than " + std::to_string(cfg.max_members) +
                      " distinct solutions; the solution set is not finite on the box");
  }

  EquivalenceClass out;
  out.reference = theta;
  out.weights = a;
  for (const auto& p : roots) {
    const auto member = sys.with(p);
    out.members.push_back({member, certify_equivalence(theta, member, a, base, cfg.certification)});
  }
  return out;
}

}  // namespace vjump
