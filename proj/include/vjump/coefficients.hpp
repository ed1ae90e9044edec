#pragma once

// Identifiable combinations of the parameters: the input-output coefficients
// c1..c8, the initial-condition coefficients c9..c15, their equal-velocity
// counterparts, and inversion of the velocity and rate blocks.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vjump/density.hpp"
#include "vjump/error.hpp"
#include "vjump/initial_condition.hpp"
#include "vjump/model.hpp"

namespace vjump {

struct CoefficientSet {
  std::array<double, 15> c{};  // c[0] is c1
  VelocityDegeneracy degeneracy;

  double operator()(int index) const { return c[std::size_t(index - 1)]; }
  IoCoefficients io() const {
    IoCoefficients out;
    std::copy_n(c.begin(), 8, out.begin());
    return out;
  }
};

/// Unit of each coefficient in terms of velocity [v] and time [t].
inline const std::array<std::string, 15>& coefficient_units() {
  static const std::array<std::string, 15> units{
      "v", "v^2", "v^3", "1/t", "v/t", "v^2/t", "1/t^2", "v/t^2",
      "v", "1", "1", "1", "1/t", "1/t", "1/t"};
  return units;
}

namespace detail {

/// The published formulas, evaluated without a degeneracy check.
inline std::array<double, 15> raw_coefficients(const ModelParams& th, const Weights& a) {
  const auto& v = th.v;
  const auto& l = th.lambda;
  const double X = 1.0 - (1.0 - th.p21) * (1.0 - th.p31);
  const double Y = 1.0 - (1.0 - th.p12) * th.p31;
  const double Z = 1.0 - th.p12 * th.p21;
  const auto drift = weight_drift(th, a);
  return {v[0] + v[1] + v[2],
          v[0] * v[1] + v[1] * v[2] + v[0] * v[2],
          v[0] * v[1] * v[2],
          l[0] + l[1] + l[2],
          l[0] * (v[1] + v[2]) + l[1] * (v[0] + v[2]) + l[2] * (v[0] + v[1]),
          l[0] * v[1] * v[2] + l[1] * v[0] * v[2] + l[2] * v[0] * v[1],
          l[1] * l[2] * X + l[0] * l[2] * Y + l[0] * l[1] * Z,
          l[1] * l[2] * X * v[0] + l[0] * l[2] * Y * v[1] + l[0] * l[1] * Z * v[2],
          a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
          a[0],
          a[1],
          a[2],
          drift[0],
          drift[1],
          drift[2]};
}

}  // namespace detail

inline CoefficientSet compute_coefficients(const ModelParams& theta, const Weights& a) {
  CoefficientSet out;
  out.degeneracy = classify_velocity_degeneracy(theta);
  if (out.degeneracy.kind != VelocityDegeneracy::Kind::AllDistinct)
    throw Error(ErrorCode::WrongDegeneracy,
                "velocities are " + to_string(out.degeneracy) + "; use the equal-velocity variant");
  out.c = detail::raw_coefficients(theta, a);
  return out;
}

inline CoefficientSet compute_coefficients(const ModelParams& theta) {
  return compute_coefficients(theta, stationary_distribution(theta).w);
}

struct EqualVelocityCoefficients {
  std::array<double, 8> chat{};   // chat1..chat8
  std::array<double, 4> k{};      // k1..k4
  std::array<double, 5> chat9{};  // chat9..chat13
  Permutation relabel{0, 1, 2};   // applied so that state 1 carries the odd velocity
};

inline EqualVelocityCoefficients compute_equal_velocity_coefficients(const ModelParams& theta,
                                                                     const Weights& a) {
  const auto deg = classify_velocity_degeneracy(theta);
  if (deg.kind != VelocityDegeneracy::Kind::TwoEqual)
    throw Error(ErrorCode::WrongDegeneracy,
                "expected exactly two equal velocities, got " + to_string(deg));
  const int d = deg.distinct_state;
  const Permutation perm{d, (d + 1) % 3, (d + 2) % 3};
  const ModelParams th = permute_states(theta, perm);
  const Weights w = permute_weights(a, perm);

  const double v1 = th.v[0];
  const double v = th.v[1];
  const auto& l = th.lambda;
  const double X = 1.0 - (1.0 - th.p21) * (1.0 - th.p31);
  const double Y = 1.0 - (1.0 - th.p12) * th.p31;
  const double Z = 1.0 - th.p12 * th.p21;
  const double k1 = l[1] + l[2];

  EqualVelocityCoefficients out;
  out.relabel = perm;
  out.chat = {v1 + 2.0 * v,
              2.0 * v1 * v + v * v,
              v1 * v * v,
              l[0] + k1,
              2.0 * l[0] * v + k1 * (v1 + v),
              l[0] * v * v + k1 * v1 * v,
              l[1] * l[2] * X + l[0] * (l[2] * Y + l[1] * Z),
              l[1] * l[2] * X * v1 + l[0] * (l[2] * Y + l[1] * Z) * v};
  out.k = {k1,
           l[1] * l[2] * (th.p21 + th.p31 - th.p21 * th.p31),
           l[1] * th.p12 * th.p21 + l[2] * th.p31 * (1.0 - th.p12),
           w[1] * l[1] * th.p21 + l[2] * th.p31 * (1.0 - w[0] - w[1])};
  const double c12 = -l[0] * w[0] + l[1] * th.p21 * w[1] + l[2] * th.p31 * w[2];
  out.chat9 = {w[0] * (v1 - v) + v, w[0], w[1] + w[2], c12, -c12};
  return out;
}

/// Real roots of z^3 - c1 z^2 + c2 z - c3, sorted descending.
inline Vec3 recover_velocities(double c1, double c2, double c3) {
  const double scale = std::max({std::abs(c1), std::sqrt(std::abs(c2)), std::cbrt(std::abs(c3))});
  if (scale == 0.0) return {0.0, 0.0, 0.0};
  // Work with z = scale * (y + c1 / (3 scale)).
  const double b1 = c1 / scale, b2 = c2 / (scale * scale), b3 = c3 / (scale * scale * scale);
  const double shift = b1 / 3.0;
  const double p = b2 - b1 * b1 / 3.0;
  const double q = -2.0 * b1 * b1 * b1 / 27.0 + b1 * b2 / 3.0 - b3;
  const double disc = -(4.0 * p * p * p + 27.0 * q * q);
  if (disc < -1e-9)
    throw Error(ErrorCode::ComplexRoots, "cubic has non-real roots (discriminant " +
                                             std::to_string(disc) + " in scaled units)");
  Vec3 y{};
  if (p >= -1e-12) {
    y.fill(std::cbrt(-q));
  } else {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int i = 0; i < 3; ++i) y[i] = r * std::cos(phi - 2.0 * std::numbers::pi * i / 3.0);
  }
  Vec3 z{};
  for (int i = 0; i < 3; ++i) {
    double x = y[i] + shift;
    auto f = [&](double t) { return ((t - b1) * t + b2) * t - b3; };
    for (int it = 0; it < 8; ++it) {
      const double df = (3.0 * x - 2.0 * b1) * x + b2;
      if (df == 0.0) break;
      const double next = x - f(x) / df;
      if (!(std::abs(f(next)) < std::abs(f(x)))) break;
      x = next;
    }
    z[i] = x * scale;
  }
  std::sort(z.begin(), z.end(), std::greater<>());
  return z;
}

/// Solves c4 = sum l, c5 = sum l_s (v_u + v_z), c6 = sum l_s v_u v_z for the rates.
inline Vec3 recover_rates(double c4, double c5, double c6, const Vec3& v) {
  const double scale = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2]), 1e-300});
  const double det = (v[0] - v[1]) * (v[1] - v[2]) * (v[0] - v[2]);
  if (std::abs(det) <= 1e-12 * scale * scale * scale)
    throw Error(ErrorCode::SingularSystem, "velocities are not pairwise distinct");
  Eigen::Matrix3d m;
  m << 1.0, 1.0, 1.0, v[1] + v[2], v[0] + v[2], v[0] + v[1], v[1] * v[2], v[0] * v[2], v[0] * v[1];
  const Eigen::Vector3d x = m.fullPivLu().solve(Eigen::Vector3d(c4, c5, c6));
  return {x[0], x[1], x[2]};
}

/// Total density to first order in t along characteristics.
inline double taylor_density(const ModelParams& theta, const InitialCondition& ic, double xi,
                             double t) {
  const auto drift = weight_drift(theta, ic.weights());
  double acc = 0.0;
  for (int s = 0; s < 3; ++s)
    acc += (ic.weights()[s] + t * drift[s]) * ic.profile_value(xi - theta.v[s] * t);
  return acc;
}

/// det F with F_zs = f((v_z - v_s) t). Writing F = f(0) (J + H), J the all-ones
/// matrix and H the relative deficits, det F = f(0)^3 (det H + 1^T adj(H) 1),
/// which avoids subtracting nearly equal entries.
inline double f_matrix_determinant(const InitialCondition& ic, const Vec3& v, double t) {
  const double f0 = ic.profile_value(0.0);
  long double h[3][3];
  for (int z = 0; z < 3; ++z)
    for (int s = 0; s < 3; ++s) h[z][s] = ic.relative_deficit((v[z] - v[s]) * t);
  auto cof = [&](int i, int j) {
    const int r0 = i == 0 ? 1 : 0, r1 = i == 2 ? 1 : 2;
    const int c0 = j == 0 ? 1 : 0, c1 = j == 2 ? 1 : 2;
    const long double minor = h[r0][c0] * h[r1][c1] - h[r0][c1] * h[r1][c0];
    return ((i + j) % 2 == 0 ? 1.0L : -1.0L) * minor;
  };
  long double det_h = 0.0L, adj_sum = 0.0L;
  for (int j = 0; j < 3; ++j) det_h += h[0][j] * cof(0, j);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) adj_sum += cof(i, j);
  return double(static_cast<long double>(f0) * f0 * f0 * (det_h + adj_sum));
}

inline double velocity_discriminant(const Vec3& v) {
  const double d = (v[0] - v[1]) * (v[1] - v[2]) * (v[2] - v[0]);
  return d * d;
}

/// f''(0)^3 / 4 * prod (v_i - v_j)^2 * t^6, the leading term as usually quoted.
inline double f_matrix_leading_term(const InitialCondition& ic, const Vec3& v, double t) {
  const double f2 = ic.profile_derivative_at_zero(2);
  return f2 * f2 * f2 / 4.0 * velocity_discriminant(v) * std::pow(t, 6);
}

/// (f''(0)^3 - f(0) f''(0) f''''(0)) / 4 * prod (v_i - v_j)^2 * t^6, the actual
/// t^6 coefficient once the fourth-order Taylor terms of f are kept.
inline double f_matrix_leading_term_full(const InitialCondition& ic, const Vec3& v, double t) {
  const double f0 = ic.profile_derivative_at_zero(0);
  const double f2 = ic.profile_derivative_at_zero(2);
  const double f4 = ic.profile_derivative_at_zero(4);
  return (f2 * f2 * f2 - f0 * f2 * f4) / 4.0 * velocity_discriminant(v) * std::pow(t, 6);
}

}  // namespace vjump
