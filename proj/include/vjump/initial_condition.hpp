#pragma once

// Separable initial condition n_s(x,0) = a_s f(x) on the periodic domain [-L, L).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <variant>
#include <vector>

#include "vjump/error.hpp"
#include "vjump/model.hpp"
#include "vjump/rng.hpp"

namespace vjump {

/// f(x) = exp(-x^2/sigma^2) / sqrt(pi sigma^2), unit mass.
struct GaussianProfile {
  double sigma = 5.0;
};

/// Uniform samples of f on [-L, L) (a trailing sample at +L is accepted and dropped).
struct TabulatedProfile {
  std::vector<double> x;
  std::vector<double> f;
  double mass = 1.0;
};

using Profile = std::variant<GaussianProfile, TabulatedProfile>;

inline double wrap_periodic(double x, double half_width) {
  const double period = 2.0 * half_width;
  double y = std::fmod(x + half_width, period);
  if (y < 0.0) y += period;
  return y - half_width;
}

class InitialCondition {
 public:
  InitialCondition(Weights a, Profile profile, double half_width = 40.0)
      : a_(a), profile_(std::move(profile)), half_width_(half_width) {
    validate_weights(a_);
    if (!(half_width_ > 0.0)) throw Error(ErrorCode::InvalidInitialCondition, "L must be > 0");
    if (auto* g = std::get_if<GaussianProfile>(&profile_)) {
      if (!(g->sigma > 0.0)) throw Error(ErrorCode::InvalidInitialCondition, "sigma must be > 0");
    } else {
      normalize_table(std::get<TabulatedProfile>(profile_));
    }
  }

  const Weights& weights() const { return a_; }
  const Profile& profile() const { return profile_; }
  double half_width() const { return half_width_; }
  bool is_gaussian() const { return std::holds_alternative<GaussianProfile>(profile_); }

  InitialCondition with_weights(const Weights& a) const {
    InitialCondition copy = *this;
    validate_weights(a);
    copy.a_ = a;
    return copy;
  }

  /// Periodic extension of f.
  double profile_value(double x) const {
    const double y = wrap_periodic(x, half_width_);
    if (auto* g = std::get_if<GaussianProfile>(&profile_)) {
      const double s2 = g->sigma * g->sigma;
      return std::exp(-y * y / s2) / std::sqrt(std::numbers::pi * s2);
    }
    const auto& t = std::get<TabulatedProfile>(profile_);
    const double dx = table_dx_;
    const double pos = (y - t.x.front()) / dx;
    const auto n = static_cast<long long>(t.f.size());
    const auto cell = static_cast<long long>(std::floor(pos));
    const double frac = pos - double(cell);
    const auto i = static_cast<std::size_t>(((cell % n) + n) % n);
    return (1.0 - frac) * t.f[i] + frac * t.f[(i + 1) % t.f.size()];
  }

  /// f(d)/f(0) - 1, computed without cancellation for the Gaussian.
  double relative_deficit(double d) const {
    if (auto* g = std::get_if<GaussianProfile>(&profile_)) {
      const double y = wrap_periodic(d, half_width_);
      return std::expm1(-y * y / (g->sigma * g->sigma));
    }
    return profile_value(d) / profile_value(0.0) - 1.0;
  }

  /// Fourier coefficient (1/2L) \int f(x) e^{-ikx} dx at k = pi m / L.
  std::complex<double> fourier_coefficient(int m) const {
    const double k = std::numbers::pi * m / half_width_;
    if (auto* g = std::get_if<GaussianProfile>(&profile_)) {
      return std::exp(-k * k * g->sigma * g->sigma / 4.0) / (2.0 * half_width_);
    }
    const auto& t = std::get<TabulatedProfile>(profile_);
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < t.f.size(); ++j) acc += t.f[j] * std::polar(1.0, -k * t.x[j]);
    return acc / double(t.f.size());
  }

  /// Derivative of order `order` (0, 2 or 4) at x = 0.
  double profile_derivative_at_zero(int order) const {
    if (auto* g = std::get_if<GaussianProfile>(&profile_)) {
      const double s2 = g->sigma * g->sigma;
      const double f0 = 1.0 / std::sqrt(std::numbers::pi * s2);
      switch (order) {
        case 0: return f0;
        case 2: return -2.0 * f0 / s2;
        case 4: return 12.0 * f0 / (s2 * s2);
        default: break;
      }
      throw Error(ErrorCode::InvalidArgument, "unsupported derivative order");
    }
    // Derivatives of the trigonometric interpolant of the table.
    const auto n = int(std::get<TabulatedProfile>(profile_).f.size());
    double acc = 0.0;
    for (int m = -n / 2; m < (n + 1) / 2; ++m) {
      const double k = std::numbers::pi * m / half_width_;
      acc += (fourier_coefficient(m) * std::pow(std::complex<double>(0.0, k), order)).real();
    }
    return acc;
  }

  /// Draw an initial position from f.
  double sample_position(Stream& rng) const {
    if (auto* g = std::get_if<GaussianProfile>(&profile_)) {
      return rng.normal() * g->sigma / std::numbers::sqrt2;
    }
    const auto& t = std::get<TabulatedProfile>(profile_);
    const double u = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto cell = std::min<std::size_t>(std::size_t(it - cdf_.begin()), t.f.size() - 1);
    return t.x[cell] + rng.uniform() * table_dx_;
  }

 private:
  void normalize_table(TabulatedProfile& t) {
    if (t.x.size() != t.f.size() || t.x.size() < 4)
      throw Error(ErrorCode::InvalidInitialCondition, "tabulated profile needs matching x/f (>= 4)");
    const double dx = t.x[1] - t.x[0];
    if (!(dx > 0.0)) throw Error(ErrorCode::InvalidInitialCondition, "x must increase");
    for (std::size_t j = 1; j < t.x.size(); ++j)
      if (std::abs(t.x[j] - t.x[j - 1] - dx) > 1e-9 * std::max(1.0, dx * t.x.size()))
        throw Error(ErrorCode::InvalidInitialCondition, "tabulated x must be uniform");
    if (std::abs(t.x.front() + half_width_) > 1e-9 * half_width_)
      throw Error(ErrorCode::InvalidInitialCondition, "tabulated x must start at -L");
    if (std::abs(t.x.back() - half_width_) <= 1e-9 * half_width_) {
      t.x.pop_back();
      t.f.pop_back();
    }
    if (std::abs(t.x.back() + dx - half_width_) > 1e-9 * half_width_)
      throw Error(ErrorCode::InvalidInitialCondition, "tabulated x must cover [-L, L)");
    for (double f : t.f)
      if (!(f >= 0.0)) throw Error(ErrorCode::InvalidInitialCondition, "profile must be >= 0");
    table_dx_ = dx;
    cdf_.resize(t.f.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < t.f.size(); ++j) cdf_[j] = (acc += t.f[j] * dx);
    if (std::abs(acc - t.mass) > 1e-6)
      throw Error(ErrorCode::InvalidInitialCondition,
                  "tabulated profile mass " + std::to_string(acc) + " != " + std::to_string(t.mass));
  }

  Weights a_;
  Profile profile_;
  double half_width_;
  double table_dx_ = 0.0;
  std::vector<double> cdf_;
};

}  // namespace vjump
