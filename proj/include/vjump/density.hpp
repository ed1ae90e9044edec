#pragma once

// Population densities n_s(x,t) of the reaction-advection system
//   d_t n_s + v_s d_x n_s = sum_u q_us n_u
// on the periodic domain [-L, L), by first-order upwinding and by an
// exact-in-time Fourier propagator.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "vjump/error.hpp"
#include "vjump/initial_condition.hpp"
#include "vjump/model.hpp"
#include "vjump/parallel.hpp"

namespace vjump {

enum class Solver { Upwind, Spectral };

inline std::string to_string(Solver s) { return s == Solver::Upwind ? "upwind" : "spectral"; }

struct Grid {
  double half_width = 40.0;
  double dx = 0.01;
  double dt = 0.00045;
  double t_final = 0.5;

  std::size_t cells() const {
    const double n = 2.0 * half_width / dx;
    const double rounded = std::round(n);
    if (!(dx > 0.0) || std::abs(n - rounded) > 1e-9 * std::max(1.0, n) || rounded < 1.0)
      throw Error(ErrorCode::GridMismatch, "2L/dx = " + std::to_string(n) + " is not an integer");
    return std::size_t(rounded);
  }

  std::vector<double> points() const {
    const auto n = cells();
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = -half_width + double(j) * dx;
    return x;
  }
};

inline double max_abs_velocity(const ModelParams& theta) {
  return std::max({std::abs(theta.v[0]), std::abs(theta.v[1]), std::abs(theta.v[2])});
}

/// Largest dt <= cfl / (max|v|/dx + max lambda) that divides t_final evenly.
inline double stable_time_step(const ModelParams& theta, double dx, double t_final,
                               double cfl = 0.9) {
  const double lambda_max = std::max({theta.lambda[0], theta.lambda[1], theta.lambda[2]});
  const double dt_max = cfl / (max_abs_velocity(theta) / dx + lambda_max);
  const double steps = std::ceil(t_final / dt_max - 1e-12);
  return t_final / std::max(1.0, steps);
}

struct Snapshot {
  double requested_t = 0.0;
  double t = 0.0;  // time actually represented (nearest step for upwind)
  std::array<std::vector<double>, 3> n;
  std::vector<double> total;
};

/// Mode amplitudes that define a spectral solution at every (x, t).
struct SpectralState {
  ModelParams theta;
  double half_width = 0.0;
  std::vector<int> modes;                   // m >= 0 with non-negligible amplitude
  std::vector<Eigen::Vector3cd> initial;    // a_s fhat_m
  std::vector<Eigen::Matrix3cd> generator;  // Q^T - i k_m V
  std::optional<InitialCondition> ic;       // evaluated directly at t = 0

  double wavenumber(std::size_t i) const { return std::numbers::pi * modes[i] / half_width; }
};

struct DensityField {
  Solver solver = Solver::Upwind;
  std::vector<double> x;
  std::vector<Snapshot> snapshots;
  std::shared_ptr<const SpectralState> spectral;  // set for spectral solutions only
};

inline double total_mass(const Snapshot& s, double dx) {
  double acc = 0.0;
  for (double v : s.total) acc += v;
  return acc * dx;
}

namespace detail {

inline void check_finite(const Snapshot& s) {
  for (const auto& state : s.n)
    for (double v : state)
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteDensity, "density blew up before t = " + std::to_string(s.t));
}

inline void fill_total(Snapshot& s) {
  s.total.resize(s.n[0].size());
  for (std::size_t j = 0; j < s.total.size(); ++j) s.total[j] = s.n[0][j] + s.n[1][j] + s.n[2][j];
}

inline std::vector<double> sorted_times(std::vector<double> times, double fallback) {
  if (times.empty()) times.push_back(fallback);
  for (double t : times)
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "snapshot times must be >= 0");
  std::sort(times.begin(), times.end());
  return times;
}

}  // namespace detail

inline void check_cfl(const ModelParams& theta, const Grid& grid) {
  const double courant = grid.dt * max_abs_velocity(theta) / grid.dx;
  if (!(grid.dt > 0.0) || courant > 1.0 + 1e-12)
    throw Error(ErrorCode::CflViolation, "dt*max|v|/dx = " + std::to_string(courant) +
                                             " > 1 (dt=" + std::to_string(grid.dt) +
                                             ", dx=" + std::to_string(grid.dx) + ")");
}

/// Explicit first-order upwind advection with forward-Euler reaction coupling.
/// Snapshots land on the nearest whole step; Snapshot::t records that time.
inline DensityField solve_upwind(const ModelParams& theta, const InitialCondition& ic,
                                 const Grid& grid, std::vector<double> times = {}) {
  if (std::abs(grid.half_width - ic.half_width()) > 1e-12 * ic.half_width())
    throw Error(ErrorCode::GridMismatch, "grid and initial condition disagree on L");
  const auto n = grid.cells();
  check_cfl(theta, grid);
  times = detail::sorted_times(std::move(times), grid.t_final);

  DensityField field;
  field.solver = Solver::Upwind;
  field.x = grid.points();

  const auto q = build_transition_matrix(theta).q;
  std::array<std::vector<double>, 3> cur, next;
  for (int s = 0; s < 3; ++s) {
    cur[s].resize(n);
    next[s].resize(n);
    for (std::size_t j = 0; j < n; ++j) cur[s][j] = ic.weights()[s] * ic.profile_value(field.x[j]);
  }

  std::size_t step = 0;
  for (double t_req : times) {
    const auto target = static_cast<std::size_t>(std::llround(t_req / grid.dt));
    for (; step < target; ++step) {
      for (int s = 0; s < 3; ++s) {
        const double nu = theta.v[s] * grid.dt / grid.dx;
        const auto& ns = cur[s];
        auto& out = next[s];
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t left = j == 0 ? n - 1 : j - 1;
          const std::size_t right = j + 1 == n ? 0 : j + 1;
          const double flux = nu >= 0.0 ? nu * (ns[j] - ns[left]) : nu * (ns[right] - ns[j]);
          double react = 0.0;
          for (int u = 0; u < 3; ++u) react += q(u, s) * cur[u][j];
          out[j] = ns[j] - flux + grid.dt * react;
        }
      }
      std::swap(cur, next);
    }
    Snapshot snap;
    snap.requested_t = t_req;
    snap.t = double(step) * grid.dt;
    snap.n = cur;
    detail::check_finite(snap);
    detail::fill_total(snap);
    field.snapshots.push_back(std::move(snap));
  }
  return field;
}

/// Builds the mode representation; modes below 1e-17 of the mean are dropped.
/// With couple_states = false the switching term is dropped (pure advection).
inline std::shared_ptr<SpectralState> spectral_state(const ModelParams& theta,
                                                     const InitialCondition& ic, int n_modes,
                                                     bool couple_states = true) {
  if (n_modes < 256 || (n_modes & (n_modes - 1)) != 0)
    throw Error(ErrorCode::InvalidArgument, "n_modes must be a power of two >= 256");
  const auto f0 = std::abs(ic.fourier_coefficient(0));
  const auto tail = std::abs(ic.fourier_coefficient(n_modes / 2));
  if (tail > 1e-12 * f0)
    throw Error(ErrorCode::ProfileNotResolved,
                "profile spectrum at the truncation mode is " + std::to_string(tail / f0) +
                    " of its peak");

  auto state = std::make_shared<SpectralState>();
  state->theta = theta;
  state->half_width = ic.half_width();
  state->ic = ic;
  const Eigen::Matrix3d qt =
      couple_states ? Eigen::Matrix3d(build_transition_matrix(theta).q.transpose())
                    : Eigen::Matrix3d::Zero();
  for (int m = 0; m < n_modes / 2; ++m) {
    const auto fhat = ic.fourier_coefficient(m);
    if (std::abs(fhat) <= 1e-17 * f0) continue;
    const double k = std::numbers::pi * m / ic.half_width();
    Eigen::Matrix3cd gen = qt.cast<std::complex<double>>();
    for (int s = 0; s < 3; ++s) gen(s, s) -= std::complex<double>(0.0, k * theta.v[s]);
    Eigen::Vector3cd amp;
    for (int s = 0; s < 3; ++s) amp[s] = ic.weights()[s] * fhat;
    state->modes.push_back(m);
    state->initial.push_back(amp);
    state->generator.push_back(gen);
  }
  return state;
}

/// Mode amplitudes d^j/dt^j nhat_m(t) for every retained mode.
inline std::vector<Eigen::Vector3cd> mode_amplitudes(const SpectralState& st, double t,
                                                     int time_order = 0) {
  std::vector<Eigen::Vector3cd> out(st.modes.size());
  for (std::size_t i = 0; i < st.modes.size(); ++i) {
    const Eigen::Matrix3cd& gen = st.generator[i];
    Eigen::Vector3cd amp = t == 0.0 ? st.initial[i] : Eigen::Vector3cd((gen * t).exp() * st.initial[i]);
    for (int j = 0; j < time_order; ++j) amp = gen * amp;
    out[i] = amp;
  }
  return out;
}

/// Real field sum_m (i k_m)^space_order amp_m e^{i k_m x} for one state (or the
/// total when state < 0), using conjugate symmetry of a real solution.
inline std::vector<double> synthesize(const SpectralState& st,
                                      const std::vector<Eigen::Vector3cd>& amps,
                                      const std::vector<double>& x, int state,
                                      int space_order = 0) {
  std::vector<std::complex<double>> coef(st.modes.size());
  for (std::size_t i = 0; i < st.modes.size(); ++i) {
    const std::complex<double> a = state < 0 ? amps[i].sum() : amps[i][state];
    const std::complex<double> ik(0.0, st.wavenumber(i));
    coef[i] = a * std::pow(ik, space_order) * (st.modes[i] == 0 ? 1.0 : 2.0);
  }
  std::vector<double> out(x.size());
  parallel_for(x.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < coef.size(); ++i)
        acc += (coef[i] * std::polar(1.0, st.wavenumber(i) * x[j])).real();
      out[j] = acc;
    }
  });
  return out;
}

inline DensityField sample_spectral(std::shared_ptr<const SpectralState> st,
                                    const std::vector<double>& times, std::vector<double> x) {
  DensityField field;
  field.solver = Solver::Spectral;
  field.x = std::move(x);
  for (double t : detail::sorted_times(times, 0.0)) {
    const auto amps = mode_amplitudes(*st, t);
    Snapshot snap;
    snap.requested_t = t;
    snap.t = t;
    for (int s = 0; s < 3; ++s) {
      if (t == 0.0 && st->ic) {
        snap.n[s].resize(field.x.size());
        for (std::size_t j = 0; j < field.x.size(); ++j)
          snap.n[s][j] = st->ic->weights()[s] * st->ic->profile_value(field.x[j]);
      } else {
        snap.n[s] = synthesize(*st, amps, field.x, s);
      }
    }
    detail::check_finite(snap);
    detail::fill_total(snap);
    field.snapshots.push_back(std::move(snap));
  }
  field.spectral = std::move(st);
  return field;
}

/// Fourier solution sampled at x_out (default: the n_modes collocation points).
inline DensityField solve_spectral(const ModelParams& theta, const InitialCondition& ic,
                                   int n_modes, const std::vector<double>& times,
                                   std::vector<double> x_out = {}) {
  auto st = spectral_state(theta, ic, n_modes);
  if (x_out.empty()) {
    const double h = 2.0 * ic.half_width() / n_modes;
    x_out.resize(std::size_t(n_modes));
    for (int j = 0; j < n_modes; ++j) x_out[std::size_t(j)] = -ic.half_width() + j * h;
  }
  return sample_spectral(std::move(st), times, std::move(x_out));
}

/// Diagnostic: the spectral solution with Q = 0, so n_s(x,t) = a_s f(x - v_s t).
inline DensityField solve_spectral_advection(const ModelParams& theta, const InitialCondition& ic,
                                             int n_modes, const std::vector<double>& times) {
  auto st = spectral_state(theta, ic, n_modes, false);
  const double h = 2.0 * ic.half_width() / n_modes;
  std::vector<double> x(static_cast<std::size_t>(n_modes));
  for (int j = 0; j < n_modes; ++j) x[std::size_t(j)] = -ic.half_width() + j * h;
  return sample_spectral(std::move(st), times, std::move(x));
}

struct LinfPoint {
  double t = 0.0;
  double linf = 0.0;
};

inline std::vector<LinfPoint> linf_difference(const DensityField& a, const DensityField& b) {
  if (a.x.size() != b.x.size() || a.snapshots.size() != b.snapshots.size())
    throw Error(ErrorCode::GridMismatch, "fields have different grids or snapshot counts");
  for (std::size_t j = 0; j < a.x.size(); ++j)
    if (std::abs(a.x[j] - b.x[j]) > 1e-12 * std::max(1.0, std::abs(a.x[j])))
      throw Error(ErrorCode::GridMismatch, "x grids differ");
  std::vector<LinfPoint> out;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const auto& sa = a.snapshots[k];
    const auto& sb = b.snapshots[k];
    if (std::abs(sa.t - sb.t) > 1e-12 * std::max(1.0, sa.t))
      throw Error(ErrorCode::GridMismatch, "snapshot times differ");
    double m = 0.0;
    for (std::size_t j = 0; j < sa.total.size(); ++j)
      m = std::max(m, std::abs(sa.total[j] - sb.total[j]));
    out.push_back({sa.t, m});
  }
  return out;
}

struct RefinementPoint {
  double dx = 0.0;
  double dt = 0.0;
  double t = 0.0;
  double bound = 0.0;
};

/// Upwind-vs-spectral distance at t_final for each dx (dt from stable_time_step).
inline std::vector<RefinementPoint> grid_refinement_error_bound(
    const ModelParams& theta, const InitialCondition& ic, const std::vector<double>& dx_list,
    double t_final = 0.5, int n_modes = 1024) {
  for (std::size_t i = 1; i < dx_list.size(); ++i)
    if (!(dx_list[i] < dx_list[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "dx list must be strictly descending");
  auto st = spectral_state(theta, ic, n_modes);
  std::vector<RefinementPoint> out;
  for (double dx : dx_list) {
    Grid grid{ic.half_width(), dx, stable_time_step(theta, dx, t_final), t_final};
    const auto upwind = solve_upwind(theta, ic, grid, {t_final});
    const auto reference = sample_spectral(st, {upwind.snapshots[0].t}, upwind.x);
    out.push_back({dx, grid.dt, upwind.snapshots[0].t, linf_difference(upwind, reference)[0].linf});
  }
  return out;
}

using IoCoefficients = std::array<double, 8>;

/// Relative residual of
///   N03 + c1 N12 + c2 N21 + c3 N30 + c4 N02 + c5 N11 + c6 N20 + c7 N01 + c8 N10 = 0
/// (Nij = d^i_x d^j_t N) over every snapshot and grid point, normalised by the
/// largest single term.
inline double io_equation_residual(const DensityField& field, const IoCoefficients& c) {
  if (!field.spectral)
    throw Error(ErrorCode::RequiresSpectralField, "derivatives need the spectral representation");
  const auto& st = *field.spectral;
  struct Term {
    int space, time;
    double coef;
  };
  const std::array<Term, 9> terms{{{0, 3, 1.0},
                                   {1, 2, c[0]},
                                   {2, 1, c[1]},
                                   {3, 0, c[2]},
                                   {0, 2, c[3]},
                                   {1, 1, c[4]},
                                   {2, 0, c[5]},
                                   {0, 1, c[6]},
                                   {1, 0, c[7]}}};
  double residual = 0.0;
  double largest = 0.0;
  for (const auto& snap : field.snapshots) {
    std::vector<double> sum(field.x.size(), 0.0);
    std::array<std::vector<Eigen::Vector3cd>, 4> amps;
    for (int j = 0; j < 4; ++j) amps[j] = mode_amplitudes(st, snap.t, j);
    for (const auto& term : terms) {
      const auto values = synthesize(st, amps[term.time], field.x, -1, term.space);
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = term.coef * values[i];
        largest = std::max(largest, std::abs(v));
        sum[i] += v;
      }
    }
    for (double v : sum) residual = std::max(residual, std::abs(v));
  }
  return largest == 0.0 ? 0.0 : residual / largest;
}

}  // namespace vjump
