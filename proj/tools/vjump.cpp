// Command-line front end. Exit codes: 0 success, 2 configuration or
// validation error, 3 estimation failure, 4 solver exhaustion.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vjump/vjump.hpp"

namespace fs = std::filesystem;
using namespace vjump;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kEstimation = 3;
constexpr int kExhausted = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoCompletedDwells:
    case ErrorCode::IndistinguishableStates:
    case ErrorCode::FitDiverged:
    case ErrorCode::NoSolutionInBox:
    case ErrorCode::InconsistentC:
    case ErrorCode::ComplexRoots:
    case ErrorCode::SingularSystem:
      return kEstimation;
    case ErrorCode::SolverExhausted:
      return kExhausted;
    default:
      return kConfig;
  }
}

struct Options {
  std::string model;
  std::string model_b;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::string solver = "upwind";
  double dx = 0.01;
  double dt = 0.00045;
  double t_final = 0.5;
  std::vector<double> snapshots;
  int modes = 1024;
  long long trajectories = 10000;
  double horizon = 50.0;
  long long samples = 100000;
  std::vector<double> times;
};

fs::path output_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::InvalidArgument, "cannot create output directory " + dir.string());
  return dir;
}

std::uint64_t require_seed(const Options& o) {
  if (!o.seed) throw Error(ErrorCode::InvalidArgument, "--seed is required for this subcommand");
  return *o.seed;
}

std::vector<double> snapshot_times(const Options& o) {
  if (!o.snapshots.empty()) return o.snapshots;
  return {0.0, 0.5 * o.t_final, o.t_final};
}

Json grid_json(const Options& o, double half_width) {
  return {{"half_width", half_width}, {"dx", o.dx}, {"dt", o.dt}, {"t_final", o.t_final}, {"modes", o.modes}};
}

DensityField run_solver(const Options& o, const ModelSpec& m, const std::vector<double>& times) {
  const Grid grid{m.ic.half_width(), o.dx, o.dt, o.t_final};
  if (o.solver == "upwind") return solve_upwind(m.theta, m.ic, grid, times);
  return solve_spectral(m.theta, m.ic, o.modes, times, grid.points());
}

int cmd_simulate(const Options& o) {
  const auto m = load_model(o.model);
  const auto seed = require_seed(o);
  if (o.trajectories <= 0) throw Error(ErrorCode::InvalidArgument, "--trajectories must be > 0");
  if (!(o.horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "--horizon must be > 0");
  const auto dir = output_dir(o);
  const auto trajs = simulate_ensemble(m.theta, m.ic, std::size_t(o.trajectories), o.horizon, seed);
  write_atomic(dir / "trajectories.csv", trajectories_csv(trajs));
  const auto est = estimate_from_ensemble(trajs).aligned_to(m.theta.v);
  auto j = to_json(est);
  j["seed"] = seed;
  j["horizon"] = o.horizon;
  write_atomic(dir / "estimate.json", j.dump(2) + "\n");
  std::cout << "wrote " << (dir / "trajectories.csv").string() << " and estimate.json\n";
  return kOk;
}

int cmd_density(const Options& o) {
  const auto m = load_model(o.model);
  const auto dir = output_dir(o);
  const auto field = run_solver(o, m, snapshot_times(o));
  write_atomic(dir / "density.csv", density_csv(field));
  write_atomic(dir / "density.json",
               density_metadata(field, m.theta, m.ic, grid_json(o, m.ic.half_width())).dump(2) + "\n");
  std::cout << "wrote " << (dir / "density.csv").string() << " (" << field.snapshots.size()
            << " snapshots, " << to_string(field.solver) << ")\n";
  return kOk;
}

int cmd_equivalents(const Options& o) {
  const auto m = load_model(o.model);
  const auto dir = output_dir(o);
  const auto cls = find_equivalent_parameters(m.theta, m.ic.weights(), m.ic);
  write_atomic(dir / "equivalence.json", to_json(cls).dump(2) + "\n");
  write_atomic(dir / "equivalence_trace.csv", equivalence_trace_csv(cls));
  std::cout << cls.members.size() << " member(s)\n";
  for (const auto& mem : cls.members)
    std::cout << "  p12=" << num(mem.theta.p12) << " p21=" << num(mem.theta.p21)
              << " p31=" << num(mem.theta.p31) << "  " << to_string(mem.certification.verdict) << "\n";
  return kOk;
}

int cmd_compare(const Options& o) {
  if (o.model_b.empty()) throw Error(ErrorCode::InvalidArgument, "--model-b is required");
  const auto a = load_model(o.model);
  const auto b = load_model(o.model_b);
  if (to_json(a.ic.with_weights(b.ic.weights())) != to_json(b.ic))
    throw Error(ErrorCode::GridMismatch, "models must share the initial profile and domain");
  const auto dir = output_dir(o);
  std::vector<double> times = o.snapshots;
  if (times.empty())
    for (int i = 0; i <= 50; ++i) times.push_back(o.t_final * i / 50.0);
  const auto trace = linf_difference(run_solver(o, a, times), run_solver(o, b, times));
  write_atomic(dir / "compare.csv", linf_csv(trace));

  const CertificationSettings cfg;
  double coeff_dev = 0.0, linf = 0.0;
  const auto ca = detail::raw_coefficients(a.theta, a.ic.weights());
  const auto cb = detail::raw_coefficients(b.theta, b.ic.weights());
  for (std::size_t i = 0; i < 15; ++i) coeff_dev = std::max(coeff_dev, std::abs(ca[i] - cb[i]));
  for (const auto& p : trace) linf = std::max(linf, p.linf);
  Verdict v = Verdict::Inconclusive;
  if (coeff_dev <= cfg.coeff_tol && linf <= cfg.equivalent_linf) v = Verdict::Equivalent;
  else if (linf >= cfg.distinct_linf) v = Verdict::Distinct;
  std::cout << "verdict: " << to_string(v) << " (max linf " << num(linf) << ", max coefficient deviation "
            << num(coeff_dev) << ", solver " << o.solver << ")\n";
  return kOk;
}

int cmd_coeffs(const Options& o) {
  const auto m = load_model(o.model);
  const auto dir = output_dir(o);
  const auto deg = classify_velocity_degeneracy(m.theta);
  Json j;
  if (deg.kind == VelocityDegeneracy::Kind::TwoEqual) {
    const auto e = compute_equal_velocity_coefficients(m.theta, m.ic.weights());
    j["chat"] = e.chat;
    j["k"] = e.k;
    j["chat9_13"] = e.chat9;
    j["relabel"] = e.relabel;
    j["degeneracy"] = to_string(deg);
  } else {
    j = to_json(compute_coefficients(m.theta, m.ic.weights()));
  }
  write_atomic(dir / "coefficients.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_fmatrix(const Options& o) {
  const auto m = load_model(o.model);
  const auto dir = output_dir(o);
  std::vector<double> times = o.times;
  if (times.empty())
    for (int e = 0; e <= 16; ++e) times.push_back(std::pow(10.0, -1.0 - 0.25 * e));
  std::string csv = "t,det,lead_f2,lead_f2f4,ratio_f2,ratio_f2f4\n";
  for (double t : times) {
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "times must be > 0");
    const double det = f_matrix_determinant(m.ic, m.theta.v, t);
    const double l2 = f_matrix_leading_term(m.ic, m.theta.v, t);
    const double l4 = f_matrix_leading_term_full(m.ic, m.theta.v, t);
    csv += num(t) + "," + num(det) + "," + num(l2) + "," + num(l4) + "," + num(det / l2) + "," +
           num(det / l4) + "\n";
  }
  write_atomic(dir / "fmatrix.csv", csv);
  std::cout << csv;
  return kOk;
}

int cmd_dwell_fit(const Options& o) {
  const auto m = load_model(o.model);
  const auto seed = require_seed(o);
  if (o.samples < 1000) throw Error(ErrorCode::InvalidArgument, "--samples must be >= 1000");
  const auto dir = output_dir(o);
  const auto samples = simulate_merged_dwells(m.theta, std::size_t(o.samples), seed);
  const auto truth = merged_dwell_law(m.theta);
  const auto fit = fit_merged_dwell_survival(samples);
  auto law_json = [](const MergedDwellLaw& l) {
    return Json{{"A", l.A}, {"B", l.B}, {"C", l.C}, {"D", l.D}, {"lambda2", l.lambda2}, {"lambda3", l.lambda3}};
  };
  Json j;
  j["seed"] = seed;
  j["samples"] = o.samples;
  j["true_law"] = law_json(truth);
  j["fitted_law"] = law_json(fit.law);
  j["fitted_probs"] = {{"p12", fit.probs.p12}, {"p21", fit.probs.p21}, {"p31", fit.probs.p31}};
  j["rms_residual"] = fit.rms_residual;
  write_atomic(dir / "dwell_fit.json", j.dump(2) + "\n");
  std::string csv = "t,empirical,fitted,exact\n";
  for (std::size_t i = 0; i < fit.grid.size(); ++i) {
    const double t = fit.grid[i];
    csv += num(t) + "," + num(fit.empirical[i]) + "," + num(merged_dwell_survival(fit.law, t)) + "," +
           num(merged_dwell_survival_exact(m.theta, t)) + "\n";
  }
  write_atomic(dir / "dwell_fit.csv", csv);
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-state velocity-jump process: simulation, densities and identifiability"};
  app.require_subcommand(1);
  Options o;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "model JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
  };
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--solver", o.solver, "upwind or spectral")
        ->check(CLI::IsMember({"upwind", "spectral"}));
    sub->add_option("--dx", o.dx, "spatial step");
    sub->add_option("--dt", o.dt, "time step (upwind)");
    sub->add_option("--t-final", o.t_final, "final time");
    sub->add_option("--snapshots", o.snapshots, "output times")->delimiter(',');
    sub->add_option("--modes", o.modes, "Fourier modes (spectral)");
  };

  auto* sim = app.add_subcommand("simulate", "simulate trajectories and estimate parameters");
  add_model(sim);
  sim->add_option("--seed", o.seed, "master seed");
  sim->add_option("--trajectories", o.trajectories, "number of trajectories");
  sim->add_option("--horizon", o.horizon, "simulated time per trajectory");

  auto* den = app.add_subcommand("density", "solve for the population densities");
  add_model(den);
  add_grid(den);

  auto* eq = app.add_subcommand("equivalents", "enumerate parameter sets with identical coefficients");
  add_model(eq);

  auto* cmp = app.add_subcommand("compare", "L-infinity trace between two models' total densities");
  add_model(cmp);
  cmp->add_option("--model-b", o.model_b, "second model JSON file")->required()->check(CLI::ExistingFile);
  add_grid(cmp);

  auto* co = app.add_subcommand("coeffs", "identifiability coefficients");
  add_model(co);

  auto* fm = app.add_subcommand("fmatrix", "det F against its small-t leading terms");
  add_model(fm);
  fm->add_option("--times", o.times, "evaluation times")->delimiter(',');

  auto* dw = app.add_subcommand("dwell-fit", "fit the merged-dwell survival of a two-equal-velocity model");
  add_model(dw);
  dw->add_option("--seed", o.seed, "master seed");
  dw->add_option("--samples", o.samples, "number of merged dwells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*den) return cmd_density(o);
    if (*eq) return cmd_equivalents(o);
    if (*cmp) return cmd_compare(o);
    if (*co) return cmd_coeffs(o);
    if (*fm) return cmd_fmatrix(o);
    if (*dw) return cmd_dwell_fit(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kConfig;
}
