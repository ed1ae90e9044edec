#pragma once

// On-disk formats: model JSON in, CSV and JSON reports out. Files are written
// to a temporary sibling and renamed into place.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vjump/coefficients.hpp"
#include "vjump/density.hpp"
#include "vjump/equivalence.hpp"
#include "vjump/error.hpp"
#include "vjump/initial_condition.hpp"
#include "vjump/model.hpp"
#include "vjump/trajectory.hpp"

namespace vjump {

using Json = nlohmann::ordered_json;

struct ModelSpec {
  ModelParams theta;
  InitialCondition ic{{1.0 / 3, 1.0 / 3, 1.0 / 3}, GaussianProfile{}};
  bool stationary_weights = true;
};

namespace detail {

inline void require_keys(const Json& j, const std::set<std::string>& allowed,
                         const std::set<std::string>& required, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw Error(ErrorCode::ParseError, "unknown key '" + key + "' in " + where);
  for (const auto& key : required)
    if (!j.contains(key)) throw Error(ErrorCode::ParseError, "missing key '" + key + "' in " + where);
}

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, what + " must be a number");
  return j.get<double>();
}

inline Vec3 triple(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::ParseError, what + " must be an array of three numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

inline std::vector<double> numbers(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, what + " must be an array");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

}  // namespace detail

inline ModelSpec parse_model(const Json& j) {
  detail::require_keys(j, {"velocities", "rates", "probs", "init"}, {"velocities", "rates", "probs"},
                       "model");
  ModelSpec spec;
  spec.theta.v = detail::triple(j["velocities"], "velocities");
  spec.theta.lambda = detail::triple(j["rates"], "rates");
  const auto& p = j["probs"];
  detail::require_keys(p, {"p12", "p21", "p31"}, {"p12", "p21", "p31"}, "probs");
  spec.theta.p12 = detail::number(p["p12"], "p12");
  spec.theta.p21 = detail::number(p["p21"], "p21");
  spec.theta.p31 = detail::number(p["p31"], "p31");
  validate_params(spec.theta);

  Weights w = stationary_distribution(spec.theta).w;
  Profile profile = GaussianProfile{};
  double half_width = 40.0;
  spec.stationary_weights = true;
  if (j.contains("init")) {
    const auto& init = j["init"];
    detail::require_keys(init, {"weights", "profile", "domain_half_width"}, {}, "init");
    if (init.contains("weights")) {
      const auto& jw = init["weights"];
      if (jw.is_string()) {
        if (jw.get<std::string>() != "stationary")
          throw Error(ErrorCode::ParseError, "weights must be an array or \"stationary\"");
      } else {
        w = detail::triple(jw, "weights");
        spec.stationary_weights = false;
      }
    }
    if (init.contains("profile")) {
      const auto& jp = init["profile"];
      if (!jp.is_object() || !jp.contains("type") || !jp["type"].is_string())
        throw Error(ErrorCode::ParseError, "profile needs a string 'type'");
      const auto type = jp["type"].get<std::string>();
      if (type == "gaussian") {
        detail::require_keys(jp, {"type", "sigma"}, {"type"}, "gaussian profile");
        GaussianProfile g;
        if (jp.contains("sigma")) g.sigma = detail::number(jp["sigma"], "sigma");
        profile = g;
      } else if (type == "tabulated") {
        detail::require_keys(jp, {"type", "x", "f", "mass"}, {"type", "x", "f"}, "tabulated profile");
        TabulatedProfile t;
        t.x = detail::numbers(jp["x"], "x");
        t.f = detail::numbers(jp["f"], "f");
        if (jp.contains("mass")) t.mass = detail::number(jp["mass"], "mass");
        profile = t;
      } else {
        throw Error(ErrorCode::ParseError, "unknown profile type '" + type + "'");
      }
    }
    if (init.contains("domain_half_width"))
      half_width = detail::number(init["domain_half_width"], "domain_half_width");
  }
  spec.ic = InitialCondition(w, std::move(profile), half_width);
  return spec;
}

inline ModelSpec parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed JSON: ") + e.what());
  }
  return parse_model(j);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ModelSpec load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Shortest text that reads back as the same double.
inline std::string num(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline Json to_json(const ModelParams& th) {
  Json j;
  j["velocities"] = {th.v[0], th.v[1], th.v[2]};
  j["rates"] = {th.lambda[0], th.lambda[1], th.lambda[2]};
  j["probs"] = {{"p12", th.p12}, {"p21", th.p21}, {"p31", th.p31}};
  return j;
}

inline Json to_json(const InitialCondition& ic) {
  Json j;
  j["weights"] = {ic.weights()[0], ic.weights()[1], ic.weights()[2]};
  if (const auto* g = std::get_if<GaussianProfile>(&ic.profile())) {
    j["profile"] = {{"type", "gaussian"}, {"sigma", g->sigma}};
  } else {
    const auto& t = std::get<TabulatedProfile>(ic.profile());
    j["profile"] = {{"type", "tabulated"}, {"x", t.x}, {"f", t.f}, {"mass", t.mass}};
  }
  j["domain_half_width"] = ic.half_width();
  return j;
}

inline std::string trajectories_csv(const std::vector<Trajectory>& trajs) {
  std::string out = "traj_id,t,x,state\n";
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (const auto& e : trajs[i].events)
      out += std::to_string(i) + "," + num(e.t) + "," + num(e.x) + "," + std::to_string(e.state + 1) + "\n";
    out += std::to_string(i) + "," + num(trajs[i].horizon) + "," + num(trajs[i].final_position) + "," +
           std::to_string(trajs[i].events.back().state + 1) + "\n";
  }
  return out;
}

inline Json to_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

inline Json to_json(const EnsembleEstimate& est) {
  Json j;
  auto three = [](const std::array<Estimate, 3>& a) {
    return Json::array({to_json(a[0]), to_json(a[1]), to_json(a[2])});
  };
  j["trajectories"] = est.trajectories;
  j["velocities"] = three(est.v);
  j["rates"] = three(est.lambda);
  j["probs"] = {{"p12", to_json(est.p12())}, {"p21", to_json(est.p21())}, {"p31", to_json(est.p31())}};
  j["weights"] = three(est.a);
  j["completed_dwells"] = est.completed_dwells;
  return j;
}

inline std::string density_csv(const DensityField& field) {
  std::string out = "t,x,n1,n2,n3,N\n";
  for (const auto& s : field.snapshots)
    for (std::size_t j = 0; j < field.x.size(); ++j)
      out += num(s.t) + "," + num(field.x[j]) + "," + num(s.n[0][j]) + "," + num(s.n[1][j]) + "," +
             num(s.n[2][j]) + "," + num(s.total[j]) + "\n";
  return out;
}

inline Json density_metadata(const DensityField& field, const ModelParams& theta,
                             const InitialCondition& ic, const Json& grid) {
  Json j;
  j["solver"] = to_string(field.solver);
  j["grid"] = grid;
  j["model"] = to_json(theta);
  j["init"] = to_json(ic);
  Json snaps = Json::array();
  double dx = field.x.size() > 1 ? field.x[1] - field.x[0] : 0.0;
  for (const auto& s : field.snapshots)
    snaps.push_back({{"requested_t", s.requested_t}, {"t", s.t}, {"mass", total_mass(s, dx)}});
  j["snapshots"] = snaps;
  return j;
}

inline std::string linf_csv(const std::vector<LinfPoint>& trace) {
  std::string out = "t,linf\n";
  for (const auto& p : trace) out += num(p.t) + "," + num(p.linf) + "\n";
  return out;
}

inline Json to_json(const CoefficientSet& c) {
  Json j;
  j["c"] = c.c;
  j["degeneracy"] = to_string(c.degeneracy);
  j["units"] = coefficient_units();
  return j;
}

inline Json to_json(const EquivalenceReport& r) {
  Json trace = Json::array();
  for (const auto& p : r.density_linf_trace) trace.push_back({{"t", p.t}, {"linf", p.linf}});
  return {{"coeff_dev", r.coeff_dev},
          {"max_coeff_dev", r.max_coeff_dev},
          {"density_linf_trace", trace},
          {"max_density_linf", r.max_density_linf},
          {"verdict", to_string(r.verdict)}};
}

inline Json to_json(const EquivalenceClass& cls) {
  Json members = Json::array();
  Json cert = Json::array();
  for (const auto& m : cls.members) {
    members.push_back(to_json(m.theta));
    cert.push_back(to_json(m.certification));
  }
  return {{"reference", to_json(cls.reference)},
          {"weights", cls.weights},
          {"members", members},
          {"certification", cert}};
}

inline std::string equivalence_trace_csv(const EquivalenceClass& cls) {
  std::string out = "member,t,linf\n";
  for (std::size_t i = 0; i < cls.members.size(); ++i)
    for (const auto& p : cls.members[i].certification.density_linf_trace)
      out += std::to_string(i) + "," + num(p.t) + "," + num(p.linf) + "\n";
  return out;
}

}  // namespace vjump
