#include "affmech/run_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "affmech/expr.hpp"

namespace affmech {
namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double num_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j[key].get<double>();
}

Vec vec_from(const json& a, const char* what) {
  if (!a.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ConfigError(std::string(what) + " entries must be numbers");
    v[i] = a[i].get<double>();
  }
  return v;
}

std::vector<std::string> names_from(const json& a, const char* what) {
  if (!a.is_array() || a.empty())
    throw ConfigError(std::string(what) + " must be a non-empty array of names");
  std::vector<std::string> out;
  for (const auto& e : a) {
    if (!e.is_string()) throw ConfigError(std::string(what) + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Expr parse_expr(const json& j, const std::vector<std::string>& vars, const char* what) {
  if (!j.is_string() && !j.is_number())
    throw ConfigError(std::string(what) + " must be an expression string or number");
  const std::string src = j.is_string() ? j.get<std::string>() : j.dump();
  try {
    return Expr::parse(src, vars);
  } catch (const ExprError& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

// Time function from a number or an expression in t.
std::function<double(double)> time_fn(const json& j, const char* what) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return [v](double) { return v; };
  }
  const Expr e = parse_expr(j, {"t"}, what);
  return [e](double t) {
    Vec v(1);
    v[0] = t;
    return e.eval(v);
  };
}

IntegratorConfig integrator_from(const json& j) {
  IntegratorConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("integrator must be an object");
  if (j.contains("method")) {
    const std::string m = j["method"].get<std::string>();
    if (m == "rk4")
      c.method = StepMethod::rk4_fixed;
    else if (m == "rk45")
      c.method = StepMethod::rk45_adaptive;
    else
      throw ConfigError("integrator.method must be rk4 or rk45");
  }
  c.step = num_or(j, "step", c.step);
  c.rtol = num_or(j, "rtol", c.rtol);
  c.atol = num_or(j, "atol", c.atol);
  c.t0 = num_or(j, "t0", c.t0);
  c.t1 = num_or(j, "t1", c.t1);
  c.record_every = static_cast<int>(num_or(j, "record_every", c.record_every));
  if (j.contains("resync")) c.resync_momenta = j["resync"].get<bool>();
  if (c.step <= 0.0) throw ConfigError("integrator.step must be positive");
  if (c.record_every < 1) throw ConfigError("integrator.record_every must be >= 1");
  return c;
}

}  // namespace

LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* v = std::getenv("AFFG_LOG");
    if (!v) return LogLevel::quiet;
    const std::string s(v);
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    return LogLevel::quiet;
  }();
  return lvl;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::cerr << "[affmech] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) std::cerr << "[affmech] " << msg << "\n";
}

std::vector<std::string> base_coordinate_names(const std::string& model) {
  if (model == "sphere" || model == "mech-affine") return {"t", "x", "y"};
  if (model == "kepler") return {"t", "q1", "q2", "v1", "v2"};
  if (model == "jet-free") return {"t", "q"};
  throw ConfigError("unknown model: " + model);
}

VakonomicSystem build_custom_system(const json& c) {
  if (!c.is_object()) throw ConfigError("custom must be an object");
  const auto base = names_from(c.value("base", json()), "custom.base");
  const auto fiber = names_from(c.value("fiber", json()), "custom.fiber");
  const int m = static_cast<int>(base.size());
  const int n = static_cast<int>(fiber.size());

  VakonomicSystem sys;
  sys.spec.base_dim = m;
  sys.spec.rank = n;
  sys.spec.derivative_mode = DerivativeMode::finite_difference;

  if (!c.contains("anchor_drift") || !c["anchor_drift"].is_array() ||
      static_cast<int>(c["anchor_drift"].size()) != m)
    throw ConfigError("custom.anchor_drift must hold one expression per base coordinate");
  std::vector<Expr> drift;
  for (int i = 0; i < m; ++i) drift.push_back(parse_expr(c["anchor_drift"][i], base, "custom.anchor_drift"));
  sys.spec.anchor_drift = [drift, m](const Vec& x) {
    Vec v(m);
    for (int i = 0; i < m; ++i) v[i] = drift[i].eval(x);
    return v;
  };

  if (!c.contains("anchor_linear") || !c["anchor_linear"].is_array() ||
      static_cast<int>(c["anchor_linear"].size()) != m)
    throw ConfigError("custom.anchor_linear must hold m rows of n expressions");
  std::vector<Expr> lin;
  for (int i = 0; i < m; ++i) {
    const auto& row = c["anchor_linear"][i];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ConfigError("custom.anchor_linear must hold m rows of n expressions");
    for (int a = 0; a < n; ++a) lin.push_back(parse_expr(row[a], base, "custom.anchor_linear"));
  }
  sys.spec.anchor_linear = [lin, m, n](const Vec& x) {
    Mat r(m, n);
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < n; ++a) r(i, a) = lin[i * n + a].eval(x);
    return r;
  };

  if (c.contains("structure_drift")) {
    const auto& sd = c["structure_drift"];
    if (!sd.is_array() || static_cast<int>(sd.size()) != n)
      throw ConfigError("custom.structure_drift must hold n rows of n expressions");
    std::vector<Expr> cd;
    for (int g = 0; g < n; ++g) {
      const auto& row = sd[g];
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        throw ConfigError("custom.structure_drift must hold n rows of n expressions");
      for (int a = 0; a < n; ++a) cd.push_back(parse_expr(row[a], base, "custom.structure_drift"));
    }
    sys.spec.structure_drift = [cd, n](const Vec& x) {
      Mat r(n, n);
      for (int g = 0; g < n; ++g)
        for (int a = 0; a < n; ++a) r(g, a) = cd[g * n + a].eval(x);
      return r;
    };
  } else {
    sys.spec.structure_drift = [n](const Vec&) { return Mat::Zero(n, n).eval(); };
  }

  struct LinEntry {
    int g, a, b;
    Expr e;
  };
  std::vector<LinEntry> entries;
  if (c.contains("structure_linear")) {
    if (!c["structure_linear"].is_array())
      throw ConfigError("custom.structure_linear must be a list of {gamma, alpha, beta, value}");
    for (const auto& item : c["structure_linear"]) {
      if (!item.is_object() || !item.contains("gamma") || !item.contains("alpha") ||
          !item.contains("beta") || !item.contains("value"))
        throw ConfigError("custom.structure_linear entries need gamma, alpha, beta, value");
      LinEntry e{item["gamma"].get<int>(), item["alpha"].get<int>(), item["beta"].get<int>(),
                 parse_expr(item["value"], base, "custom.structure_linear")};
      if (e.g < 0 || e.g >= n || e.a < 0 || e.a >= n || e.b < 0 || e.b >= n)
        throw ConfigError("custom.structure_linear index out of range");
      if (e.a == e.b) throw ConfigError("custom.structure_linear: alpha == beta has no skew part");
      entries.push_back(std::move(e));
    }
  }
  sys.spec.structure_linear = [entries, n](const Vec& x) {
    Tensor3 t(n, n, n);
    for (const auto& e : entries) {
      const double v = e.e.eval(x);
      t(e.g, e.a, e.b) += v;
      t(e.g, e.b, e.a) -= v;
    }
    return t;
  };

  std::vector<int> constrained;
  if (c.contains("constrained"))
    for (const auto& idx : c["constrained"]) {
      const int k = idx.get<int>();
      if (k < 0 || k >= n) throw ConfigError("custom.constrained index out of range");
      constrained.push_back(k);
    }
  std::vector<int> free_idx;
  for (int a = 0; a < n; ++a)
    if (std::find(constrained.begin(), constrained.end(), a) == constrained.end())
      free_idx.push_back(a);

  std::vector<std::string> lag_vars = base;
  for (const auto& f : fiber) lag_vars.push_back(f);
  if (!c.contains("lagrangian")) throw ConfigError("custom.lagrangian is required");
  sys.lagrangian = expr_field(c["lagrangian"].get<std::string>(), lag_vars);

  std::vector<std::string> psi_vars = base;
  for (int a : free_idx) psi_vars.push_back(fiber[a]);
  sys.constraint.constrained = constrained;
  sys.constraint.free_idx = free_idx;
  if (c.contains("psi")) {
    if (!c["psi"].is_array() || c["psi"].size() != constrained.size())
      throw ConfigError("custom.psi must hold one expression per constrained slot");
    for (const auto& p : c["psi"])
      sys.constraint.psi.push_back(expr_field(p.get<std::string>(), psi_vars));
  } else if (!constrained.empty()) {
    throw ConfigError("custom.psi is required when custom.constrained is non-empty");
  }
  return sys;
}

BuiltRun build_run(const json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  BuiltRun run;
  run.model = config.value("model", std::string("sphere"));

  DerivativeMode mode = DerivativeMode::analytic;
  if (config.contains("derivatives")) {
    const std::string d = config["derivatives"].get<std::string>();
    if (d == "fd")
      mode = DerivativeMode::finite_difference;
    else if (d != "analytic")
      throw ConfigError("derivatives must be 'analytic' or 'fd'");
  }

  const json params = config.value("params", json::object());
  if (run.model == "custom") {
    if (!config.contains("custom")) throw ConfigError("model 'custom' needs a custom block");
    run.sys = build_custom_system(config["custom"]);
    run.base_names = names_from(config["custom"]["base"], "custom.base");
  } else if (run.model == "sphere") {
    SphereParams p;
    p.r = num_or(params, "r", p.r);
    p.mass = num_or(params, "mass", p.mass);
    p.k = num_or(params, "k", p.k);
    p.c = num_or(params, "c", p.c);
    if (params.contains("omega")) {
      p.omega = time_fn(params["omega"], "params.omega");
      if (params.contains("omega_dot")) {
        p.omega_dot = time_fn(params["omega_dot"], "params.omega_dot");
      } else {
        const auto om = p.omega;
        p.omega_dot = [om](double t) { return (om(t + 1e-6) - om(t - 1e-6)) / 2e-6; };
      }
    }
    SphereLagrangian lag = SphereLagrangian::control_cost;
    if (params.contains("lagrangian")) {
      const std::string l = params["lagrangian"].get<std::string>();
      if (l == "kinetic")
        lag = SphereLagrangian::kinetic_energy;
      else if (l != "control")
        throw ConfigError("params.lagrangian must be 'control' or 'kinetic'");
    }
    run.sys = build_rolling_sphere(p, lag, mode);
    run.base_names = base_coordinate_names(run.model);
  } else {
    try {
      run.sys = build_model(run.model, mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    run.base_names = base_coordinate_names(run.model);
  }

  if (config.contains("initial")) {
    const json& init = config["initial"];
    run.init.x = vec_from(init.value("x", json::array()), "initial.x");
    run.init.yA = vec_from(init.value("yA", json::array()), "initial.yA");
    run.init.ya = vec_from(init.value("ya", json::array()), "initial.ya");
  } else if (run.model != "custom") {
    run.init = default_state(run.model);
  } else {
    throw ConfigError("model 'custom' needs an initial state");
  }
  if (run.init.x.size() != run.sys.m() || run.init.yA.size() != run.sys.mbar() ||
      run.init.ya.size() != run.sys.nfree())
    throw ConfigError("initial state dimensions do not match the model (" +
                      std::to_string(run.sys.m()) + ", " + std::to_string(run.sys.mbar()) + ", " +
                      std::to_string(run.sys.nfree()) + ")");

  run.icfg = integrator_from(config.value("integrator", json()));
  return run;
}

void apply_override(json& config, const std::string& keyval) {
  const size_t eq = keyval.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like path.to.key=value: " + keyval);
  const std::string path = keyval.substr(0, eq);
  const std::string raw = keyval.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // keep unparsable values as strings
  }

  json* node = &config;
  size_t start = 0;
  for (;;) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override has an empty path segment: " + keyval);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void write_trajectory_csv(std::ostream& os, const VakonomicSystem& sys, const Trajectory& traj,
                          const std::vector<std::string>& base_names) {
  os << "t";
  for (int i = 0; i < sys.m(); ++i)
    os << ",x_" << (i < static_cast<int>(base_names.size()) ? base_names[i] : std::to_string(i));
  for (int A = 0; A < sys.mbar(); ++A) os << ",yA_" << A;
  for (int a = 0; a < sys.nfree(); ++a) os << ",ya_" << a;
  os << ",phi_max,w1prime_defect";
  for (int a = 0; a < sys.nfree(); ++a) os << ",p_" << a;
  os << ",y0\n";

  for (size_t k = 0; k < traj.size(); ++k) {
    os << fmt17(traj.times[k]);
    for (int i = 0; i < sys.m(); ++i) os << ',' << fmt17(traj.states[k].x[i]);
    for (int A = 0; A < sys.mbar(); ++A) os << ',' << fmt17(traj.states[k].yA[A]);
    for (int a = 0; a < sys.nfree(); ++a) os << ',' << fmt17(traj.states[k].ya[a]);
    os << ',' << fmt17(traj.residuals[k].phi_max) << ',' << fmt17(traj.residuals[k].w1prime_defect);
    for (int a = 0; a < sys.nfree(); ++a) os << ',' << fmt17(traj.momenta[k][a]);
    os << ',' << fmt17(traj.y0[k]) << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is, const VakonomicSystem& sys) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("trajectory csv: missing header");

  const int m = sys.m(), mb = sys.mbar(), nf = sys.nfree();
  const int expected = 1 + m + mb + nf + 2 + nf + 1;
  Trajectory traj;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != expected)
      throw ConfigError("trajectory csv: line " + std::to_string(lineno) + " has " +
                        std::to_string(row.size()) + " cells, expected " +
                        std::to_string(expected));
    int c = 0;
    traj.times.push_back(row[c++]);
    VakonomicState s;
    s.x = Vec(m);
    for (int i = 0; i < m; ++i) s.x[i] = row[c++];
    s.yA = Vec(mb);
    for (int A = 0; A < mb; ++A) s.yA[A] = row[c++];
    s.ya = Vec(nf);
    for (int a = 0; a < nf; ++a) s.ya[a] = row[c++];
    traj.states.push_back(s);
    SampleResiduals r;
    r.phi_max = row[c++];
    r.w1prime_defect = row[c++];
    traj.residuals.push_back(r);
    Vec p(nf);
    for (int a = 0; a < nf; ++a) p[a] = row[c++];
    traj.momenta.push_back(p);
    traj.y0.push_back(row[c++]);
    traj.max_phi = std::max(traj.max_phi, r.phi_max);
    traj.max_w1prime_defect = std::max(traj.max_w1prime_defect, r.w1prime_defect);
  }
  return traj;
}

nlohmann::json run_summary(const VakonomicSystem& sys, const Trajectory& traj) {
  json j;
  switch (traj.status) {
    case RunStatus::ok:
      j["status"] = "ok";
      break;
    case RunStatus::singular:
      j["status"] = "singular";
      break;
    case RunStatus::no_convergence:
      j["status"] = "no_convergence";
      break;
    case RunStatus::step_underflow:
      j["status"] = "step_underflow";
      break;
  }
  if (!traj.message.empty()) j["message"] = traj.message;
  j["samples"] = traj.size();
  j["max_phi"] = traj.max_phi;
  j["max_w1prime_defect"] = traj.max_w1prime_defect;
  if (traj.size()) {
    j["t_final"] = traj.times.back();
    const VakonomicState& s = traj.states.back();
    j["final"]["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
    j["final"]["yA"] = std::vector<double>(s.yA.data(), s.yA.data() + s.yA.size());
    j["final"]["ya"] = std::vector<double>(s.ya.data(), s.ya.data() + s.ya.size());
    j["admissibility_defect"] = admissibility_defect(sys, traj);
  }
  return j;
}

}  // namespace affmech
