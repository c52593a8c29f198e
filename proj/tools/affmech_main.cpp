#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "affmech/brackets.hpp"
#include "affmech/expr.hpp"
#include "affmech/models.hpp"
#include "affmech/run_io.hpp"
#include "affmech/variational.hpp"

namespace {

using affmech::ConfigError;
using affmech::Vec;
using nlohmann::json;

// Shared model/config selection; flags are folded into the JSON config so
// that --set overrides and command-line switches compose the same way.
struct CommonOpts {
  std::string model;
  std::string config_path;
  bool fd = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("-m,--model", c.model, "built-in model name: sphere, kepler, jet-free, mech-affine");
  cmd->add_option("-c,--config", c.config_path, "JSON run configuration");
  cmd->add_flag("--fd", c.fd, "finite-difference derivatives instead of analytic ones");
  cmd->add_option("--set", c.sets, "config override path.to.key=value (repeatable)")
      ->take_all();
}

json load_config(const CommonOpts& c) {
  json config = json::object();
  if (!c.config_path.empty()) {
    std::ifstream f(c.config_path);
    if (!f) throw ConfigError("cannot open config file: " + c.config_path);
    try {
      f >> config;
    } catch (const json::exception& e) {
      throw ConfigError("bad JSON in " + c.config_path + ": " + e.what());
    }
  }
  if (!c.model.empty()) config["model"] = c.model;
  if (c.fd) config["derivatives"] = "fd";
  for (const auto& kv : c.sets) affmech::apply_override(config, kv);
  return config;
}

void apply_integrator_flags(json& config, const std::string& method, double step,
                            const std::string& tspan, int record_every, bool resync) {
  if (!method.empty()) config["integrator"]["method"] = method;
  if (step > 0.0) config["integrator"]["step"] = step;
  if (!tspan.empty()) {
    const size_t colon = tspan.find(':');
    try {
      if (colon == std::string::npos) {
        config["integrator"]["t1"] = std::stod(tspan);
      } else {
        config["integrator"]["t0"] = std::stod(tspan.substr(0, colon));
        config["integrator"]["t1"] = std::stod(tspan.substr(colon + 1));
      }
    } catch (const std::exception&) {
      throw ConfigError("bad --tspan, expected T1 or T0:T1: " + tspan);
    }
  }
  if (record_every > 0) config["integrator"]["record_every"] = record_every;
  if (resync) config["integrator"]["resync"] = true;
}

Vec parse_list(const std::string& text, const char* what) {
  std::stringstream ss(text);
  std::string cell;
  std::vector<double> vals;
  while (std::getline(ss, cell, ',')) {
    try {
      vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad number in ") + what + ": " + cell);
    }
  }
  Vec v(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

int run_check(const CommonOpts& common, int points, unsigned long long seed, double tol) {
  const affmech::BuiltRun run = affmech::build_run(load_config(common));
  const bool analytic = run.sys.spec.derivative_mode == affmech::DerivativeMode::analytic;
  if (tol <= 0.0) tol = analytic ? 1e-6 : 1e-4;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> probes;
  for (int i = 0; i < points; ++i) {
    try {
      probes.push_back(affmech::random_base_point(run.model, rng));
    } catch (const std::invalid_argument&) {
      Vec x(run.sys.m());
      for (int j = 0; j < x.size(); ++j) x[j] = u(rng);
      probes.push_back(x);
    }
  }

  bool ok = true;
  const auto report = [&ok](const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "ok   " : "FAIL ") << name << "  (" << detail << ")\n";
    ok = ok && pass;
  };

  const affmech::SkewReport skew = affmech::validate_skew(run.sys.spec, probes);
  report("skew-symmetry", skew.ok, "max violation " + std::to_string(skew.max_violation));

  double jac = 0.0, morph = 0.0;
  for (const Vec& x : probes) {
    jac = std::max(jac, affmech::jacobi_residual(run.sys.spec, x));
    morph = std::max(morph, affmech::anchor_morphism_residual(run.sys.spec, x));
  }
  {
    std::ostringstream d;
    d << "max residual " << jac << ", tol " << tol << ", " << points << " points";
    report("jacobi-identity", jac <= tol, d.str());
  }
  {
    std::ostringstream d;
    d << "max residual " << morph << ", tol " << tol;
    report("anchor-morphism", morph <= tol, d.str());
  }

  const affmech::RegularityReport reg = affmech::regularity_check(run.sys, run.init);
  {
    std::ostringstream d;
    d << "det " << reg.det << ", cond " << reg.condition;
    report("regularity-at-initial-state", reg.regular, d.str());
  }
  return ok ? 0 : 1;
}

json simulate_one(const json& config, const std::string& out_path) {
  const affmech::BuiltRun run = affmech::build_run(config);
  affmech::log_info("integrating model " + run.model);
  const affmech::Trajectory traj = affmech::integrate(run.sys, run.init, run.icfg);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw ConfigError("cannot open output file: " + out_path);
    affmech::write_trajectory_csv(f, run.sys, traj, run.base_names);
    affmech::log_info("wrote " + std::to_string(traj.size()) + " samples to " + out_path);
  }
  return affmech::run_summary(run.sys, traj);
}

std::string indexed_path(const std::string& path, size_t k) {
  const size_t dot = path.rfind('.');
  if (dot == std::string::npos) return path + "_" + std::to_string(k);
  return path.substr(0, dot) + "_" + std::to_string(k) + path.substr(dot);
}

int run_simulate(const CommonOpts& common, const std::string& method, double step,
                 const std::string& tspan, int record_every, bool resync,
                 const std::string& out_path, const std::string& sweep) {
  json config = load_config(common);
  apply_integrator_flags(config, method, step, tspan, record_every, resync);

  if (sweep.empty()) {
    const json summary = simulate_one(config, out_path);
    std::cout << summary.dump(2) << "\n";
    return summary["status"] == "ok" ? 0 : 2;
  }

  const size_t eq = sweep.find('=');
  if (eq == std::string::npos) throw ConfigError("--sweep must look like path.to.key=v1,v2,...");
  const std::string key = sweep.substr(0, eq);
  std::vector<std::string> values;
  {
    std::stringstream ss(sweep.substr(eq + 1));
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(cell);
  }
  if (values.empty()) throw ConfigError("--sweep has no values");

  // One worker per parameter value; results land in their slot so the merged
  // report keeps the parameter order regardless of completion order.
  std::vector<json> results(values.size());
  std::vector<std::string> errors(values.size());
  std::vector<std::thread> workers;
  for (size_t k = 0; k < values.size(); ++k) {
    workers.emplace_back([&, k] {
      try {
        json local = config;
        affmech::apply_override(local, key + "=" + values[k]);
        const std::string out = out_path.empty() ? "" : indexed_path(out_path, k);
        results[k] = simulate_one(local, out);
        results[k]["sweep"] = {{"key", key}, {"value", values[k]}};
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    });
  }
  for (auto& w : workers) w.join();

  json merged = json::array();
  bool all_ok = true;
  for (size_t k = 0; k < values.size(); ++k) {
    if (!errors[k].empty()) {
      merged.push_back({{"sweep", {{"key", key}, {"value", values[k]}}}, {"error", errors[k]}});
      all_ok = false;
    } else {
      merged.push_back(results[k]);
      all_ok = all_ok && results[k]["status"] == "ok";
    }
  }
  std::cout << merged.dump(2) << "\n";
  return all_ok ? 0 : 2;
}

// Section (or observable) from "@w1p" or an expression in the base names and
// p_0..p_{n-1}.
affmech::ScalarField section_field(const affmech::BuiltRun& run, const std::string& text) {
  if (text == "@w1p") return affmech::w1prime_section(run.sys).H;
  std::vector<std::string> vars = run.base_names;
  for (int a = 0; a < run.sys.n(); ++a) vars.push_back("p_" + std::to_string(a));
  try {
    return affmech::expr_field(text, vars);
  } catch (const affmech::ExprError& e) {
    throw ConfigError(e.what());
  }
}

int run_bracket(const CommonOpts& common, const std::string& h1_text,
                const std::string& h2_text, bool affine_linear, const std::string& x_list,
                const std::string& p_list) {
  const affmech::BuiltRun run = affmech::build_run(load_config(common));

  Vec x = run.init.x;
  Vec p = affmech::scatter_momenta(run.sys, run.init.yA, affmech::momenta_free(run.sys, run.init));
  if (!x_list.empty()) x = parse_list(x_list, "--x");
  if (!p_list.empty()) p = parse_list(p_list, "--p");
  if (x.size() != run.sys.m() || p.size() != run.sys.n())
    throw ConfigError("evaluation point has wrong dimensions");

  const affmech::HamiltonianSection h1{section_field(run, h1_text)};
  json out;
  out["model"] = run.model;
  if (affine_linear) {
    const affmech::ScalarField F = section_field(run, h2_text);
    out["kind"] = "affine-linear";
    out["value"] = affmech::affine_linear_bracket(run.sys.spec, h1, F, x, p);
  } else {
    const affmech::HamiltonianSection h2{section_field(run, h2_text)};
    const double v12 = affmech::vakonomic_bracket(run.sys.spec, h1, h2, x, p);
    const double v21 = affmech::vakonomic_bracket(run.sys.spec, h2, h1, x, p);
    out["kind"] = "vakonomic";
    out["value"] = v12;
    out["antisymmetry_defect"] = std::abs(v12 + v21);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_variation(const CommonOpts& common, const std::string& method, double step,
                  const std::string& tspan, double eps) {
  json config = load_config(common);
  apply_integrator_flags(config, method, step, tspan, 0, false);
  const affmech::BuiltRun run = affmech::build_run(config);
  const affmech::Trajectory traj = affmech::integrate(run.sys, run.init, run.icfg);
  if (traj.status != affmech::RunStatus::ok) {
    std::cout << affmech::run_summary(run.sys, traj).dump(2) << "\n";
    return 2;
  }
  const affmech::EndpointVariation ev = affmech::endpoint_compatible_variation(run.sys, traj);
  const affmech::ActionDerivative ad = affmech::action_derivative(run.sys, traj, ev.solved, eps);

  json out;
  out["model"] = run.model;
  out["action"] = affmech::action(run.sys, traj);
  out["fd_derivative"] = ad.fd;
  out["analytic_derivative"] = ad.analytic;
  out["boundary_term"] = ad.boundary_term;
  out["defect"] = ad.defect;
  out["tangency_residual"] = ev.solved.tangency_residual;
  out["endpoint_norm"] = ev.endpoint_norm;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "affmech: constrained mechanics on anchored affine frames.\n"
      "Models: sphere, kepler, jet-free, mech-affine, custom (via --config)."};
  app.require_subcommand(1);

  CommonOpts check_opts, sim_opts, bra_opts, var_opts;

  auto* check = app.add_subcommand("check", "validate frame axioms and regularity");
  add_common(check, check_opts);
  int points = 100;
  unsigned long long seed = 12345;
  double check_tol = 0.0;
  check->add_option("--points", points, "number of random probe points");
  check->add_option("--seed", seed, "probe RNG seed");
  check->add_option("--tol", check_tol, "residual tolerance (default per derivative mode)");

  auto* sim = app.add_subcommand("simulate", "integrate the equations of motion");
  add_common(sim, sim_opts);
  std::string method, tspan, out_path, sweep;
  double step = 0.0;
  int record_every = 0;
  bool resync = false;
  sim->add_option("--method", method, "rk4 or rk45");
  sim->add_option("--step", step, "fixed step (rk4) or initial step (rk45)");
  sim->add_option("--tspan", tspan, "T1 or T0:T1");
  sim->add_option("--record-every", record_every, "record every Nth step (rk4)");
  sim->add_flag("--resync", resync, "re-derive transported momenta after each step");
  sim->add_option("-o,--out", out_path, "trajectory CSV path");
  sim->add_option("--sweep", sweep, "path.to.key=v1,v2,... parallel parameter sweep");

  auto* bra = app.add_subcommand("bracket", "evaluate brackets of sections at a point");
  add_common(bra, bra_opts);
  std::string h1_text, h2_text, x_list, p_list;
  bool affine_linear = false;
  bra->add_option("h1", h1_text, "section: expression in base names and p_k, or @w1p")
      ->required();
  bra->add_option("h2", h2_text, "second section (or observable with --al)")->required();
  bra->add_flag("--al", affine_linear, "affine-linear bracket {h1, F} instead");
  bra->add_option("--x", x_list, "base point, comma-separated (default: initial state)");
  bra->add_option("--p", p_list, "momenta, comma-separated (default: from initial state)");

  auto* var = app.add_subcommand("variation", "action derivative under an endpoint variation");
  add_common(var, var_opts);
  std::string var_method, var_tspan;
  double var_step = 0.0, eps = 1e-4;
  var->add_option("--method", var_method, "rk4 or rk45");
  var->add_option("--step", var_step, "integration step");
  var->add_option("--tspan", var_tspan, "T1 or T0:T1");
  var->add_option("--eps", eps, "central-difference size for the action");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (check->parsed()) return run_check(check_opts, points, seed, check_tol);
    if (sim->parsed())
      return run_simulate(sim_opts, method, step, tspan, record_every, resync, out_path, sweep);
    if (bra->parsed()) return run_bracket(bra_opts, h1_text, h2_text, affine_linear, x_list, p_list);
    if (var->parsed()) return run_variation(var_opts, var_method, var_step, var_tspan, eps);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const affmech::SingularRegularity& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  } catch (const affmech::OriginSingularity& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  } catch (const affmech::NoConvergence& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  } catch (const affmech::StepUnderflow& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
