#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "affmech/integrate.hpp"
#include "affmech/models.hpp"

namespace affmech {

/// Bad or inconsistent run configuration (unknown model, malformed JSON
/// fields, dimension mismatches, expression parse failures).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

/// Level from the AFFG_LOG environment variable (quiet|info|debug),
/// defaulting to quiet. Read once per process.
LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

/// Base coordinate names of the built-in models (used as CSV headers).
std::vector<std::string> base_coordinate_names(const std::string& model);

/// A fully assembled run: system, initial state, integrator settings.
struct BuiltRun {
  VakonomicSystem sys;
  VakonomicState init;
  IntegratorConfig icfg;
  std::string model;
  std::vector<std::string> base_names;
};

/// Builds a run from a JSON config. Top-level keys:
///   model        "sphere" | "kepler" | "jet-free" | "mech-affine" | "custom"
///   derivatives  "analytic" | "fd"            (custom is always fd)
///   params       model parameters (sphere: r, mass, k, c, omega, omega_dot
///                as numbers or expressions in t, lagrangian
///                "control"|"kinetic")
///   custom       expression-defined model, see build_custom_system
///   initial      {"x": [...], "yA": [...], "ya": [...]}
///   integrator   {"method": "rk4"|"rk45", "step", "rtol", "atol",
///                 "t0", "t1", "record_every", "resync"}
/// Throws ConfigError on any malformed input.
BuiltRun build_run(const nlohmann::json& config);

/// Expression-defined system. Required keys of `c`:
///   base             base coordinate names
///   fiber            fiber slot names
///   anchor_drift     m expressions in the base names
///   anchor_linear    m rows of n expressions
///   lagrangian       expression in base + fiber names
/// Optional:
///   structure_drift  n rows of n expressions (entry (gamma, alpha))
///   structure_linear list of {gamma, alpha, beta, value}; the skew
///                    counterpart (beta, alpha) is filled automatically
///   constrained      fiber indices pinned by the constraint
///   psi              one expression per constrained slot, in base + free
///                    fiber names
VakonomicSystem build_custom_system(const nlohmann::json& c);

/// Applies a "path.to.key=value" override onto a JSON config; the value is
/// parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& keyval);

/// CSV columns: t, x_<name>..., yA_<k>..., ya_<k>..., phi_max,
/// w1prime_defect, then the extras p_<k>... (transported free momenta) and
/// y0 (transported drift momentum) so a reader can recompute the residual
/// columns from the row alone. Values are written with %.17g.
void write_trajectory_csv(std::ostream& os, const VakonomicSystem& sys, const Trajectory& traj,
                          const std::vector<std::string>& base_names);

/// Reads a trajectory written by write_trajectory_csv (header required).
Trajectory read_trajectory_csv(std::istream& is, const VakonomicSystem& sys);

/// One-object JSON summary of a finished run.
nlohmann::json run_summary(const VakonomicSystem& sys, const Trajectory& traj);

}  // namespace affmech
