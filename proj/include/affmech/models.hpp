#pragma once

#include <random>
#include <string>
#include <vector>

#include "affmech/vakonomic.hpp"

namespace affmech {

/// Ball of radius r rolling without sliding on a turntable that spins at the
/// (possibly time-dependent) rate omega. Base coordinates (t, x, y); the five
/// fiber slots are the two contact velocities followed by the three angular
/// velocities, whose slots are constrained by the rolling map.
struct SphereParams {
  double r = 1.0;
  double mass = 1.0;
  double k = 1.0;  // gyration radius
  double c = 1.0;  // constant vertical spin rate enforced by the third slot
  std::function<double(double)> omega = [](double) { return 1.0; };
  std::function<double(double)> omega_dot = [](double) { return 0.0; };
};

enum class SphereLagrangian {
  control_cost,    // L = (1/2)((y^1)^2 + (y^2)^2), quadratic in the free slots
  kinetic_energy,  // L = (m/2)(v^2) + (m k^2 / 2)(angular^2)
};

VakonomicSystem build_rolling_sphere(const SphereParams& params,
                                     SphereLagrangian lag = SphereLagrangian::control_cost,
                                     DerivativeMode mode = DerivativeMode::analytic);

/// Closed-form equations of motion for the control-cost rolling sphere,
/// written out directly (no structure-function assembly). Cross-check for
/// the engine.
VakonomicRhs sphere_oracle_rhs(const SphereParams& params, const VakonomicState& s);

/// Planar Kepler problem with a thruster: base (t, q1, q2, v1, v2), gravity
/// in the drift section, two constrained slots carrying the costates and two
/// free slots carrying the thrust controls with quadratic cost. The
/// structure functions depend on position; the model throws
/// OriginSingularity near q = 0.
VakonomicSystem build_kepler_thruster(DerivativeMode mode = DerivativeMode::analytic);

/// Closed-form costate/control equations for the Kepler thruster.
VakonomicRhs kepler_oracle_rhs(const VakonomicState& s);

/// Time-extended free particle on the line: base (t, q), one free fiber slot,
/// identity-like anchor, vanishing structure functions.
VakonomicSystem build_jet_particle(DerivativeMode mode = DerivativeMode::analytic);

/// Planar particle in a harmonic potential on the Heisenberg frame
/// [e_1, e_2] = e_3, with the vertical slot constrained to zero. Its
/// multiplier couples the two velocities like a magnetic term.
VakonomicSystem build_mech_affine(DerivativeMode mode = DerivativeMode::analytic);

/// Closed-form equations for the constrained harmonic model.
VakonomicRhs mechanical_oracle_rhs(const VakonomicState& s);

/// Registry: "sphere", "kepler", "jet-free", "mech-affine" (default
/// parameters). Throws std::invalid_argument for unknown names.
std::vector<std::string> model_names();
VakonomicSystem build_model(const std::string& name,
                            DerivativeMode mode = DerivativeMode::analytic);

/// A representative initial state for demos and smoke runs.
VakonomicState default_state(const std::string& name);

/// Uniform random base point inside the model's safe domain (the Kepler
/// position stays on an annulus away from the gravitational center).
Vec random_base_point(const std::string& name, std::mt19937_64& rng);

/// Random state with base point from random_base_point and O(1) fiber data.
VakonomicState random_state(const std::string& name, std::mt19937_64& rng);

}  // namespace affmech
