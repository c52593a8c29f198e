#pragma once

#include <string>
#include <vector>

#include "affmech/vakonomic.hpp"

namespace affmech {

enum class StepMethod { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
  StepMethod method = StepMethod::rk4_fixed;
  double step = 1e-3;  // rk4: fixed step; rk45: initial step
  double rtol = 1e-9;
  double atol = 1e-12;
  double t0 = 0.0;
  double t1 = 1.0;
  int record_every = 1;  // rk4 only; rk45 records accepted steps
  // Re-derive the transported momenta and drift momentum from the state after
  // every accepted step. Off by default so the recorded defects measure the
  // integrator's drift off the constraint levels.
  bool resync_momenta = false;
};

enum class RunStatus { ok, singular, no_convergence, step_underflow };

struct SampleResiduals {
  double phi_max = 0.0;         // max_a |p_a - momenta_free|
  double w1prime_defect = 0.0;  // |y0 - (Ltil - y_A psi^A - p_a y^a)|
};

/// Time-sampled solution of the constrained equations of motion. Alongside
/// the state (x, y_A, y^a), the integrator transports the free momenta p_a
/// and the drift momentum y_0 as passengers of the same scheme; their
/// mismatch with the values recomputed from the state gives the per-sample
/// residuals. A failed run carries the partial trajectory plus status.
struct Trajectory {
  std::vector<double> times;
  std::vector<VakonomicState> states;
  std::vector<Vec> momenta;  // transported p_a per sample
  std::vector<double> y0;    // transported y_0 per sample
  std::vector<SampleResiduals> residuals;
  RunStatus status = RunStatus::ok;
  std::string message;
  double max_phi = 0.0;
  double max_w1prime_defect = 0.0;

  size_t size() const { return times.size(); }
};

/// Integrates the constrained equations from an initial state. The initial
/// momenta/drift momentum are seeded consistently (momenta_free, w1prime_y0).
/// Mid-flight engine failures downgrade the run to a partial trajectory.
Trajectory integrate(const VakonomicSystem& sys, const VakonomicState& init,
                     const IntegratorConfig& cfg);

/// Worst mismatch between the sampled base velocity (3-point differences in
/// time) and the anchor image of the sampled fiber, relative to
/// max(1, |dx|_inf) per sample. Measures that the integrated base curve
/// stays an admissible curve of the affgebroid.
double admissibility_defect(const VakonomicSystem& sys, const Trajectory& traj);

/// Cubic Hermite interpolation of the trajectory state at time t, with slopes
/// taken from stencil differences of the stored samples (path-faithful, so it
/// also works for externally supplied non-solution paths).
VakonomicState interpolate_state(const VakonomicSystem& sys, const Trajectory& traj, double t);

/// Per-sample time derivatives of a sampled vector path. Uniform grids with
/// at least five samples use fourth-order stencils; anything else falls back
/// to the nonuniform 3-point formula (one-sided at the ends).
std::vector<Vec> stencil_slopes(const std::vector<double>& t, const std::vector<Vec>& fv);

}  // namespace affmech
