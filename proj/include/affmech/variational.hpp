#pragma once

#include <functional>
#include <vector>

#include "affmech/integrate.hpp"

namespace affmech {

/// Complete lift of a section of the linear bundle to the affine total space,
/// split into its base and fiber components. `base` lives in the tangent of
/// the base manifold, `fiber` in the full linear fiber.
struct CompleteLift {
  Vec base;   // size m: anchor image of the section
  Vec fiber;  // size n: transported fiber component
};

/// Evaluates the complete lift of the section xbar (components over the
/// linear frame, with spatial Jacobian xbar_jac, rows = frame index) at the
/// point (x, y). The fiber component is
///   fiber^g = dxbar^g/dx . (rho_0 + rho y)
///           + Cd(g,c) xbar^c - y^b Cl(g,c,b) xbar^c
/// which is the frame-wise transport against the structure functions.
CompleteLift complete_lift(const AffgebroidSpec& spec, const Vec& xbar, const Mat& xbar_jac,
                           const Vec& x, const Vec& y);

/// Fiber component of the lift along a curve, where the spatial derivative
/// contracted with the admissible velocity collapses to the total time
/// derivative xbar_dot of the section values on the curve.
Vec lift_fiber_along(const AffgebroidSpec& spec, const Vec& x, const Vec& yfull, const Vec& xbar,
                     const Vec& xbar_dot);

/// Time-dependent variation data: the caller chooses the free components
/// along the trajectory; the constrained components are solved for.
struct VariationField {
  std::function<Vec(double)> free_components;      // size nfree
  std::function<Vec(double)> free_components_dot;  // optional; FD in t if absent
};

/// Variation solved along a trajectory: full section components per sample
/// (constrained slots obey the tangency equation) plus their time derivative.
struct SolvedVariation {
  std::vector<double> times;
  std::vector<Vec> xbar;      // size n per sample
  std::vector<Vec> xbar_dot;  // size n per sample
  // Worst gap between stencil derivatives of the solved constrained
  // components and the tangency right-hand side, over interior samples.
  double tangency_residual = 0.0;
};

/// Integrates the tangency equation for the constrained components of the
/// variation along the trajectory (states interpolated between samples).
/// xbarA0 seeds the constrained components at t0; empty means zero.
SolvedVariation solve_variation(const VakonomicSystem& sys, const Trajectory& traj,
                                const VariationField& var, const Vec& xbarA0 = Vec());

/// Integral of sampled values over the sampled grid. Uniform grids use
/// composite Simpson (3/8 rule absorbs an odd tail interval); nonuniform
/// grids fall back to the trapezoid rule.
double quadrature(const std::vector<double>& t, const std::vector<double>& f);

/// Action integral of the restricted Lagrangian along the trajectory.
double action(const VakonomicSystem& sys, const Trajectory& traj);

/// First derivative of the action under the variation, measured two ways.
struct ActionDerivative {
  double fd = 0.0;        // central difference of the deformed action
  double analytic = 0.0;  // integrated Euler-Lagrange pairing + boundary term
  double boundary_term = 0.0;
  double defect = 0.0;  // |fd - analytic|
};

/// Deforms the sampled path by s times the lift of the variation
/// (x += s rho xbar, y^a += s fiber^a), differences the action centrally,
/// and compares with the Euler-Lagrange pairing
///   integral EL_a xbar^a dt + [y_A xbar^A + p_a xbar^a] at the ends,
/// where EL_a is the momentum forcing minus the time derivative of the free
/// momenta along the path.
ActionDerivative action_derivative(const VakonomicSystem& sys, const Trajectory& traj,
                                   const SolvedVariation& var, double eps = 1e-4);

/// A variation whose section components vanish at both endpoints. Built from
/// a family of sine bumps in the free components; the constrained components
/// are solved from zero at t0 and a null-space combination kills their t1
/// values (the family has two more members than constrained directions, so a
/// null vector always exists).
struct EndpointVariation {
  VariationField field;
  SolvedVariation solved;
  Vec coeffs;
  double endpoint_norm = 0.0;  // |xbar^A(t1)| of the combination
};

EndpointVariation endpoint_compatible_variation(const VakonomicSystem& sys,
                                                const Trajectory& traj);

}  // namespace affmech
