#pragma once

#include <vector>

#include "affmech/affgebroid.hpp"
#include "affmech/errors.hpp"

namespace affmech {

/// Constraint submanifold in adapted form: the fiber velocities split into a
/// constrained block y^A = psi^A(x, y^a) and a free block y^a. Index vectors
/// hold 0-based positions into the n fiber slots; together they partition
/// [0, n). Each psi^A is a field of the packed argument [x (m); y^a (n - mbar)].
struct ConstraintMap {
  std::vector<int> constrained;
  std::vector<int> free_idx;
  std::vector<ScalarField> psi;

  int mbar() const { return static_cast<int>(constrained.size()); }
  int nfree() const { return static_cast<int>(free_idx.size()); }
};

/// Builds the no-constraint map (mbar = 0) on an n-dimensional fiber.
ConstraintMap unconstrained_map(int n);

struct Tolerances {
  double singular_det = 1e-10;  // relative to max(1, |R|_inf)
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
};

/// Constrained variational problem on a Lie affgebroid: frame data, a
/// Lagrangian L(x, y) of the packed argument [x (m); y (n)], and the
/// constraint split. Immutable after construction; all operations are
/// stateless functions of (system, state).
struct VakonomicSystem {
  AffgebroidSpec spec;
  ScalarField lagrangian;
  ConstraintMap constraint;
  Tolerances tol;

  int m() const { return spec.base_dim; }
  int n() const { return spec.rank; }
  int mbar() const { return constraint.mbar(); }
  int nfree() const { return constraint.nfree(); }
};

/// Point of the reduced phase space: base coordinates, the multipliers y_A
/// (momenta dual to the constrained slots), and the free velocities y^a.
struct VakonomicState {
  Vec x;
  Vec yA;
  Vec ya;
};

struct VakonomicRhs {
  Vec dx;   // m
  Vec dyA;  // mbar
  Vec dya;  // nfree
};

/// All derivatives of the restricted Lagrangian Ltil(x, u) = L(x, Y(x, u))
/// (Y has psi in constrained slots and u in free slots) needed by the
/// equations of motion, assembled once per evaluation point by the chain rule.
struct RestrictedDerivs {
  double L = 0.0;   // Ltil value
  Vec dLdx;         // m
  Vec dLdu;         // nfree
  Mat d2L_uu;       // nfree x nfree
  Mat d2L_ux;       // nfree x m, entry (a, i) = d2 Ltil / du_a dx_i
  Vec psi;          // mbar
  Mat psi_x;        // mbar x m
  Mat psi_u;        // mbar x nfree
  std::vector<Mat> psi_hess;  // per A: full (m+nfree)^2 Hessian of psi^A
  Vec Y;            // n, full fiber velocities
};

RestrictedDerivs restricted_derivs(const VakonomicSystem& sys, const Vec& x, const Vec& u);

/// Restricted Lagrangian value Ltil(x, y^a) = L(x, psi(x, y^a), y^a).
double restricted_lagrangian(const VakonomicSystem& sys, const Vec& x, const Vec& ya);

/// Full fiber velocities: psi^A in constrained slots, y^a in free slots.
Vec full_velocities(const VakonomicSystem& sys, const VakonomicState& s);

/// Scatter multipliers and free momenta into one n-vector of momenta.
Vec scatter_momenta(const VakonomicSystem& sys, const Vec& yA, const Vec& pa);

/// Free momenta induced by the constrained variational principle:
///   p_a = dLtil/dy^a - y_A dpsi^A/dy^a.
Vec momenta_free(const VakonomicSystem& sys, const VakonomicState& s);

/// Momentum-level constraint defect phi_a = p_a - momenta_free(s): zero
/// exactly on the first constraint manifold of the problem.
Vec w1_residual(const VakonomicSystem& sys, const VakonomicState& s, const Vec& pa);

/// Affine momentum fixed by the energy-level condition:
///   y_0 = Ltil - y_A psi^A - p_a y^a,  with p_a = momenta_free(s).
double w1prime_y0(const VakonomicSystem& sys, const VakonomicState& s);

/// Pontryagin-style Hamiltonian H = y_0 + p_a y^a + y_A psi^A - Ltil, with
/// p the full n-vector of momenta and ya the free velocities.
double pontryagin_hamiltonian(const VakonomicSystem& sys, const Vec& x, double y0, const Vec& p,
                              const Vec& ya);

/// R_ab = d2Ltil/dy^a dy^b - y_A d2psi^A/dy^a dy^b. Its regularity makes the
/// momentum balance solvable for the free accelerations.
Mat regularity_matrix(const VakonomicSystem& sys, const VakonomicState& s);

struct RegularityReport {
  double det = 0.0;
  double condition = 0.0;  // sigma_max / sigma_min, inf if singular
  bool regular = false;
};

RegularityReport regularity_check(const VakonomicSystem& sys, const VakonomicState& s);

/// Inverts the free-momentum map at fixed (x, y_A): finds y^a with
/// momenta_free = p_a by Newton iteration seeded at y^a = p_a.
/// `p` is the full n-vector of momenta.
/// Throws SingularRegularity or NoConvergence.
Vec controls_from_momenta(const VakonomicSystem& sys, const Vec& x, const Vec& p);

/// One evaluation of the constrained equations of motion, shared by the
/// public right-hand sides, the integrator, and the bracket checks.
struct EngineEval {
  RestrictedDerivs rd;
  Vec G;      // m: dLtil/dx_i - y_A dpsi^A/dx_i
  Vec pfull;  // n momenta: multipliers + momenta_free
  Vec dx;     // m
  Vec dyA;    // mbar
  Vec dpa;    // nfree: momentum-form balance, d/dt p_a
  Mat R;      // nfree x nfree
  Vec dya;    // nfree: free accelerations from the R-solve
};

EngineEval engine_eval(const VakonomicSystem& sys, const VakonomicState& s);

/// Equations of motion in state form:
///   dx^i  = rho^i_0 + psi^A rho^i_A + y^a rho^i_a
///   dy_A  = G_i rho^i_A - p_gamma (Chat^gamma_{A0} + Y^beta Chat^gamma_{A beta})
///   R_ab dy^b = [same balance for the free slots] - d2Ltil-cross terms + dy_A dpsi^A/dy^a
/// where G_i = dLtil/dx_i - y_A dpsi^A/dx_i, Chat extends the structure
/// functions over the drift slot, and p carries momenta_free in the free slots.
/// Throws SingularRegularity when R fails the determinant gate.
VakonomicRhs vakonomic_rhs(const VakonomicSystem& sys, const VakonomicState& s);

/// Momentum-form balance d/dt p_a (no R-solve involved).
Vec momenta_rhs(const VakonomicSystem& sys, const VakonomicState& s);

struct EulerLagrangeRhs {
  Vec dx;  // m
  Vec dy;  // n
};

/// Unconstrained equations of motion (mbar == 0 required):
///   d/dt (dL/dy^alpha) = rho^i_alpha dL/dx^i
///                        - (Chat^gamma_{alpha 0} + y^beta Chat^gamma_{alpha beta}) dL/dy^gamma
/// solved for the accelerations through the fiber Hessian of L.
EulerLagrangeRhs euler_lagrange_rhs(const VakonomicSystem& sys, const Vec& x, const Vec& y);

/// Defect of the multiplier form of the equations of motion, evaluated on a
/// state and a proposed right-hand side. With phi^A = y^A - psi^A and
/// lambda_A = y_A - dL/dy^A, the alpha-th entry is
///   d/dt(dL/dy^alpha) - rho^i_alpha dL/dx^i
///   + lambda_A [ d/dt(dphi^A/dy^alpha) - rho^i_alpha dphi^A/dx^i ]
///   + dlambda_A/dt dphi^A/dy^alpha
///   + p_gamma (Chat^gamma_{alpha 0} + Y^beta Chat^gamma_{alpha beta})
/// and vanishes along solutions.
Vec multiplier_form_residual(const VakonomicSystem& sys, const VakonomicState& s,
                             const VakonomicRhs& rhs);

}  // namespace affmech
