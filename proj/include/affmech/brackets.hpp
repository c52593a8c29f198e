#pragma once

#include "affmech/vakonomic.hpp"

namespace affmech {

/// Hamiltonian density H(x, p) of the packed argument [x (m); p (n)].
/// A section of the affine dual assigns the drift momentum y_0 = -H(x, p).
struct HamiltonianSection {
  ScalarField H;
};

struct HamiltonRhs {
  Vec dx;  // m
  Vec dp;  // n
};

/// Hamilton equations of the affgebroid:
///   dx^i    = rho^i_0 + rho^i_alpha dH/dp_alpha
///   dp_alpha = -rho^i_alpha dH/dx^i
///              + p_gamma (C^gamma_{0 alpha} + C^gamma_{beta alpha} dH/dp_beta)
HamiltonRhs hamilton_rhs(const AffgebroidSpec& spec, const HamiltonianSection& h, const Vec& x,
                         const Vec& p);

/// Bi-affine bracket of two sections at (x, p):
///   {h1, h2} = rho^i_0 d(H1 - H2)/dx^i
///              + rho^i_alpha (dH1/dx^i dH2/dp_alpha - dH1/dp_alpha dH2/dx^i)
///              + C^gamma_{0 alpha} p_gamma d(H1 - H2)/dp_alpha
///              - C^gamma_{alpha beta} p_gamma dH1/dp_alpha dH2/dp_beta
double vakonomic_bracket(const AffgebroidSpec& spec, const HamiltonianSection& h1,
                         const HamiltonianSection& h2, const Vec& x, const Vec& p);

/// Affine-linear part of the bracket: the derivative of h2 -> {h, h2} in the
/// function direction, applied to an observable F(x, p):
///   {h, F} = rho^i_0 dF/dx^i
///            + rho^i_alpha (dH/dp_alpha dF/dx^i - dH/dx^i dF/dp_alpha)
///            + C^gamma_{0 alpha} p_gamma dF/dp_alpha
///            + C^gamma_{alpha beta} p_gamma dH/dp_alpha dF/dp_beta
/// This is the generator of time evolution: along the flow of h,
/// dF/dt = {h, F}.
double affine_linear_bracket(const AffgebroidSpec& spec, const HamiltonianSection& h,
                             const ScalarField& F, const Vec& x, const Vec& p);

/// Poisson bracket of the bivector on the extended momentum space with packed
/// argument [x (m); y_0 (1); p (n)]:
///   Pi = rho^i_0 d_x^i ^ d_{y0} + rho^i_alpha d_x^i ^ d_{p_alpha}
///        - C^gamma_{0 alpha} p_gamma d_{y0} ^ d_{p_alpha}
///        - 1/2 C^gamma_{alpha beta} p_gamma d_{p_alpha} ^ d_{p_beta}
double poisson_w1_bracket(const AffgebroidSpec& spec, const ScalarField& F, const ScalarField& G,
                          const Vec& x, double y0, const Vec& p);

/// Hamiltonian section induced by the constrained problem on its momentum
/// level set: H(x, p) = y_A psi^A + p_a mu^a - Ltil, with the free velocities
/// mu recovered from the momenta by Newton inversion. The gradient is exact
/// by stationarity of the inverted momentum map.
HamiltonianSection w1prime_section(const VakonomicSystem& sys);

struct EvolutionCheck {
  double bracket_value = 0.0;
  double flow_derivative = 0.0;
  double defect = 0.0;
};

/// Compares {h, F} against the chain-rule derivative of F along the
/// constrained flow at a state (multiplier/velocity form mapped to momenta).
EvolutionCheck evolution_check(const VakonomicSystem& sys, const HamiltonianSection& h,
                               const VakonomicState& s, const ScalarField& F);

}  // namespace affmech
