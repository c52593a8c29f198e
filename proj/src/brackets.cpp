#include "affmech/brackets.hpp"

namespace affmech {
namespace {

Vec packed(const Vec& x, const Vec& p) {
  Vec z(x.size() + p.size());
  z.head(x.size()) = x;
  z.tail(p.size()) = p;
  return z;
}

}  // namespace

HamiltonRhs hamilton_rhs(const AffgebroidSpec& spec, const HamiltonianSection& h, const Vec& x,
                         const Vec& p) {
  const int m = spec.base_dim, n = spec.rank;
  const Vec g = h.H.grad(packed(x, p));
  const Vec Hx = g.head(m);
  const Vec Hp = g.tail(n);

  HamiltonRhs out;
  out.dx = spec.anchor_drift(x) + spec.anchor_linear(x) * Hp;

  const Mat rho = spec.anchor_linear(x);
  const Mat Cd = spec.structure_drift(x);
  const Tensor3 Cl = spec.structure_linear(x);
  out.dp = Vec::Zero(n);
  for (int alpha = 0; alpha < n; ++alpha) {
    double v = -Hx.dot(rho.col(alpha));
    for (int gidx = 0; gidx < n; ++gidx) {
      double inner = Cd(gidx, alpha);
      for (int beta = 0; beta < n; ++beta) inner += Cl(gidx, beta, alpha) * Hp[beta];
      v += p[gidx] * inner;
    }
    out.dp[alpha] = v;
  }
  return out;
}

double vakonomic_bracket(const AffgebroidSpec& spec, const HamiltonianSection& h1,
                         const HamiltonianSection& h2, const Vec& x, const Vec& p) {
  const int m = spec.base_dim, n = spec.rank;
  const Vec g1 = h1.H.grad(packed(x, p));
  const Vec g2 = h2.H.grad(packed(x, p));
  const Vec H1x = g1.head(m), H1p = g1.tail(n);
  const Vec H2x = g2.head(m), H2p = g2.tail(n);

  const Vec rho0 = spec.anchor_drift(x);
  const Mat rho = spec.anchor_linear(x);
  const Mat Cd = spec.structure_drift(x);
  const Tensor3 Cl = spec.structure_linear(x);

  double v = rho0.dot(H1x - H2x);
  for (int alpha = 0; alpha < n; ++alpha)
    v += rho.col(alpha).dot(H1x) * H2p[alpha] - H1p[alpha] * rho.col(alpha).dot(H2x);
  for (int gidx = 0; gidx < n; ++gidx) {
    for (int alpha = 0; alpha < n; ++alpha) {
      v += Cd(gidx, alpha) * p[gidx] * (H1p[alpha] - H2p[alpha]);
      for (int beta = 0; beta < n; ++beta)
        v -= Cl(gidx, alpha, beta) * p[gidx] * H1p[alpha] * H2p[beta];
    }
  }
  return v;
}

double affine_linear_bracket(const AffgebroidSpec& spec, const HamiltonianSection& h,
                             const ScalarField& F, const Vec& x, const Vec& p) {
  const int m = spec.base_dim, n = spec.rank;
  const Vec gh = h.H.grad(packed(x, p));
  const Vec gf = F.grad(packed(x, p));
  const Vec Hx = gh.head(m), Hp = gh.tail(n);
  const Vec Fx = gf.head(m), Fp = gf.tail(n);

  const Vec rho0 = spec.anchor_drift(x);
  const Mat rho = spec.anchor_linear(x);
  const Mat Cd = spec.structure_drift(x);
  const Tensor3 Cl = spec.structure_linear(x);

  double v = rho0.dot(Fx);
  for (int alpha = 0; alpha < n; ++alpha)
    v += Hp[alpha] * rho.col(alpha).dot(Fx) - rho.col(alpha).dot(Hx) * Fp[alpha];
  for (int gidx = 0; gidx < n; ++gidx)
    for (int alpha = 0; alpha < n; ++alpha) {
      v += Cd(gidx, alpha) * p[gidx] * Fp[alpha];
      for (int beta = 0; beta < n; ++beta)
        v += Cl(gidx, alpha, beta) * p[gidx] * Hp[alpha] * Fp[beta];
    }
  return v;
}

double poisson_w1_bracket(const AffgebroidSpec& spec, const ScalarField& F, const ScalarField& G,
                          const Vec& x, double y0, const Vec& p) {
  const int m = spec.base_dim, n = spec.rank;
  Vec z(m + 1 + n);
  z.head(m) = x;
  z[m] = y0;
  z.tail(n) = p;
  const Vec gF = F.grad(z);
  const Vec gG = G.grad(z);
  const Vec Fx = gF.head(m), Gx = gG.head(m);
  const double F0 = gF[m], G0 = gG[m];
  const Vec Fp = gF.tail(n), Gp = gG.tail(n);

  const Vec rho0 = spec.anchor_drift(x);
  const Mat rho = spec.anchor_linear(x);
  const Mat Cd = spec.structure_drift(x);
  const Tensor3 Cl = spec.structure_linear(x);

  double v = rho0.dot(Fx) * G0 - F0 * rho0.dot(Gx);
  for (int alpha = 0; alpha < n; ++alpha)
    v += rho.col(alpha).dot(Fx) * Gp[alpha] - Fp[alpha] * rho.col(alpha).dot(Gx);
  for (int gidx = 0; gidx < n; ++gidx)
    for (int alpha = 0; alpha < n; ++alpha) {
      v -= Cd(gidx, alpha) * p[gidx] * (F0 * Gp[alpha] - Fp[alpha] * G0);
      for (int beta = 0; beta < n; ++beta)
        v -= 0.5 * Cl(gidx, alpha, beta) * p[gidx] * (Fp[alpha] * Gp[beta] - Fp[beta] * Gp[alpha]);
    }
  return v;
}

HamiltonianSection w1prime_section(const VakonomicSystem& sys) {
  // Copies of the system live inside the closures; the section stays valid on
  // its own. The Hessian slot is left to finite differences of the gradient.
  const VakonomicSystem sys_copy = sys;
  HamiltonianSection h;
  h.H.value = [sys_copy](const Vec& z) {
    const int m = sys_copy.m(), n = sys_copy.n();
    const Vec x = z.head(m);
    const Vec p = z.tail(n);
    const Vec mu = controls_from_momenta(sys_copy, x, p);
    const RestrictedDerivs rd = restricted_derivs(sys_copy, x, mu);
    double v = -rd.L;
    for (int A = 0; A < sys_copy.mbar(); ++A)
      v += p[sys_copy.constraint.constrained[A]] * rd.psi[A];
    for (int a = 0; a < sys_copy.nfree(); ++a) v += p[sys_copy.constraint.free_idx[a]] * mu[a];
    return v;
  };
  h.H.gradient = [sys_copy](const Vec& z) {
    const int m = sys_copy.m(), n = sys_copy.n();
    const Vec x = z.head(m);
    const Vec p = z.tail(n);
    const Vec mu = controls_from_momenta(sys_copy, x, p);
    const RestrictedDerivs rd = restricted_derivs(sys_copy, x, mu);
    Vec yA(sys_copy.mbar());
    for (int A = 0; A < sys_copy.mbar(); ++A) yA[A] = p[sys_copy.constraint.constrained[A]];
    Vec g(m + n);
    // Stationarity of the inverted momentum map kills the du terms.
    g.head(m) = rd.psi_x.transpose() * yA - rd.dLdx;
    for (int A = 0; A < sys_copy.mbar(); ++A)
      g[m + sys_copy.constraint.constrained[A]] = rd.psi[A];
    for (int a = 0; a < sys_copy.nfree(); ++a) g[m + sys_copy.constraint.free_idx[a]] = mu[a];
    return g;
  };
  return h;
}

EvolutionCheck evolution_check(const VakonomicSystem& sys, const HamiltonianSection& h,
                               const VakonomicState& s, const ScalarField& F) {
  const EngineEval ev = engine_eval(sys, s);
  EvolutionCheck out;
  out.bracket_value = affine_linear_bracket(sys.spec, h, F, s.x, ev.pfull);

  const Vec g = F.grad(packed(s.x, ev.pfull));
  double flow = g.head(sys.m()).dot(ev.dx);
  for (int A = 0; A < sys.mbar(); ++A)
    flow += g[sys.m() + sys.constraint.constrained[A]] * ev.dyA[A];
  for (int a = 0; a < sys.nfree(); ++a)
    flow += g[sys.m() + sys.constraint.free_idx[a]] * ev.dpa[a];
  out.flow_derivative = flow;
  out.defect = std::abs(out.bracket_value - out.flow_derivative);
  return out;
}

}  // namespace affmech
