#include "affmech/vakonomic.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <limits>

namespace affmech {
namespace {

// Condition estimate sigma_max / sigma_min; inf when numerically rank-deficient.
double cond_estimate(const Mat& R) {
  if (R.rows() == 0) return 1.0;
  Eigen::JacobiSVD<Mat> svd(R);
  const auto& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / smin;
}

// Bracket contribution sum_gamma p_gamma (Chat^gamma_{alpha 0} + sum_beta Y^beta
// Chat^gamma_{alpha beta}) for every alpha, with Chat^gamma_{alpha 0} = -C^gamma_{0 alpha}.
Vec bracket_term(const Mat& Cd, const Tensor3& Cl, const Vec& p, const Vec& Y) {
  const int n = static_cast<int>(p.size());
  Vec bt = Vec::Zero(n);
  for (int alpha = 0; alpha < n; ++alpha) {
    double acc = 0.0;
    for (int g = 0; g < n; ++g) {
      double inner = -Cd(g, alpha);
      for (int beta = 0; beta < n; ++beta) inner += Y[beta] * Cl(g, alpha, beta);
      acc += p[g] * inner;
    }
    bt[alpha] = acc;
  }
  return bt;
}

}  // namespace

ConstraintMap unconstrained_map(int n) {
  ConstraintMap c;
  c.free_idx.resize(n);
  for (int i = 0; i < n; ++i) c.free_idx[i] = i;
  return c;
}

RestrictedDerivs restricted_derivs(const VakonomicSystem& sys, const Vec& x, const Vec& u) {
  const int m = sys.m(), n = sys.n(), mb = sys.mbar(), nf = sys.nfree();
  RestrictedDerivs rd;

  Vec xu(m + nf);
  xu.head(m) = x;
  xu.tail(nf) = u;

  rd.psi = Vec::Zero(mb);
  rd.psi_x = Mat::Zero(mb, m);
  rd.psi_u = Mat::Zero(mb, nf);
  rd.psi_hess.resize(mb);
  for (int A = 0; A < mb; ++A) {
    const ScalarField& f = sys.constraint.psi[A];
    rd.psi[A] = f(xu);
    const Vec g = f.grad(xu);
    rd.psi_x.row(A) = g.head(m);
    rd.psi_u.row(A) = g.tail(nf);
    rd.psi_hess[A] = f.hess(xu);
  }

  rd.Y = Vec::Zero(n);
  for (int A = 0; A < mb; ++A) rd.Y[sys.constraint.constrained[A]] = rd.psi[A];
  for (int a = 0; a < nf; ++a) rd.Y[sys.constraint.free_idx[a]] = u[a];

  Vec xy(m + n);
  xy.head(m) = x;
  xy.tail(n) = rd.Y;
  rd.L = sys.lagrangian(xy);
  const Vec Lg = sys.lagrangian.grad(xy);
  const Mat LH = sys.lagrangian.hess(xy);

  const auto iY = [m](int alpha) { return m + alpha; };
  const auto& con = sys.constraint.constrained;
  const auto& fre = sys.constraint.free_idx;

  rd.dLdx = Lg.head(m);
  for (int A = 0; A < mb; ++A) rd.dLdx += Lg[iY(con[A])] * rd.psi_x.row(A).transpose();

  rd.dLdu = Vec::Zero(nf);
  for (int a = 0; a < nf; ++a) {
    double v = Lg[iY(fre[a])];
    for (int A = 0; A < mb; ++A) v += Lg[iY(con[A])] * rd.psi_u(A, a);
    rd.dLdu[a] = v;
  }

  rd.d2L_uu = Mat::Zero(nf, nf);
  for (int a = 0; a < nf; ++a)
    for (int b = 0; b < nf; ++b) {
      double v = LH(iY(fre[a]), iY(fre[b]));
      for (int A = 0; A < mb; ++A) {
        v += LH(iY(fre[a]), iY(con[A])) * rd.psi_u(A, b);
        v += LH(iY(con[A]), iY(fre[b])) * rd.psi_u(A, a);
        v += Lg[iY(con[A])] * rd.psi_hess[A](m + a, m + b);
        for (int B = 0; B < mb; ++B)
          v += LH(iY(con[A]), iY(con[B])) * rd.psi_u(A, a) * rd.psi_u(B, b);
      }
      rd.d2L_uu(a, b) = v;
    }

  rd.d2L_ux = Mat::Zero(nf, m);
  for (int a = 0; a < nf; ++a)
    for (int i = 0; i < m; ++i) {
      double v = LH(iY(fre[a]), i);
      for (int B = 0; B < mb; ++B) v += LH(iY(fre[a]), iY(con[B])) * rd.psi_x(B, i);
      for (int A = 0; A < mb; ++A) {
        double inner = LH(iY(con[A]), i);
        for (int B = 0; B < mb; ++B) inner += LH(iY(con[A]), iY(con[B])) * rd.psi_x(B, i);
        v += inner * rd.psi_u(A, a);
        v += Lg[iY(con[A])] * rd.psi_hess[A](m + a, i);
      }
      rd.d2L_ux(a, i) = v;
    }

  return rd;
}

double restricted_lagrangian(const VakonomicSystem& sys, const Vec& x, const Vec& ya) {
  const int m = sys.m(), n = sys.n(), mb = sys.mbar(), nf = sys.nfree();
  Vec xu(m + nf);
  xu.head(m) = x;
  xu.tail(nf) = ya;
  Vec Y = Vec::Zero(n);
  for (int A = 0; A < mb; ++A) Y[sys.constraint.constrained[A]] = sys.constraint.psi[A](xu);
  for (int a = 0; a < nf; ++a) Y[sys.constraint.free_idx[a]] = ya[a];
  Vec xy(m + n);
  xy.head(m) = x;
  xy.tail(n) = Y;
  return sys.lagrangian(xy);
}

Vec full_velocities(const VakonomicSystem& sys, const VakonomicState& s) {
  return restricted_derivs(sys, s.x, s.ya).Y;
}

Vec scatter_momenta(const VakonomicSystem& sys, const Vec& yA, const Vec& pa) {
  Vec p = Vec::Zero(sys.n());
  for (int A = 0; A < sys.mbar(); ++A) p[sys.constraint.constrained[A]] = yA[A];
  for (int a = 0; a < sys.nfree(); ++a) p[sys.constraint.free_idx[a]] = pa[a];
  return p;
}

Vec momenta_free(const VakonomicSystem& sys, const VakonomicState& s) {
  const RestrictedDerivs rd = restricted_derivs(sys, s.x, s.ya);
  return rd.dLdu - rd.psi_u.transpose() * s.yA;
}

Vec w1_residual(const VakonomicSystem& sys, const VakonomicState& s, const Vec& pa) {
  return pa - momenta_free(sys, s);
}

double w1prime_y0(const VakonomicSystem& sys, const VakonomicState& s) {
  const RestrictedDerivs rd = restricted_derivs(sys, s.x, s.ya);
  const Vec pa = rd.dLdu - rd.psi_u.transpose() * s.yA;
  return rd.L - s.yA.dot(rd.psi) - pa.dot(s.ya);
}

double pontryagin_hamiltonian(const VakonomicSystem& sys, const Vec& x, double y0, const Vec& p,
                              const Vec& ya) {
  const RestrictedDerivs rd = restricted_derivs(sys, x, ya);
  double h = y0 - rd.L;
  for (int A = 0; A < sys.mbar(); ++A) h += p[sys.constraint.constrained[A]] * rd.psi[A];
  for (int a = 0; a < sys.nfree(); ++a) h += p[sys.constraint.free_idx[a]] * ya[a];
  return h;
}

static Mat regularity_from(const VakonomicSystem& sys, const RestrictedDerivs& rd, const Vec& yA) {
  const int m = sys.m(), nf = sys.nfree();
  Mat R = rd.d2L_uu;
  for (int A = 0; A < sys.mbar(); ++A)
    R -= yA[A] * rd.psi_hess[A].block(m, m, nf, nf);
  return R;
}

Mat regularity_matrix(const VakonomicSystem& sys, const VakonomicState& s) {
  return regularity_from(sys, restricted_derivs(sys, s.x, s.ya), s.yA);
}

RegularityReport regularity_check(const VakonomicSystem& sys, const VakonomicState& s) {
  const Mat R = regularity_matrix(sys, s);
  RegularityReport rep;
  rep.det = R.rows() ? R.determinant() : 1.0;
  rep.condition = cond_estimate(R);
  const double scale = std::max(1.0, R.rows() ? R.cwiseAbs().maxCoeff() : 0.0);
  rep.regular = std::abs(rep.det) >= sys.tol.singular_det * scale;
  return rep;
}

Vec controls_from_momenta(const VakonomicSystem& sys, const Vec& x, const Vec& p) {
  const int nf = sys.nfree();
  Vec pa(nf), yA(sys.mbar());
  for (int a = 0; a < nf; ++a) pa[a] = p[sys.constraint.free_idx[a]];
  for (int A = 0; A < sys.mbar(); ++A) yA[A] = p[sys.constraint.constrained[A]];

  Vec u = pa;  // seed: identity momentum map
  const double fscale = std::max(1.0, pa.size() ? pa.cwiseAbs().maxCoeff() : 0.0);
  for (int it = 0; it < sys.tol.newton_max_iter; ++it) {
    const RestrictedDerivs rd = restricted_derivs(sys, x, u);
    const Vec F = rd.dLdu - rd.psi_u.transpose() * yA - pa;
    if (!F.size() || F.cwiseAbs().maxCoeff() <= sys.tol.newton_tol * fscale) return u;
    const Mat R = regularity_from(sys, rd, yA);
    const double rscale = std::max(1.0, R.cwiseAbs().maxCoeff());
    Eigen::PartialPivLU<Mat> lu(R);
    const double det = lu.determinant();
    if (std::abs(det) < sys.tol.singular_det * rscale)
      throw SingularRegularity(det, cond_estimate(R), "controls_from_momenta");
    u -= lu.solve(F);
  }
  const RestrictedDerivs rd = restricted_derivs(sys, x, u);
  const double res = (rd.dLdu - rd.psi_u.transpose() * yA - pa).cwiseAbs().maxCoeff();
  throw NoConvergence(sys.tol.newton_max_iter, res, "controls_from_momenta");
}

EngineEval engine_eval(const VakonomicSystem& sys, const VakonomicState& s) {
  const int m = sys.m(), mb = sys.mbar(), nf = sys.nfree();
  EngineEval ev;
  ev.rd = restricted_derivs(sys, s.x, s.ya);
  const RestrictedDerivs& rd = ev.rd;

  ev.G = rd.dLdx - rd.psi_x.transpose() * s.yA;
  ev.pfull = scatter_momenta(sys, s.yA, rd.dLdu - rd.psi_u.transpose() * s.yA);
  ev.dx = eval_anchor(sys.spec, s.x, rd.Y);

  const Mat Cd = sys.spec.structure_drift(s.x);
  const Tensor3 Cl = sys.spec.structure_linear(s.x);
  const Mat rho = sys.spec.anchor_linear(s.x);
  const Vec bt = bracket_term(Cd, Cl, ev.pfull, rd.Y);

  ev.dyA = Vec::Zero(mb);
  for (int A = 0; A < mb; ++A) {
    const int cA = sys.constraint.constrained[A];
    ev.dyA[A] = ev.G.dot(rho.col(cA)) - bt[cA];
  }

  ev.dpa = Vec::Zero(nf);
  for (int a = 0; a < nf; ++a) {
    const int fa = sys.constraint.free_idx[a];
    ev.dpa[a] = ev.G.dot(rho.col(fa)) - bt[fa];
  }

  ev.R = rd.d2L_uu;
  for (int A = 0; A < mb; ++A) ev.R -= s.yA[A] * rd.psi_hess[A].block(m, m, nf, nf);

  // Cross terms d/dt of (dLtil/dy^a - y_A dpsi^A/dy^a) taken along dx.
  Mat cross = rd.d2L_ux;
  for (int A = 0; A < mb; ++A) cross -= s.yA[A] * rd.psi_hess[A].block(m, 0, nf, m);

  Vec b = ev.dpa - cross * ev.dx + rd.psi_u.transpose() * ev.dyA;

  if (nf > 0) {
    const double rscale = std::max(1.0, ev.R.cwiseAbs().maxCoeff());
    Eigen::PartialPivLU<Mat> lu(ev.R);
    const double det = lu.determinant();
    if (std::abs(det) < sys.tol.singular_det * rscale)
      throw SingularRegularity(det, cond_estimate(ev.R), "vakonomic_rhs");
    ev.dya = lu.solve(b);
  } else {
    ev.dya = Vec::Zero(0);
  }
  return ev;
}

VakonomicRhs vakonomic_rhs(const VakonomicSystem& sys, const VakonomicState& s) {
  const EngineEval ev = engine_eval(sys, s);
  return {ev.dx, ev.dyA, ev.dya};
}

Vec momenta_rhs(const VakonomicSystem& sys, const VakonomicState& s) {
  return engine_eval(sys, s).dpa;
}

EulerLagrangeRhs euler_lagrange_rhs(const VakonomicSystem& sys, const Vec& x, const Vec& y) {
  if (sys.mbar() != 0)
    throw std::invalid_argument("euler_lagrange_rhs requires an unconstrained system");
  const int m = sys.m(), n = sys.n();
  Vec xy(m + n);
  xy.head(m) = x;
  xy.tail(n) = y;
  const Vec Lg = sys.lagrangian.grad(xy);
  const Mat LH = sys.lagrangian.hess(xy);
  const Vec Lx = Lg.head(m);
  const Vec p = Lg.tail(n);

  EulerLagrangeRhs out;
  out.dx = eval_anchor(sys.spec, x, y);

  const Mat Cd = sys.spec.structure_drift(x);
  const Tensor3 Cl = sys.spec.structure_linear(x);
  const Mat rho = sys.spec.anchor_linear(x);
  const Vec bt = bracket_term(Cd, Cl, p, y);

  Vec dp(n);
  for (int alpha = 0; alpha < n; ++alpha) dp[alpha] = Lx.dot(rho.col(alpha)) - bt[alpha];

  const Mat Hyy = LH.block(m, m, n, n);
  const Mat Hyx = LH.block(m, 0, n, m);
  const Vec b = dp - Hyx * out.dx;
  const double rscale = std::max(1.0, Hyy.cwiseAbs().maxCoeff());
  Eigen::PartialPivLU<Mat> lu(Hyy);
  const double det = lu.determinant();
  if (std::abs(det) < sys.tol.singular_det * rscale)
    throw SingularRegularity(det, cond_estimate(Hyy), "euler_lagrange_rhs");
  out.dy = lu.solve(b);
  return out;
}

Vec multiplier_form_residual(const VakonomicSystem& sys, const VakonomicState& s,
                             const VakonomicRhs& rhs) {
  const int m = sys.m(), n = sys.n(), mb = sys.mbar(), nf = sys.nfree();
  const RestrictedDerivs rd = restricted_derivs(sys, s.x, s.ya);
  const auto& con = sys.constraint.constrained;
  const auto& fre = sys.constraint.free_idx;

  // Fiber velocity derivative: constrained slots follow the constraint map.
  Vec dY = Vec::Zero(n);
  for (int A = 0; A < mb; ++A)
    dY[con[A]] = rd.psi_x.row(A).dot(rhs.dx) + rd.psi_u.row(A).dot(rhs.dya);
  for (int a = 0; a < nf; ++a) dY[fre[a]] = rhs.dya[a];

  Vec xy(m + n);
  xy.head(m) = s.x;
  xy.tail(n) = rd.Y;
  const Vec Lg = sys.lagrangian.grad(xy);
  const Mat LH = sys.lagrangian.hess(xy);
  const Vec Lx = Lg.head(m);

  // d/dt of the full fiber gradient of L along the proposed motion.
  Vec dLy_dt(n);
  for (int alpha = 0; alpha < n; ++alpha) {
    double v = 0.0;
    for (int i = 0; i < m; ++i) v += LH(m + alpha, i) * rhs.dx[i];
    for (int beta = 0; beta < n; ++beta) v += LH(m + alpha, m + beta) * dY[beta];
    dLy_dt[alpha] = v;
  }

  Vec lambda(mb), dlambda(mb);
  for (int A = 0; A < mb; ++A) {
    lambda[A] = s.yA[A] - Lg[m + con[A]];
    dlambda[A] = rhs.dyA[A] - dLy_dt[con[A]];
  }

  const Vec pfull = scatter_momenta(sys, s.yA, rd.dLdu - rd.psi_u.transpose() * s.yA);
  const Mat Cd = sys.spec.structure_drift(s.x);
  const Tensor3 Cl = sys.spec.structure_linear(s.x);
  const Mat rho = sys.spec.anchor_linear(s.x);
  const Vec bt = bracket_term(Cd, Cl, pfull, rd.Y);

  // dphi^A/dy^alpha is the identity on constrained slots and -dpsi^A/dy^a on
  // free ones; only the free block carries a time derivative.
  Vec res(n);
  for (int alpha = 0; alpha < n; ++alpha) {
    double v = dLy_dt[alpha] - Lx.dot(rho.col(alpha)) + bt[alpha];
    for (int A = 0; A < mb; ++A) {
      double dphi_y, ddt_dphi_y, dphi_x_rho;
      const auto fit = std::find(fre.begin(), fre.end(), alpha);
      if (fit == fre.end()) {
        dphi_y = (con[A] == alpha) ? 1.0 : 0.0;
        ddt_dphi_y = 0.0;
      } else {
        const int a = static_cast<int>(fit - fre.begin());
        dphi_y = -rd.psi_u(A, a);
        double d = 0.0;
        for (int i = 0; i < m; ++i) d += rd.psi_hess[A](m + a, i) * rhs.dx[i];
        for (int b = 0; b < nf; ++b) d += rd.psi_hess[A](m + a, m + b) * rhs.dya[b];
        ddt_dphi_y = -d;
      }
      dphi_x_rho = -rd.psi_x.row(A).dot(rho.col(alpha));
      v += lambda[A] * (ddt_dphi_y - dphi_x_rho) + dlambda[A] * dphi_y;
    }
    res[alpha] = v;
  }
  return res;
}

}  // namespace affmech
