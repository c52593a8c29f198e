#include "affmech/variational.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace affmech {
namespace {

const double kPi = std::acos(-1.0);

// Frame transport term of the lift fiber: Cd(g,c) xbar^c - Y^b Cl(g,c,b) xbar^c.
Vec transport_term(const Mat& Cd, const Tensor3& Cl, const Vec& Y, const Vec& xbar) {
  const int n = static_cast<int>(xbar.size());
  Vec out = Cd * xbar;
  for (int g = 0; g < n; ++g)
    for (int c = 0; c < n; ++c)
      for (int b = 0; b < n; ++b) out[g] -= Y[b] * Cl(g, c, b) * xbar[c];
  return out;
}

// Hermite interpolation of the trajectory, with slopes precomputed once.
struct PathInterp {
  const std::vector<double>& t;
  std::vector<Vec> packed;
  std::vector<Vec> slopes;
  int m, mb, nf;

  PathInterp(const VakonomicSystem& sys, const Trajectory& traj)
      : t(traj.times), m(sys.m()), mb(sys.mbar()), nf(sys.nfree()) {
    packed.resize(traj.size());
    for (size_t k = 0; k < traj.size(); ++k) {
      Vec z(m + mb + nf);
      z.head(m) = traj.states[k].x;
      z.segment(m, mb) = traj.states[k].yA;
      z.tail(nf) = traj.states[k].ya;
      packed[k] = z;
    }
    slopes = stencil_slopes(t, packed);
  }

  VakonomicState eval(double tq) const {
    const int N = static_cast<int>(packed.size());
    int k = 0;
    while (k + 2 < N && t[k + 1] < tq) ++k;
    const double h = t[k + 1] - t[k];
    const double s = (tq - t[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const Vec z = (2 * s3 - 3 * s2 + 1) * packed[k] + (s3 - 2 * s2 + s) * h * slopes[k] +
                  (-2 * s3 + 3 * s2) * packed[k + 1] + (s3 - s2) * h * slopes[k + 1];
    return {z.head(m), z.segment(m, mb), z.tail(nf)};
  }
};

double tangency_gap(const std::vector<double>& t, const std::vector<Vec>& wA,
                    const std::vector<Vec>& dwA) {
  if (wA.empty() || wA[0].size() == 0) return 0.0;
  const std::vector<Vec> fd = stencil_slopes(t, wA);
  double worst = 0.0;
  for (size_t k = 0; k < wA.size(); ++k)
    worst = std::max(worst, (fd[k] - dwA[k]).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace

CompleteLift complete_lift(const AffgebroidSpec& spec, const Vec& xbar, const Mat& xbar_jac,
                           const Vec& x, const Vec& y) {
  CompleteLift out;
  out.base = spec.anchor_linear(x) * xbar;
  const Vec dxv = eval_anchor(spec, x, y);
  out.fiber = xbar_jac * dxv + transport_term(spec.structure_drift(x), spec.structure_linear(x),
                                              y, xbar);
  return out;
}

Vec lift_fiber_along(const AffgebroidSpec& spec, const Vec& x, const Vec& yfull, const Vec& xbar,
                     const Vec& xbar_dot) {
  return xbar_dot +
         transport_term(spec.structure_drift(x), spec.structure_linear(x), yfull, xbar);
}

SolvedVariation solve_variation(const VakonomicSystem& sys, const Trajectory& traj,
                                const VariationField& var, const Vec& xbarA0) {
  const int m = sys.m(), mb = sys.mbar(), nf = sys.nfree();
  const int N = static_cast<int>(traj.size());
  if (N < 2) throw std::invalid_argument("solve_variation: need at least two samples");

  const auto free_dot = [&](double t) -> Vec {
    if (var.free_components_dot) return var.free_components_dot(t);
    const double h = 1e-6;
    return ((var.free_components(t + h) - var.free_components(t - h)) / (2.0 * h)).eval();
  };

  const PathInterp interp(sys, traj);

  // Tangency right-hand side for the constrained components w, together with
  // the full section data assembled at (t, w).
  struct Assembled {
    Vec xbar, xbar_dot, dw;
  };
  const auto assemble = [&](double t, const Vec& w) -> Assembled {
    const VakonomicState s = interp.eval(t);
    const Vec Y = full_velocities(sys, s);
    const Vec Xa = var.free_components(t);
    const Vec Xa_dot = free_dot(t);

    Vec xbar = Vec::Zero(sys.n());
    for (int a = 0; a < nf; ++a) xbar[sys.constraint.free_idx[a]] = Xa[a];
    for (int A = 0; A < mb; ++A) xbar[sys.constraint.constrained[A]] = w[A];

    const Vec tr = transport_term(sys.spec.structure_drift(s.x), sys.spec.structure_linear(s.x),
                                  Y, xbar);
    const Vec base = sys.spec.anchor_linear(s.x) * xbar;

    Vec u(m + nf);
    u.head(m) = s.x;
    u.tail(nf) = s.ya;

    Vec dw(mb);
    for (int A = 0; A < mb; ++A) {
      const Vec g = sys.constraint.psi[A].grad(u);
      double v = g.head(m).dot(base);
      for (int a = 0; a < nf; ++a) v += g[m + a] * (Xa_dot[a] + tr[sys.constraint.free_idx[a]]);
      v -= tr[sys.constraint.constrained[A]];
      dw[A] = v;
    }

    Vec xbar_dot = Vec::Zero(sys.n());
    for (int a = 0; a < nf; ++a) xbar_dot[sys.constraint.free_idx[a]] = Xa_dot[a];
    for (int A = 0; A < mb; ++A) xbar_dot[sys.constraint.constrained[A]] = dw[A];
    return {xbar, xbar_dot, dw};
  };

  SolvedVariation out;
  out.times = traj.times;
  out.xbar.resize(N);
  out.xbar_dot.resize(N);

  Vec w = xbarA0.size() == mb ? xbarA0 : Vec::Zero(mb);
  std::vector<Vec> wA(N), dwA(N);
  for (int k = 0; k < N; ++k) {
    const Assembled at = assemble(traj.times[k], w);
    out.xbar[k] = at.xbar;
    out.xbar_dot[k] = at.xbar_dot;
    wA[k] = w;
    dwA[k] = at.dw;
    if (k + 1 == N) break;

    const double t = traj.times[k];
    const double h = traj.times[k + 1] - t;
    const Vec k1 = at.dw;
    const Vec k2 = assemble(t + 0.5 * h, w + 0.5 * h * k1).dw;
    const Vec k3 = assemble(t + 0.5 * h, w + 0.5 * h * k2).dw;
    const Vec k4 = assemble(t + h, w + h * k3).dw;
    w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  out.tangency_residual = tangency_gap(out.times, wA, dwA);
  return out;
}

double quadrature(const std::vector<double>& t, const std::vector<double>& f) {
  const int N = static_cast<int>(t.size());
  if (N < 2) return 0.0;
  const double h = t[1] - t[0];
  bool uniform = true;
  for (int k = 1; k + 1 < N; ++k)
    if (std::abs((t[k + 1] - t[k]) - h) > 1e-9 * std::max(1.0, std::abs(h))) uniform = false;

  if (!uniform || N == 2) {
    double s = 0.0;
    for (int k = 0; k + 1 < N; ++k) s += 0.5 * (t[k + 1] - t[k]) * (f[k] + f[k + 1]);
    return s;
  }
  const int K = N - 1;
  const int simpson_end = (K % 2 == 0) ? K : K - 3;
  double s = 0.0;
  if (simpson_end > 0) {
    s += f[0] + f[simpson_end];
    for (int k = 1; k < simpson_end; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * f[k];
    s *= h / 3.0;
  }
  if (simpson_end < K)
    s += 3.0 * h / 8.0 * (f[K - 3] + 3.0 * f[K - 2] + 3.0 * f[K - 1] + f[K]);
  return s;
}

double action(const VakonomicSystem& sys, const Trajectory& traj) {
  std::vector<double> f(traj.size());
  for (size_t k = 0; k < traj.size(); ++k)
    f[k] = restricted_lagrangian(sys, traj.states[k].x, traj.states[k].ya);
  return quadrature(traj.times, f);
}

ActionDerivative action_derivative(const VakonomicSystem& sys, const Trajectory& traj,
                                   const SolvedVariation& var, double eps) {
  const int N = static_cast<int>(traj.size());
  if (static_cast<int>(var.xbar.size()) != N)
    throw std::invalid_argument("action_derivative: variation grid does not match trajectory");
  const int mb = sys.mbar(), nf = sys.nfree();

  std::vector<double> fplus(N), fminus(N);
  for (int k = 0; k < N; ++k) {
    const VakonomicState& s = traj.states[k];
    const Vec Y = full_velocities(sys, s);
    const Vec base = sys.spec.anchor_linear(s.x) * var.xbar[k];
    const Vec fiber = lift_fiber_along(sys.spec, s.x, Y, var.xbar[k], var.xbar_dot[k]);
    Vec fiber_free(nf);
    for (int a = 0; a < nf; ++a) fiber_free[a] = fiber[sys.constraint.free_idx[a]];
    fplus[k] = restricted_lagrangian(sys, s.x + eps * base, s.ya + eps * fiber_free);
    fminus[k] = restricted_lagrangian(sys, s.x - eps * base, s.ya - eps * fiber_free);
  }

  ActionDerivative out;
  out.fd = (quadrature(traj.times, fplus) - quadrature(traj.times, fminus)) / (2.0 * eps);

  std::vector<Vec> pfree(N);
  for (int k = 0; k < N; ++k) pfree[k] = momenta_free(sys, traj.states[k]);
  const std::vector<Vec> pdot = stencil_slopes(traj.times, pfree);

  std::vector<double> pairing(N);
  for (int k = 0; k < N; ++k) {
    const EngineEval ev = engine_eval(sys, traj.states[k]);
    const Vec el = ev.dpa - pdot[k];
    double v = 0.0;
    for (int a = 0; a < nf; ++a) v += el[a] * var.xbar[k][sys.constraint.free_idx[a]];
    pairing[k] = v;
  }

  const auto boundary_at = [&](int k) {
    double v = 0.0;
    for (int A = 0; A < mb; ++A)
      v += traj.states[k].yA[A] * var.xbar[k][sys.constraint.constrained[A]];
    for (int a = 0; a < nf; ++a) v += pfree[k][a] * var.xbar[k][sys.constraint.free_idx[a]];
    return v;
  };
  out.boundary_term = boundary_at(N - 1) - boundary_at(0);
  out.analytic = quadrature(traj.times, pairing) + out.boundary_term;
  out.defect = std::abs(out.fd - out.analytic);
  return out;
}

EndpointVariation endpoint_compatible_variation(const VakonomicSystem& sys,
                                                const Trajectory& traj) {
  const int mb = sys.mbar(), nf = sys.nfree();
  if (nf == 0) throw std::invalid_argument("endpoint_compatible_variation: no free directions");
  const double t0 = traj.times.front(), t1 = traj.times.back();
  const double span = t1 - t0;

  // Bump k drives one free direction with sin(k pi tau) sin(pi tau), which
  // vanishes with its envelope at both ends.
  const auto make_field = [&](int k) {
    const int dir = (k - 1) % nf;
    VariationField f;
    f.free_components = [=](double t) {
      const double tau = (t - t0) / span;
      Vec v = Vec::Zero(nf);
      v[dir] = std::sin(k * kPi * tau) * std::sin(kPi * tau);
      return v;
    };
    f.free_components_dot = [=](double t) {
      const double tau = (t - t0) / span;
      Vec v = Vec::Zero(nf);
      v[dir] = (k * kPi * std::cos(k * kPi * tau) * std::sin(kPi * tau) +
                kPi * std::sin(k * kPi * tau) * std::cos(kPi * tau)) /
               span;
      return v;
    };
    return f;
  };

  EndpointVariation out;
  if (mb == 0) {
    out.field = make_field(1);
    out.solved = solve_variation(sys, traj, out.field);
    out.coeffs = Vec::Ones(1);
    return out;
  }

  const int NB = mb + 2;
  std::vector<VariationField> fields(NB);
  std::vector<SolvedVariation> solved(NB);
  Mat E(mb, NB);
  for (int k = 0; k < NB; ++k) {
    fields[k] = make_field(k + 1);
    solved[k] = solve_variation(sys, traj, fields[k]);
    for (int A = 0; A < mb; ++A)
      E(A, k) = solved[k].xbar.back()[sys.constraint.constrained[A]];
  }
  Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullV);
  const Vec c = svd.matrixV().col(NB - 1);
  out.coeffs = c;
  out.endpoint_norm = (E * c).norm();

  out.field.free_components = [fields, c, nf](double t) {
    Vec v = Vec::Zero(nf);
    for (int k = 0; k < c.size(); ++k) v += c[k] * fields[k].free_components(t);
    return v;
  };
  out.field.free_components_dot = [fields, c, nf](double t) {
    Vec v = Vec::Zero(nf);
    for (int k = 0; k < c.size(); ++k) v += c[k] * fields[k].free_components_dot(t);
    return v;
  };

  const int N = static_cast<int>(traj.size());
  out.solved.times = traj.times;
  out.solved.xbar.assign(N, Vec::Zero(sys.n()));
  out.solved.xbar_dot.assign(N, Vec::Zero(sys.n()));
  std::vector<Vec> wA(N, Vec::Zero(mb)), dwA(N, Vec::Zero(mb));
  for (int k = 0; k < NB; ++k)
    for (int i = 0; i < N; ++i) {
      out.solved.xbar[i] += c[k] * solved[k].xbar[i];
      out.solved.xbar_dot[i] += c[k] * solved[k].xbar_dot[i];
    }
  for (int i = 0; i < N; ++i)
    for (int A = 0; A < mb; ++A) {
      wA[i][A] = out.solved.xbar[i][sys.constraint.constrained[A]];
      dwA[i][A] = out.solved.xbar_dot[i][sys.constraint.constrained[A]];
    }
  out.solved.tangency_residual = tangency_gap(out.solved.times, wA, dwA);
  return out;
}

}  // namespace affmech
