#include "affmech/affgebroid.hpp"

namespace affmech {
namespace {

// Extended structure constant over the full frame: indices 0..n, where 0 is
// the drift slot. gamma stays in 1..n (no e_0 component is ever produced).
inline double chat(const Mat& Cd, const Tensor3& Cl, int gamma, int a, int b) {
  if (a == b) return 0.0;
  if (a == 0) return Cd(gamma, b - 1);
  if (b == 0) return -Cd(gamma, a - 1);
  return Cl(gamma, a - 1, b - 1);
}

// Full-frame anchor as an m x (n+1) matrix, column 0 = drift.
inline Mat rho_hat(const AffgebroidSpec& spec, const Vec& x) {
  Mat R(spec.base_dim, spec.rank + 1);
  R.col(0) = spec.anchor_drift(x);
  R.rightCols(spec.rank) = spec.anchor_linear(x);
  return R;
}

template <typename T, typename F>
std::vector<T> fd_stack(const F& f, const Vec& x, double step) {
  std::vector<T> out;
  out.reserve(x.size());
  Vec xt = x;
  for (int j = 0; j < x.size(); ++j) {
    const double h = fd_h(step, x[j]);
    const double xj = x[j];
    xt[j] = xj + h;
    T p = f(xt);
    xt[j] = xj - h;
    T m = f(xt);
    xt[j] = xj;
    p -= m;
    p *= 1.0 / (2.0 * h);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

Vec eval_anchor(const AffgebroidSpec& spec, const Vec& x, const Vec& y) {
  return spec.anchor_drift(x) + spec.anchor_linear(x) * y;
}

SkewReport validate_skew(const AffgebroidSpec& spec, const std::vector<Vec>& probes, double tol) {
  SkewReport rep;
  const int n = spec.rank;
  for (const Vec& x : probes) {
    const Tensor3 C = spec.structure_linear(x);
    for (int g = 0; g < n; ++g)
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
          const double v = std::abs(C(g, a, b) + C(g, b, a));
          if (v > rep.max_violation) {
            rep.max_violation = v;
            rep.worst_gamma = g;
            rep.worst_alpha = a;
            rep.worst_beta = b;
            rep.worst_point = x;
          }
        }
  }
  rep.ok = rep.max_violation <= tol;
  return rep;
}

std::vector<Vec> anchor_drift_dx(const AffgebroidSpec& spec, const Vec& x) {
  if (spec.derivative_mode == DerivativeMode::analytic && spec.anchor_drift_jac)
    return spec.anchor_drift_jac(x);
  return fd_stack<Vec>(spec.anchor_drift, x, spec.fd_step);
}

std::vector<Mat> anchor_linear_dx(const AffgebroidSpec& spec, const Vec& x) {
  if (spec.derivative_mode == DerivativeMode::analytic && spec.anchor_linear_jac)
    return spec.anchor_linear_jac(x);
  return fd_stack<Mat>(spec.anchor_linear, x, spec.fd_step);
}

std::vector<Mat> structure_drift_dx(const AffgebroidSpec& spec, const Vec& x) {
  if (spec.derivative_mode == DerivativeMode::analytic && spec.structure_drift_jac)
    return spec.structure_drift_jac(x);
  return fd_stack<Mat>(spec.structure_drift, x, spec.fd_step);
}

std::vector<Tensor3> structure_linear_dx(const AffgebroidSpec& spec, const Vec& x) {
  if (spec.derivative_mode == DerivativeMode::analytic && spec.structure_linear_jac)
    return spec.structure_linear_jac(x);
  return fd_stack<Tensor3>(spec.structure_linear, x, spec.fd_step);
}

double jacobi_residual(const AffgebroidSpec& spec, const Vec& x) {
  const int n = spec.rank;
  const int m = spec.base_dim;
  const Mat Cd = spec.structure_drift(x);
  const Tensor3 Cl = spec.structure_linear(x);
  const Mat Rho = rho_hat(spec, x);
  const std::vector<Mat> dCd = structure_drift_dx(spec, x);
  const std::vector<Tensor3> dCl = structure_linear_dx(spec, x);

  const auto dchat = [&](int j, int gamma, int a, int b) -> double {
    if (a == b) return 0.0;
    if (a == 0) return dCd[j](gamma, b - 1);
    if (b == 0) return -dCd[j](gamma, a - 1);
    return dCl[j](gamma, a - 1, b - 1);
  };

  double worst = 0.0;
  for (int a = 0; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      for (int c = b + 1; c <= n; ++c)
        for (int phi = 0; phi < n; ++phi) {
          double quad = 0.0;
          for (int eps = 1; eps <= n; ++eps) {
            quad += chat(Cd, Cl, eps - 1, a, b) * chat(Cd, Cl, phi, eps, c);
            quad += chat(Cd, Cl, eps - 1, b, c) * chat(Cd, Cl, phi, eps, a);
            quad += chat(Cd, Cl, eps - 1, c, a) * chat(Cd, Cl, phi, eps, b);
          }
          double der = 0.0;
          for (int j = 0; j < m; ++j) {
            der += Rho(j, c) * dchat(j, phi, a, b);
            der += Rho(j, a) * dchat(j, phi, b, c);
            der += Rho(j, b) * dchat(j, phi, c, a);
          }
          worst = std::max(worst, std::abs(quad - der));
        }
  return worst;
}

double anchor_morphism_residual(const AffgebroidSpec& spec, const Vec& x) {
  const int n = spec.rank;
  const int m = spec.base_dim;
  const Mat Cd = spec.structure_drift(x);
  const Tensor3 Cl = spec.structure_linear(x);
  const Mat Rho = rho_hat(spec, x);
  const std::vector<Vec> dR0 = anchor_drift_dx(spec, x);
  const std::vector<Mat> dRl = anchor_linear_dx(spec, x);

  // dRho(j) is the m x (n+1) derivative of the full-frame anchor w.r.t. x_j.
  const auto dRho = [&](int j, int i, int a) -> double {
    return a == 0 ? dR0[j][i] : dRl[j](i, a - 1);
  };

  double worst = 0.0;
  for (int a = 0; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      for (int i = 0; i < m; ++i) {
        double comm = 0.0;
        for (int j = 0; j < m; ++j)
          comm += Rho(j, a) * dRho(j, i, b) - Rho(j, b) * dRho(j, i, a);
        double target = 0.0;
        for (int g = 1; g <= n; ++g) target += chat(Cd, Cl, g - 1, a, b) * Rho(i, g);
        worst = std::max(worst, std::abs(comm - target));
      }
  return worst;
}

}  // namespace affmech
