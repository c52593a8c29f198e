#include "affmech/field.hpp"

namespace affmech {

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step) {
  Vec g(x.size());
  Vec xt = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = fd_h(step, x[i]);
    const double xi = x[i];
    xt[i] = xi + h;
    const double fp = f(xt);
    xt[i] = xi - h;
    const double fm = f(xt);
    xt[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double step, int out_dim) {
  Mat J(out_dim, x.size());
  Vec xt = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = fd_h(step, x[i]);
    const double xi = x[i];
    xt[i] = xi + h;
    const Vec fp = f(xt);
    xt[i] = xi - h;
    const Vec fm = f(xt);
    xt[i] = xi;
    J.col(i) = (fp - fm) / (2.0 * h);
  }
  return J;
}

Mat fd_hessian_values(const std::function<double(const Vec&)>& f, const Vec& x, double step) {
  const int d = static_cast<int>(x.size());
  Mat H(d, d);
  Vec xt = x;
  const double f0 = f(x);
  for (int i = 0; i < d; ++i) {
    const double hi = fd_h(step, x[i]);
    const double xi = x[i];
    xt[i] = xi + hi;
    const double fp = f(xt);
    xt[i] = xi - hi;
    const double fm = f(xt);
    xt[i] = xi;
    H(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (int j = i + 1; j < d; ++j) {
      const double hj = fd_h(step, x[j]);
      const double xj = x[j];
      xt[i] = xi + hi; xt[j] = xj + hj;
      const double fpp = f(xt);
      xt[j] = xj - hj;
      const double fpm = f(xt);
      xt[i] = xi - hi; xt[j] = xj + hj;
      const double fmp = f(xt);
      xt[j] = xj - hj;
      const double fmm = f(xt);
      xt[i] = xi; xt[j] = xj;
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
    }
  }
  return H;
}

Vec ScalarField::grad(const Vec& x) const {
  if (gradient) return gradient(x);
  return fd_gradient(value, x, fd_step_first);
}

Mat ScalarField::hess(const Vec& x) const {
  if (hessian) return hessian(x);
  if (gradient) {
    return fd_jacobian([this](const Vec& p) { return gradient(p); }, x, fd_step_second,
                       static_cast<int>(x.size()));
  }
  return fd_hessian_values(value, x, fd_step_second);
}

}  // namespace affmech
