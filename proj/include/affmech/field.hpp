#pragma once

#include <Eigen/Dense>
#include <functional>

namespace affmech {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense rank-3 array T(g, a, b) with fixed dimensions, used for the linear
/// structure functions C^g_{ab} of an anchored frame.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int d0, int d1, int d2)
      : d0_(d0), d1_(d1), d2_(d2), v_(Eigen::VectorXd::Zero(d0 * d1 * d2)) {}

  static Tensor3 Zero(int d0, int d1, int d2) { return Tensor3(d0, d1, d2); }

  double& operator()(int g, int a, int b) { return v_[(g * d1_ + a) * d2_ + b]; }
  double operator()(int g, int a, int b) const { return v_[(g * d1_ + a) * d2_ + b]; }

  int dim0() const { return d0_; }
  int dim1() const { return d1_; }
  int dim2() const { return d2_; }

  Tensor3& operator+=(const Tensor3& o) { v_ += o.v_; return *this; }
  Tensor3& operator-=(const Tensor3& o) { v_ -= o.v_; return *this; }
  Tensor3& operator*=(double s) { v_ *= s; return *this; }
  double maxAbs() const { return v_.size() ? v_.cwiseAbs().maxCoeff() : 0.0; }

 private:
  int d0_ = 0, d1_ = 0, d2_ = 0;
  Eigen::VectorXd v_;
};

/// Per-coordinate finite-difference step: relative above 1, absolute below.
inline double fd_h(double step, double xi) { return step * std::max(1.0, std::abs(xi)); }

/// Central-difference gradient of a scalar callable.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step);

/// Central-difference Jacobian of a vector callable; J(k, i) = d f_k / d x_i.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double step, int out_dim);

/// Second-difference Hessian from values only (symmetric by construction).
Mat fd_hessian_values(const std::function<double(const Vec&)>& f, const Vec& x, double step);

/// Smooth scalar function of a packed coordinate vector. Derivative callables
/// are optional; absent ones fall back to central finite differences
/// (fd_step_first for gradients, fd_step_second for Hessians). A Hessian
/// derived from an analytic gradient is not symmetrized, so its asymmetry
/// reflects the differencing error honestly.
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // optional
  std::function<Mat(const Vec&)> hessian;   // optional
  double fd_step_first = 1e-6;
  double fd_step_second = 1e-4;

  double operator()(const Vec& x) const { return value(x); }
  Vec grad(const Vec& x) const;
  Mat hess(const Vec& x) const;

  /// Field with the given value callable and finite-difference derivatives.
  static ScalarField from_value(std::function<double(const Vec&)> f) {
    ScalarField s;
    s.value = std::move(f);
    return s;
  }
  static ScalarField zero() {
    ScalarField s;
    s.value = [](const Vec&) { return 0.0; };
    s.gradient = [](const Vec& x) { return Vec::Zero(x.size()).eval(); };
    s.hessian = [](const Vec& x) { return Mat::Zero(x.size(), x.size()).eval(); };
    return s;
  }
};

}  // namespace affmech
