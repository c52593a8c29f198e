#include "affmech/models.hpp"

#include <cmath>
#include <stdexcept>

namespace affmech {
namespace {

ScalarField quadratic_fiber_field(int m, const Vec& weights, DerivativeMode mode) {
  const int n = static_cast<int>(weights.size());
  const auto value = [m, n, weights](const Vec& xy) {
    double v = 0.0;
    for (int a = 0; a < n; ++a) v += 0.5 * weights[a] * xy[m + a] * xy[m + a];
    return v;
  };
  if (mode == DerivativeMode::finite_difference) return ScalarField::from_value(value);
  ScalarField f;
  f.value = value;
  f.gradient = [m, n, weights](const Vec& xy) {
    Vec g = Vec::Zero(xy.size());
    for (int a = 0; a < n; ++a) g[m + a] = weights[a] * xy[m + a];
    return g;
  };
  f.hessian = [m, n, weights](const Vec& xy) {
    Mat h = Mat::Zero(xy.size(), xy.size());
    for (int a = 0; a < n; ++a) h(m + a, m + a) = weights[a];
    return h;
  };
  return f;
}

// ---------------------------------------------------------------------------
// Rolling sphere on a turntable. Base (t, x, y); fiber slots
// (y^1, y^2, w1, w2, w3) with the angular slots constrained by the rolling map
//   w1 = (-y^2 + Omega(t) x) / r,  w2 = (y^1 + Omega(t) y) / r,  w3 = c.
// Frame so(3) block among the angular slots: [e_3, e_4] = e_5 cyclically.
// ---------------------------------------------------------------------------

AffgebroidSpec sphere_spec(DerivativeMode mode) {
  AffgebroidSpec spec;
  spec.base_dim = 3;
  spec.rank = 5;
  spec.derivative_mode = mode;
  spec.anchor_drift = [](const Vec&) {
    Vec d(3);
    d << 1.0, 0.0, 0.0;
    return d;
  };
  spec.anchor_linear = [](const Vec&) {
    Mat r = Mat::Zero(3, 5);
    r(1, 0) = 1.0;
    r(2, 1) = 1.0;
    return r;
  };
  spec.structure_drift = [](const Vec&) { return Mat::Zero(5, 5).eval(); };
  spec.structure_linear = [](const Vec&) {
    Tensor3 c(5, 5, 5);
    // [e_3, e_4] = e_5, [e_4, e_5] = e_3, [e_5, e_3] = e_4 (slots 2, 3, 4).
    c(4, 2, 3) = 1.0;
    c(4, 3, 2) = -1.0;
    c(2, 3, 4) = 1.0;
    c(2, 4, 3) = -1.0;
    c(3, 4, 2) = 1.0;
    c(3, 2, 4) = -1.0;
    return c;
  };
  if (mode == DerivativeMode::analytic) {
    spec.anchor_drift_jac = [](const Vec&) {
      return std::vector<Vec>(3, Vec::Zero(3));
    };
    spec.anchor_linear_jac = [](const Vec&) {
      return std::vector<Mat>(3, Mat::Zero(3, 5));
    };
    spec.structure_drift_jac = [](const Vec&) {
      return std::vector<Mat>(3, Mat::Zero(5, 5));
    };
    spec.structure_linear_jac = [](const Vec&) {
      return std::vector<Tensor3>(3, Tensor3::Zero(5, 5, 5));
    };
  }
  return spec;
}

ConstraintMap sphere_constraint(const SphereParams& p, DerivativeMode mode) {
  ConstraintMap c;
  c.constrained = {2, 3, 4};
  c.free_idx = {0, 1};
  const double r = p.r, cv = p.c;
  const auto om = p.omega, omd = p.omega_dot;

  const auto v0 = [r, om](const Vec& xu) { return (-xu[4] + om(xu[0]) * xu[1]) / r; };
  const auto v1 = [r, om](const Vec& xu) { return (xu[3] + om(xu[0]) * xu[2]) / r; };
  const auto v2 = [cv](const Vec&) { return cv; };

  if (mode == DerivativeMode::finite_difference) {
    c.psi = {ScalarField::from_value(v0), ScalarField::from_value(v1),
             ScalarField::from_value(v2)};
    return c;
  }
  ScalarField f0, f1, f2;
  f2.value = v2;
  f2.gradient = [](const Vec& xu) { return Vec::Zero(xu.size()).eval(); };
  f2.hessian = [](const Vec& xu) { return Mat::Zero(xu.size(), xu.size()).eval(); };
  f0.value = v0;
  f0.gradient = [r, om, omd](const Vec& xu) {
    Vec g = Vec::Zero(5);
    g[0] = omd(xu[0]) * xu[1] / r;
    g[1] = om(xu[0]) / r;
    g[4] = -1.0 / r;
    return g;
  };
  f1.value = v1;
  f1.gradient = [r, om, omd](const Vec& xu) {
    Vec g = Vec::Zero(5);
    g[0] = omd(xu[0]) * xu[2] / r;
    g[2] = om(xu[0]) / r;
    g[3] = 1.0 / r;
    return g;
  };
  c.psi = {f0, f1, f2};
  return c;
}

// ---------------------------------------------------------------------------
// Kepler orbit with a thruster. Base (t, q1, q2, v1, v2); gravity sits in the
// drift section, thrust in the last two fiber slots. The first two slots are
// pinned to zero and carry the costates as multipliers.
// ---------------------------------------------------------------------------

double kepler_r2(const Vec& x) {
  const double s = x[1] * x[1] + x[2] * x[2];
  if (std::sqrt(s) <= 1e-12)
    throw OriginSingularity("kepler: evaluation at the gravitational center");
  return s;
}

AffgebroidSpec kepler_spec(DerivativeMode mode) {
  AffgebroidSpec spec;
  spec.base_dim = 5;
  spec.rank = 4;
  spec.derivative_mode = mode;
  spec.anchor_drift = [](const Vec& x) {
    const double s = kepler_r2(x);
    const double g3 = std::pow(s, -1.5);
    Vec d(5);
    d << 1.0, x[3], x[4], -x[1] * g3, -x[2] * g3;
    return d;
  };
  spec.anchor_linear = [](const Vec&) {
    Mat r = Mat::Zero(5, 4);
    r(1, 0) = 1.0;
    r(2, 1) = 1.0;
    r(3, 2) = 1.0;
    r(4, 3) = 1.0;
    return r;
  };
  spec.structure_drift = [](const Vec& x) {
    const double s = kepler_r2(x);
    const double g5 = std::pow(s, -2.5);
    const double q1 = x[1], q2 = x[2];
    Mat cd = Mat::Zero(4, 4);
    // From [e_0, e_alpha] with the gravity gradient: entries C^gamma_{0 alpha}.
    cd(2, 0) = -(2.0 * q1 * q1 - q2 * q2) * g5;
    cd(3, 0) = -3.0 * q1 * q2 * g5;
    cd(2, 1) = -3.0 * q1 * q2 * g5;
    cd(3, 1) = -(2.0 * q2 * q2 - q1 * q1) * g5;
    cd(0, 2) = -1.0;
    cd(1, 3) = -1.0;
    return cd;
  };
  spec.structure_linear = [](const Vec&) { return Tensor3::Zero(4, 4, 4); };

  if (mode == DerivativeMode::analytic) {
    spec.anchor_drift_jac = [](const Vec& x) {
      const double s = kepler_r2(x);
      const double g3 = std::pow(s, -1.5), g5 = std::pow(s, -2.5);
      const double q1 = x[1], q2 = x[2];
      std::vector<Vec> J(5, Vec::Zero(5));
      J[1][3] = -g3 + 3.0 * q1 * q1 * g5;
      J[1][4] = 3.0 * q1 * q2 * g5;
      J[2][3] = 3.0 * q1 * q2 * g5;
      J[2][4] = -g3 + 3.0 * q2 * q2 * g5;
      J[3][1] = 1.0;
      J[4][2] = 1.0;
      return J;
    };
    spec.anchor_linear_jac = [](const Vec&) {
      return std::vector<Mat>(5, Mat::Zero(5, 4));
    };
    spec.structure_drift_jac = [](const Vec& x) {
      const double s = kepler_r2(x);
      const double g5 = std::pow(s, -2.5), g7 = std::pow(s, -3.5);
      const double q1 = x[1], q2 = x[2];
      std::vector<Mat> J(5, Mat::Zero(4, 4));
      J[1](2, 0) = -4.0 * q1 * g5 + 5.0 * q1 * (2.0 * q1 * q1 - q2 * q2) * g7;
      J[2](2, 0) = 2.0 * q2 * g5 + 5.0 * q2 * (2.0 * q1 * q1 - q2 * q2) * g7;
      J[1](3, 0) = -3.0 * q2 * g5 + 15.0 * q1 * q1 * q2 * g7;
      J[2](3, 0) = -3.0 * q1 * g5 + 15.0 * q1 * q2 * q2 * g7;
      J[1](2, 1) = -3.0 * q2 * g5 + 15.0 * q1 * q1 * q2 * g7;
      J[2](2, 1) = -3.0 * q1 * g5 + 15.0 * q1 * q2 * q2 * g7;
      J[1](3, 1) = 2.0 * q1 * g5 + 5.0 * q1 * (2.0 * q2 * q2 - q1 * q1) * g7;
      J[2](3, 1) = -4.0 * q2 * g5 + 5.0 * q2 * (2.0 * q2 * q2 - q1 * q1) * g7;
      return J;
    };
    spec.structure_linear_jac = [](const Vec&) {
      return std::vector<Tensor3>(5, Tensor3::Zero(4, 4, 4));
    };
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Free particle in time-extended form, and the constrained harmonic model on
// the Heisenberg frame [e_1, e_2] = e_3.
// ---------------------------------------------------------------------------

AffgebroidSpec jet_spec(DerivativeMode mode) {
  AffgebroidSpec spec;
  spec.base_dim = 2;
  spec.rank = 1;
  spec.derivative_mode = mode;
  spec.anchor_drift = [](const Vec&) {
    Vec d(2);
    d << 1.0, 0.0;
    return d;
  };
  spec.anchor_linear = [](const Vec&) {
    Mat r = Mat::Zero(2, 1);
    r(1, 0) = 1.0;
    return r;
  };
  spec.structure_drift = [](const Vec&) { return Mat::Zero(1, 1).eval(); };
  spec.structure_linear = [](const Vec&) { return Tensor3::Zero(1, 1, 1); };
  if (mode == DerivativeMode::analytic) {
    spec.anchor_drift_jac = [](const Vec&) { return std::vector<Vec>(2, Vec::Zero(2)); };
    spec.anchor_linear_jac = [](const Vec&) { return std::vector<Mat>(2, Mat::Zero(2, 1)); };
    spec.structure_drift_jac = [](const Vec&) { return std::vector<Mat>(2, Mat::Zero(1, 1)); };
    spec.structure_linear_jac = [](const Vec&) {
      return std::vector<Tensor3>(2, Tensor3::Zero(1, 1, 1));
    };
  }
  return spec;
}

AffgebroidSpec heisenberg_spec(DerivativeMode mode) {
  AffgebroidSpec spec;
  spec.base_dim = 3;
  spec.rank = 3;
  spec.derivative_mode = mode;
  spec.anchor_drift = [](const Vec&) {
    Vec d(3);
    d << 1.0, 0.0, 0.0;
    return d;
  };
  spec.anchor_linear = [](const Vec&) {
    Mat r = Mat::Zero(3, 3);
    r(1, 0) = 1.0;
    r(2, 1) = 1.0;
    return r;
  };
  spec.structure_drift = [](const Vec&) { return Mat::Zero(3, 3).eval(); };
  spec.structure_linear = [](const Vec&) {
    Tensor3 c(3, 3, 3);
    c(2, 0, 1) = 1.0;  // [e_1, e_2] = e_3
    c(2, 1, 0) = -1.0;
    return c;
  };
  if (mode == DerivativeMode::analytic) {
    spec.anchor_drift_jac = [](const Vec&) { return std::vector<Vec>(3, Vec::Zero(3)); };
    spec.anchor_linear_jac = [](const Vec&) { return std::vector<Mat>(3, Mat::Zero(3, 3)); };
    spec.structure_drift_jac = [](const Vec&) { return std::vector<Mat>(3, Mat::Zero(3, 3)); };
    spec.structure_linear_jac = [](const Vec&) {
      return std::vector<Tensor3>(3, Tensor3::Zero(3, 3, 3));
    };
  }
  return spec;
}

}  // namespace

VakonomicSystem build_rolling_sphere(const SphereParams& params, SphereLagrangian lag,
                                     DerivativeMode mode) {
  VakonomicSystem sys;
  sys.spec = sphere_spec(mode);
  Vec w(5);
  if (lag == SphereLagrangian::control_cost)
    w << 1.0, 1.0, 0.0, 0.0, 0.0;
  else {
    const double mk2 = params.mass * params.k * params.k;
    w << params.mass, params.mass, mk2, mk2, mk2;
  }
  sys.lagrangian = quadratic_fiber_field(3, w, mode);
  sys.constraint = sphere_constraint(params, mode);
  return sys;
}

VakonomicRhs sphere_oracle_rhs(const SphereParams& p, const VakonomicState& s) {
  const double t = s.x[0], x = s.x[1], y = s.x[2];
  const double om = p.omega(t);
  const double y1 = s.ya[0], y2 = s.ya[1];
  const double w1 = s.yA[0], w2 = s.yA[1], w3 = s.yA[2];
  const double psi3 = (-y2 + om * x) / p.r;
  const double psi4 = (y1 + om * y) / p.r;

  VakonomicRhs rhs;
  rhs.dx = Vec(3);
  rhs.dx << 1.0, y1, y2;
  rhs.dyA = Vec(3);
  rhs.dyA[0] = -psi4 * w3 + p.c * w2;
  rhs.dyA[1] = psi3 * w3 - p.c * w1;
  rhs.dyA[2] = psi4 * w1 - psi3 * w2;
  rhs.dya = Vec(2);
  rhs.dya[0] = (rhs.dyA[1] - om * w1) / p.r;
  rhs.dya[1] = (-rhs.dyA[0] - om * w2) / p.r;
  return rhs;
}

VakonomicSystem build_kepler_thruster(DerivativeMode mode) {
  VakonomicSystem sys;
  sys.spec = kepler_spec(mode);
  Vec w(4);
  w << 0.0, 0.0, 1.0, 1.0;
  sys.lagrangian = quadratic_fiber_field(5, w, mode);
  sys.constraint.constrained = {0, 1};
  sys.constraint.free_idx = {2, 3};
  sys.constraint.psi = {ScalarField::zero(), ScalarField::zero()};
  return sys;
}

VakonomicRhs kepler_oracle_rhs(const VakonomicState& s) {
  const double q1 = s.x[1], q2 = s.x[2];
  const double r2 = q1 * q1 + q2 * q2;
  if (std::sqrt(r2) <= 1e-12)
    throw OriginSingularity("kepler: evaluation at the gravitational center");
  const double g3 = std::pow(r2, -1.5), g5 = std::pow(r2, -2.5);
  const double u1 = s.ya[0], u2 = s.ya[1];

  VakonomicRhs rhs;
  rhs.dx = Vec(5);
  rhs.dx << 1.0, s.x[3], s.x[4], -q1 * g3 + u1, -q2 * g3 + u2;
  rhs.dyA = Vec(2);
  rhs.dyA[0] = -(u1 * (2.0 * q1 * q1 - q2 * q2) + 3.0 * u2 * q1 * q2) * g5;
  rhs.dyA[1] = -(3.0 * u1 * q1 * q2 + u2 * (2.0 * q2 * q2 - q1 * q1)) * g5;
  rhs.dya = -s.yA;
  return rhs;
}

VakonomicSystem build_jet_particle(DerivativeMode mode) {
  VakonomicSystem sys;
  sys.spec = jet_spec(mode);
  sys.lagrangian = quadratic_fiber_field(2, Vec::Ones(1), mode);
  sys.constraint = unconstrained_map(1);
  return sys;
}

VakonomicSystem build_mech_affine(DerivativeMode mode) {
  VakonomicSystem sys;
  sys.spec = heisenberg_spec(mode);
  const auto value = [](const Vec& xy) {
    const double v = 0.5 * (xy[1] * xy[1] + xy[2] * xy[2]);
    return 0.5 * (xy[3] * xy[3] + xy[4] * xy[4] + xy[5] * xy[5]) - v;
  };
  if (mode == DerivativeMode::finite_difference) {
    sys.lagrangian = ScalarField::from_value(value);
  } else {
    sys.lagrangian.value = value;
    sys.lagrangian.gradient = [](const Vec& xy) {
      Vec g(6);
      g << 0.0, -xy[1], -xy[2], xy[3], xy[4], xy[5];
      return g;
    };
    sys.lagrangian.hessian = [](const Vec&) {
      Mat h = Mat::Zero(6, 6);
      h(1, 1) = -1.0;
      h(2, 2) = -1.0;
      h(3, 3) = 1.0;
      h(4, 4) = 1.0;
      h(5, 5) = 1.0;
      return h;
    };
  }
  sys.constraint.constrained = {2};
  sys.constraint.free_idx = {0, 1};
  sys.constraint.psi = {ScalarField::zero()};
  return sys;
}

VakonomicRhs mechanical_oracle_rhs(const VakonomicState& s) {
  const double x = s.x[1], y = s.x[2];
  const double y1 = s.ya[0], y2 = s.ya[1], w = s.yA[0];
  VakonomicRhs rhs;
  rhs.dx = Vec(3);
  rhs.dx << 1.0, y1, y2;
  rhs.dyA = Vec::Zero(1);
  rhs.dya = Vec(2);
  rhs.dya[0] = -x - w * y2;
  rhs.dya[1] = -y + w * y1;
  return rhs;
}

std::vector<std::string> model_names() { return {"sphere", "kepler", "jet-free", "mech-affine"}; }

VakonomicSystem build_model(const std::string& name, DerivativeMode mode) {
  if (name == "sphere") return build_rolling_sphere(SphereParams{}, SphereLagrangian::control_cost, mode);
  if (name == "kepler") return build_kepler_thruster(mode);
  if (name == "jet-free") return build_jet_particle(mode);
  if (name == "mech-affine") return build_mech_affine(mode);
  throw std::invalid_argument("unknown model: " + name);
}

Vec random_base_point(const std::string& name, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (name == "kepler") {
    std::uniform_real_distribution<double> rad(0.5, 2.0), ang(0.0, 2.0 * 3.14159265358979324);
    const double r = rad(rng), th = ang(rng);
    Vec x(5);
    x << u(rng), r * std::cos(th), r * std::sin(th), u(rng), u(rng);
    return x;
  }
  int m = 0;
  if (name == "sphere" || name == "mech-affine")
    m = 3;
  else if (name == "jet-free")
    m = 2;
  else
    throw std::invalid_argument("unknown model: " + name);
  Vec x(m);
  for (int i = 0; i < m; ++i) x[i] = u(rng);
  return x;
}

VakonomicState random_state(const std::string& name, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const VakonomicState shape = default_state(name);
  VakonomicState s;
  s.x = random_base_point(name, rng);
  s.yA = Vec(shape.yA.size());
  for (int i = 0; i < s.yA.size(); ++i) s.yA[i] = u(rng);
  s.ya = Vec(shape.ya.size());
  for (int i = 0; i < s.ya.size(); ++i) s.ya[i] = u(rng);
  return s;
}

VakonomicState default_state(const std::string& name) {
  VakonomicState s;
  if (name == "sphere") {
    s.x = Vec(3);
    s.x << 0.0, 0.3, -0.2;
    s.yA = Vec(3);
    s.yA << 0.4, -0.3, 0.2;
    s.ya = Vec(2);
    s.ya << 0.6, 0.5;
  } else if (name == "kepler") {
    s.x = Vec(5);
    s.x << 0.0, 1.0, 0.0, 0.0, 1.0;
    s.yA = Vec(2);
    s.yA << 0.1, -0.05;
    s.ya = Vec(2);
    s.ya << 0.01, 0.02;
  } else if (name == "jet-free") {
    s.x = Vec(2);
    s.x << 0.0, 0.5;
    s.yA = Vec(0);
    s.ya = Vec(1);
    s.ya << 1.0;
  } else if (name == "mech-affine") {
    s.x = Vec(3);
    s.x << 0.0, 0.4, -0.3;
    s.yA = Vec(1);
    s.yA << 0.25;
    s.ya = Vec(2);
    s.ya << 0.5, -0.4;
  } else {
    throw std::invalid_argument("unknown model: " + name);
  }
  return s;
}

}  // namespace affmech
