#include <doctest.h>

#include <cmath>

#include "affmech/integrate.hpp"
#include "affmech/models.hpp"

using namespace affmech;

namespace {

// With the vertical multiplier started at zero, the constrained harmonic
// model decouples into two scalar oscillators with closed-form solutions.
VakonomicState harmonic_start() {
  VakonomicState s;
  s.x = Vec(3);
  s.x << 0.0, 0.4, -0.3;
  s.yA = Vec::Zero(1);
  s.ya = Vec(2);
  s.ya << 0.5, 0.2;
  return s;
}

Vec harmonic_exact_x(double t) {
  Vec x(3);
  x << t, 0.4 * std::cos(t) + 0.5 * std::sin(t), -0.3 * std::cos(t) + 0.2 * std::sin(t);
  return x;
}

Vec harmonic_exact_u(double t) {
  Vec u(2);
  u << 0.5 * std::cos(t) - 0.4 * std::sin(t), 0.2 * std::cos(t) + 0.3 * std::sin(t);
  return u;
}

}  // namespace

TEST_CASE("oscillator decouples and matches its closed-form solution") {
  const VakonomicSystem sys = build_mech_affine();
  IntegratorConfig cfg;
  cfg.method = StepMethod::rk4_fixed;
  cfg.step = 1e-3;
  cfg.t1 = 1.0;

  const Trajectory traj = integrate(sys, harmonic_start(), cfg);
  REQUIRE(traj.status == RunStatus::ok);
  CHECK(traj.times.back() == doctest::Approx(1.0).epsilon(1e-14));

  const VakonomicState& fin = traj.states.back();
  CHECK((fin.x - harmonic_exact_x(1.0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fin.ya - harmonic_exact_u(1.0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fin.yA.cwiseAbs().maxCoeff() < 1e-14);

  // transported momenta obey the same oscillator, so the defect stays at noise
  CHECK(traj.max_phi < 1e-12);
  CHECK(traj.max_w1prime_defect < 1e-12);

  // seeding of the passenger variables at the first sample
  CHECK((traj.momenta.front() - momenta_free(sys, traj.states.front())).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(traj.y0.front() == w1prime_y0(sys, traj.states.front()));
}

TEST_CASE("thrust-free orbit stays circular under the adaptive stepper") {
  const VakonomicSystem sys = build_kepler_thruster();
  VakonomicState init;
  init.x = Vec(5);
  init.x << 0.0, 1.0, 0.0, 0.0, 1.0;
  init.yA = Vec::Zero(2);
  init.ya = Vec::Zero(2);

  IntegratorConfig cfg;
  cfg.method = StepMethod::rk45_adaptive;
  cfg.step = 1e-2;
  cfg.rtol = 1e-9;
  cfg.atol = 1e-12;
  cfg.t1 = 3.0;

  const Trajectory traj = integrate(sys, init, cfg);
  REQUIRE(traj.status == RunStatus::ok);
  const Vec& xf = traj.states.back().x;
  CHECK(xf[1] == doctest::Approx(std::cos(3.0)).epsilon(1e-7));
  CHECK(xf[2] == doctest::Approx(std::sin(3.0)).epsilon(1e-7));
  CHECK(xf[3] == doctest::Approx(-std::sin(3.0)).epsilon(1e-7));
  CHECK(xf[4] == doctest::Approx(std::cos(3.0)).epsilon(1e-7));
  CHECK(traj.states.back().ya.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(traj.max_phi < 1e-12);
}

TEST_CASE("momentum defect of the fixed stepper decays at fourth order") {
  // The control-cost sphere has momenta linear in the state with constant
  // coefficients, so every Runge-Kutta step transports them exactly and the
  // defect sits at roundoff. A time-varying table rate with the kinetic
  // Lagrangian puts an Omega(t)*y term in the momenta, which is the kind of
  // genuinely nonlinear level function the order measurement needs.
  SphereParams p;
  p.omega = [](double t) { return 2.0 * std::sin(8.0 * t) + 0.5; };
  p.omega_dot = [](double t) { return 16.0 * std::cos(8.0 * t); };
  const VakonomicSystem sys = build_rolling_sphere(p, SphereLagrangian::kinetic_energy);
  VakonomicState init;
  init.x = Vec(3);
  init.x << 0.0, 0.3, -0.2;
  init.yA = Vec(3);
  init.yA << 2.0, -1.5, 1.0;
  init.ya = Vec(2);
  init.ya << 2.5, 2.0;

  IntegratorConfig cfg;
  cfg.method = StepMethod::rk4_fixed;
  cfg.t1 = 2.0;

  cfg.step = 4e-3;
  const double coarse = integrate(sys, init, cfg).max_phi;
  cfg.step = 2e-3;
  const double fine = integrate(sys, init, cfg).max_phi;

  CHECK(coarse > 0.0);
  CHECK(fine > 0.0);
  const double ratio = coarse / fine;
  CHECK(ratio > 8.0);
  CHECK(ratio < 32.0);
}

TEST_CASE("a degenerating Lagrangian downgrades the run to a partial trajectory") {
  VakonomicSystem sys = build_jet_particle();
  // L = u^3 - q forces 3u^2 = 3u0^2 - t, so the fiber Hessian 6u hits zero
  // at t = 3 u0^2 = 0.75.
  sys.lagrangian.value = [](const Vec& a) { return a[2] * a[2] * a[2] - a[1]; };
  sys.lagrangian.gradient = [](const Vec& a) {
    Vec g(3);
    g << 0.0, -1.0, 3.0 * a[2] * a[2];
    return g;
  };
  sys.lagrangian.hessian = [](const Vec& a) {
    Mat h = Mat::Zero(3, 3);
    h(2, 2) = 6.0 * a[2];
    return h;
  };

  VakonomicState init;
  init.x = Vec::Zero(2);
  init.yA = Vec(0);
  init.ya = Vec(1);
  init.ya << 0.5;

  IntegratorConfig cfg;
  cfg.method = StepMethod::rk45_adaptive;
  cfg.step = 1e-2;
  cfg.t1 = 2.0;

  const Trajectory traj = integrate(sys, init, cfg);
  CHECK((traj.status == RunStatus::singular || traj.status == RunStatus::step_underflow));
  CHECK(!traj.message.empty());
  REQUIRE(traj.size() >= 2);
  CHECK(traj.times.back() < 2.0);
  CHECK(traj.times.back() > 0.5);
  for (size_t k = 1; k < traj.size(); ++k) CHECK(traj.times[k] > traj.times[k - 1]);
  // the recorded part is still a valid solution piece
  CHECK(traj.states.back().ya[0] < init.ya[0]);
}

TEST_CASE("periodic passenger resync pins the defect to rounding noise") {
  const VakonomicSystem sys = build_rolling_sphere(SphereParams{});
  VakonomicState init = default_state("sphere");

  IntegratorConfig cfg;
  cfg.method = StepMethod::rk4_fixed;
  cfg.step = 5e-3;
  cfg.t1 = 2.0;
  cfg.resync_momenta = true;

  const Trajectory traj = integrate(sys, init, cfg);
  REQUIRE(traj.status == RunStatus::ok);
  CHECK(traj.max_phi < 1e-13);
}

TEST_CASE("sample thinning keeps the endpoints") {
  const VakonomicSystem sys = build_mech_affine();
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.t1 = 1.0;
  cfg.record_every = 100;

  const Trajectory traj = integrate(sys, harmonic_start(), cfg);
  CHECK(traj.size() == 11);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times[1] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(traj.times.back() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("integrated base curves stay admissible") {
  const VakonomicSystem sys = build_rolling_sphere(SphereParams{});
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.t1 = 1.0;
  const Trajectory traj = integrate(sys, default_state("sphere"), cfg);
  const double defect = admissibility_defect(sys, traj);
  CHECK(defect < 1e-4);
  CHECK(defect > 0.0);
}

TEST_CASE("interpolation reproduces samples and off-sample states") {
  const VakonomicSystem sys = build_rolling_sphere(SphereParams{});
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.t1 = 1.0;
  const Trajectory traj = integrate(sys, default_state("sphere"), cfg);

  const size_t mid = traj.size() / 2;
  const VakonomicState at_sample = interpolate_state(sys, traj, traj.times[mid]);
  CHECK((at_sample.x - traj.states[mid].x).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((at_sample.ya - traj.states[mid].ya).cwiseAbs().maxCoeff() < 1e-13);

  const double t_off = 0.5 + 0.35e-3;
  cfg.t1 = t_off;
  const Trajectory ref = integrate(sys, default_state("sphere"), cfg);
  const VakonomicState got = interpolate_state(sys, traj, t_off);
  CHECK((got.x - ref.states.back().x).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((got.yA - ref.states.back().yA).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((got.ya - ref.states.back().ya).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("stencil derivatives are exact on low-degree polynomials") {
  // uniform grid, fourth-order stencils: exact through degree four
  std::vector<double> t;
  std::vector<Vec> f;
  for (int k = 0; k <= 10; ++k) {
    const double tk = 0.1 * k;
    t.push_back(tk);
    Vec v(2);
    v << tk * tk * tk * tk - 2.0 * tk * tk * tk + 0.5 * tk, 3.0 * tk * tk - tk;
    f.push_back(v);
  }
  const std::vector<Vec> d = stencil_slopes(t, f);
  for (int k = 0; k <= 10; ++k) {
    const double tk = t[k];
    CHECK(d[k][0] ==
          doctest::Approx(4.0 * tk * tk * tk - 6.0 * tk * tk + 0.5).epsilon(1e-10));
    CHECK(d[k][1] == doctest::Approx(6.0 * tk - 1.0).epsilon(1e-10));
  }

  // nonuniform grid, three-point formula: exact through degree two
  const std::vector<double> tn = {0.0, 0.1, 0.25, 0.5, 0.55};
  std::vector<Vec> fn;
  for (double tk : tn) {
    Vec v(1);
    v << tk * tk + 2.0 * tk;
    fn.push_back(v);
  }
  const std::vector<Vec> dn = stencil_slopes(tn, fn);
  for (size_t k = 0; k < tn.size(); ++k)
    CHECK(dn[k][0] == doctest::Approx(2.0 * tn[k] + 2.0).epsilon(1e-12));
}

TEST_CASE("tightening the adaptive tolerance refines the answer") {
  const VakonomicSystem sys = build_rolling_sphere(SphereParams{});
  const VakonomicState init = default_state("sphere");

  IntegratorConfig ref_cfg;
  ref_cfg.method = StepMethod::rk4_fixed;
  ref_cfg.step = 1e-4;
  ref_cfg.t1 = 1.0;
  ref_cfg.record_every = 10000;
  const Vec ref = integrate(sys, init, ref_cfg).states.back().x;

  IntegratorConfig cfg;
  cfg.method = StepMethod::rk45_adaptive;
  cfg.t1 = 1.0;

  cfg.rtol = 1e-6;
  cfg.atol = 1e-9;
  const Trajectory loose = integrate(sys, init, cfg);
  cfg.rtol = 1e-11;
  cfg.atol = 1e-13;
  const Trajectory tight = integrate(sys, init, cfg);

  CHECK(loose.size() < tight.size());
  CHECK((tight.states.back().x - ref).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((loose.states.back().x - ref).cwiseAbs().maxCoeff() < 1e-4);
}
