#include "affmech/integrate.hpp"

#include <cmath>

namespace affmech {
namespace {

struct Packer {
  int m, mb, nf;
  int size() const { return m + mb + 2 * nf + 1; }

  Vec pack(const VakonomicState& s, const Vec& p, double y0) const {
    Vec z(size());
    z.head(m) = s.x;
    z.segment(m, mb) = s.yA;
    z.segment(m + mb, nf) = s.ya;
    z.segment(m + mb + nf, nf) = p;
    z[size() - 1] = y0;
    return z;
  }
  VakonomicState state(const Vec& z) const {
    return {z.head(m), z.segment(m, mb), z.segment(m + mb, nf)};
  }
  Vec momenta(const Vec& z) const { return z.segment(m + mb + nf, nf); }
  double y0(const Vec& z) const { return z[size() - 1]; }
};

// Augmented right-hand side: equations of motion plus transported momenta and
// drift momentum. The passengers never feed back into the state block.
Vec augmented_rhs(const VakonomicSystem& sys, const Packer& pk, const Vec& z) {
  const VakonomicState s = pk.state(z);
  const EngineEval ev = engine_eval(sys, s);
  Vec dz(pk.size());
  dz.head(pk.m) = ev.dx;
  dz.segment(pk.m, pk.mb) = ev.dyA;
  dz.segment(pk.m + pk.mb, pk.nf) = ev.dya;
  dz.segment(pk.m + pk.mb + pk.nf, pk.nf) = ev.dpa;
  // d/dt of the drift momentum on the energy level:
  // y0' = G . x' - yA' . psi - p' . y^a
  dz[pk.size() - 1] = ev.G.dot(ev.dx) - ev.dyA.dot(ev.rd.psi) - ev.dpa.dot(s.ya);
  return dz;
}

template <typename F>
Vec rk4_step(const F& f, const Vec& z, double h) {
  const Vec k1 = f(z);
  const Vec k2 = f(z + 0.5 * h * k1);
  const Vec k3 = f(z + 0.5 * h * k2);
  const Vec k4 = f(z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory integrate(const VakonomicSystem& sys, const VakonomicState& init,
                     const IntegratorConfig& cfg) {
  const Packer pk{sys.m(), sys.mbar(), sys.nfree()};
  Trajectory traj;

  const auto f = [&](const Vec& z) { return augmented_rhs(sys, pk, z); };

  const auto resync = [&](Vec& z) {
    const VakonomicState s = pk.state(z);
    z.segment(pk.m + pk.mb + pk.nf, pk.nf) = momenta_free(sys, s);
    z[pk.size() - 1] = w1prime_y0(sys, s);
  };

  const auto record = [&](double t, const Vec& z) {
    const VakonomicState s = pk.state(z);
    traj.times.push_back(t);
    traj.states.push_back(s);
    traj.momenta.push_back(pk.momenta(z));
    traj.y0.push_back(pk.y0(z));
    SampleResiduals r;
    if (pk.nf > 0) r.phi_max = (pk.momenta(z) - momenta_free(sys, s)).cwiseAbs().maxCoeff();
    r.w1prime_defect = std::abs(pk.y0(z) - w1prime_y0(sys, s));
    traj.residuals.push_back(r);
    traj.max_phi = std::max(traj.max_phi, r.phi_max);
    traj.max_w1prime_defect = std::max(traj.max_w1prime_defect, r.w1prime_defect);
  };

  try {
    Vec z = pk.pack(init, momenta_free(sys, init), w1prime_y0(sys, init));
    record(cfg.t0, z);
    const double span = cfg.t1 - cfg.t0;

    if (cfg.method == StepMethod::rk4_fixed) {
      const long nsteps = std::max<long>(1, std::lround(std::ceil(span / cfg.step - 1e-9)));
      double t = cfg.t0;
      for (long k = 0; k < nsteps; ++k) {
        const double tn = (k + 1 == nsteps) ? cfg.t1 : cfg.t0 + (k + 1) * cfg.step;
        z = rk4_step(f, z, tn - t);
        t = tn;
        if (cfg.resync_momenta) resync(z);
        if ((k + 1) % std::max(1, cfg.record_every) == 0 || k + 1 == nsteps) record(t, z);
      }
    } else {
      // Embedded Fehlberg 4(5) pair, advanced with the fifth-order value.
      const double hmin = 1e-14 * std::max(1.0, std::abs(span));
      double t = cfg.t0;
      double h = std::min(std::abs(cfg.step), std::abs(span));
      const double dir = span >= 0 ? 1.0 : -1.0;
      h *= dir;
      long guard = 0;
      while (dir * (cfg.t1 - t) > 1e-14 * std::max(1.0, std::abs(cfg.t1))) {
        if (++guard > 10'000'000) throw StepUnderflow(t, h);
        if (dir * h > dir * (cfg.t1 - t)) h = cfg.t1 - t;
        if (std::abs(h) < hmin) throw StepUnderflow(t, h);

        const Vec k1 = f(z);
        const Vec k2 = f(z + h * (1.0 / 4.0) * k1);
        const Vec k3 = f(z + h * ((3.0 / 32.0) * k1 + (9.0 / 32.0) * k2));
        const Vec k4 = f(z + h * ((1932.0 / 2197.0) * k1 - (7200.0 / 2197.0) * k2 +
                                  (7296.0 / 2197.0) * k3));
        const Vec k5 = f(z + h * ((439.0 / 216.0) * k1 - 8.0 * k2 + (3680.0 / 513.0) * k3 -
                                  (845.0 / 4104.0) * k4));
        const Vec k6 = f(z + h * ((-8.0 / 27.0) * k1 + 2.0 * k2 - (3544.0 / 2565.0) * k3 +
                                  (1859.0 / 4104.0) * k4 - (11.0 / 40.0) * k5));
        const Vec z4 = z + h * ((25.0 / 216.0) * k1 + (1408.0 / 2565.0) * k3 +
                                (2197.0 / 4104.0) * k4 - (1.0 / 5.0) * k5);
        const Vec z5 = z + h * ((16.0 / 135.0) * k1 + (6656.0 / 12825.0) * k3 +
                                (28561.0 / 56430.0) * k4 - (9.0 / 50.0) * k5 + (2.0 / 55.0) * k6);

        double enorm = 0.0;
        for (int i = 0; i < z.size(); ++i) {
          const double sc = cfg.atol + cfg.rtol * std::max(std::abs(z[i]), std::abs(z5[i]));
          enorm = std::max(enorm, std::abs(z5[i] - z4[i]) / sc);
        }
        if (enorm <= 1.0) {
          t += h;
          z = z5;
          if (cfg.resync_momenta) resync(z);
          record(t, z);
        }
        const double factor =
            enorm > 0.0 ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0) : 5.0;
        h *= factor;
      }
    }
  } catch (const SingularRegularity& e) {
    traj.status = RunStatus::singular;
    traj.message = e.what();
  } catch (const OriginSingularity& e) {
    traj.status = RunStatus::singular;
    traj.message = e.what();
  } catch (const NoConvergence& e) {
    traj.status = RunStatus::no_convergence;
    traj.message = e.what();
  } catch (const StepUnderflow& e) {
    traj.status = RunStatus::step_underflow;
    traj.message = e.what();
  }
  return traj;
}

double admissibility_defect(const VakonomicSystem& sys, const Trajectory& traj) {
  double worst = 0.0;
  for (size_t k = 1; k + 1 < traj.size(); ++k) {
    const double t0 = traj.times[k - 1], t1 = traj.times[k], t2 = traj.times[k + 1];
    const Vec& x0 = traj.states[k - 1].x;
    const Vec& x1 = traj.states[k].x;
    const Vec& x2 = traj.states[k + 1].x;
    const Vec slope = x0 * ((t1 - t2) / ((t0 - t1) * (t0 - t2))) +
                      x1 * ((2.0 * t1 - t0 - t2) / ((t1 - t0) * (t1 - t2))) +
                      x2 * ((t1 - t0) / ((t2 - t0) * (t2 - t1)));
    const Vec anchor = eval_anchor(sys.spec, x1, full_velocities(sys, traj.states[k]));
    const double scale = std::max(1.0, anchor.cwiseAbs().maxCoeff());
    worst = std::max(worst, (slope - anchor).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

std::vector<Vec> stencil_slopes(const std::vector<double>& t, const std::vector<Vec>& fv) {
  const int N = static_cast<int>(fv.size());
  std::vector<Vec> out(N);
  if (N < 2) {
    if (N == 1) out[0] = Vec::Zero(fv[0].size());
    return out;
  }
  // Uniform grids get fourth-order stencils; otherwise 3-point fallback.
  const double h = t[1] - t[0];
  bool uniform = N >= 5;
  for (int k = 1; uniform && k + 1 < N; ++k)
    if (std::abs((t[k + 1] - t[k]) - h) > 1e-9 * std::max(1.0, std::abs(h))) uniform = false;

  if (uniform) {
    const double d = 12.0 * h;
    out[0] = (-25.0 * fv[0] + 48.0 * fv[1] - 36.0 * fv[2] + 16.0 * fv[3] - 3.0 * fv[4]) / d;
    out[1] = (-3.0 * fv[0] - 10.0 * fv[1] + 18.0 * fv[2] - 6.0 * fv[3] + fv[4]) / d;
    for (int k = 2; k + 2 < N; ++k)
      out[k] = (fv[k - 2] - 8.0 * fv[k - 1] + 8.0 * fv[k + 1] - fv[k + 2]) / d;
    out[N - 2] =
        (3.0 * fv[N - 1] + 10.0 * fv[N - 2] - 18.0 * fv[N - 3] + 6.0 * fv[N - 4] - fv[N - 5]) / d;
    out[N - 1] =
        (25.0 * fv[N - 1] - 48.0 * fv[N - 2] + 36.0 * fv[N - 3] - 16.0 * fv[N - 4] + 3.0 * fv[N - 5]) /
        d;
    return out;
  }

  if (N == 2) {
    out[0] = out[1] = (fv[1] - fv[0]) / (t[1] - t[0]);
    return out;
  }
  // Differentiate the quadratic through three neighbouring samples; at the
  // boundary the evaluation point slides to the edge of the same stencil.
  const auto quad = [&](int a, int b, int c, double tau) {
    const double ta = t[a], tb = t[b], tc = t[c];
    return (fv[a] * ((2.0 * tau - tb - tc) / ((ta - tb) * (ta - tc))) +
            fv[b] * ((2.0 * tau - ta - tc) / ((tb - ta) * (tb - tc))) +
            fv[c] * ((2.0 * tau - ta - tb) / ((tc - ta) * (tc - tb))))
        .eval();
  };
  out[0] = quad(0, 1, 2, t[0]);
  for (int k = 1; k + 1 < N; ++k) out[k] = quad(k - 1, k, k + 1, t[k]);
  out[N - 1] = quad(N - 3, N - 2, N - 1, t[N - 1]);
  return out;
}

VakonomicState interpolate_state(const VakonomicSystem& sys, const Trajectory& traj, double t) {
  const int m = sys.m(), mb = sys.mbar(), nf = sys.nfree();
  const int N = static_cast<int>(traj.size());
  if (N == 0) throw std::invalid_argument("interpolate_state: empty trajectory");

  std::vector<Vec> packed(N);
  for (int k = 0; k < N; ++k) {
    Vec z(m + mb + nf);
    z.head(m) = traj.states[k].x;
    z.segment(m, mb) = traj.states[k].yA;
    z.tail(nf) = traj.states[k].ya;
    packed[k] = z;
  }
  const std::vector<Vec> slopes = stencil_slopes(traj.times, packed);

  int k = 0;
  while (k + 2 < N && traj.times[k + 1] < t) ++k;
  const double ta = traj.times[k], tb = traj.times[k + 1];
  const double hh = tb - ta;
  const double s = (t - ta) / hh;
  const double s2 = s * s, s3 = s2 * s;
  const Vec z = (2 * s3 - 3 * s2 + 1) * packed[k] + (s3 - 2 * s2 + s) * hh * slopes[k] +
                (-2 * s3 + 3 * s2) * packed[k + 1] + (s3 - s2) * hh * slopes[k + 1];
  return {z.head(m), z.segment(m, mb), z.tail(nf)};
}

}  // namespace affmech
