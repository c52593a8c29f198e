#pragma once

#include <vector>

#include "affmech/field.hpp"

namespace affmech {

enum class DerivativeMode { analytic, finite_difference };

/// Lie affgebroid over an m-dimensional base, described in an adapted frame
/// {e_0, e_1, ..., e_n}: e_0 spans the affine (drift) direction, the e_alpha
/// span the linear part. All data are x-dependent callables:
///
///   anchor_drift(x)      rho^i_0,                size m
///   anchor_linear(x)     rho^i_alpha,            m x n (column alpha)
///   structure_drift(x)   C^gamma_{0 alpha},      n x n, entry (gamma, alpha)
///                        from [e_0, e_alpha] = C^gamma_{0 alpha} e_gamma
///   structure_linear(x)  C^gamma_{alpha beta},   n x n x n
///                        from [e_alpha, e_beta] = C^gamma_{alpha beta} e_gamma,
///                        skew in (alpha, beta)
///
/// Brackets never produce an e_0 component, so no C^0 slots exist.
///
/// The optional *_jac callables return x-derivatives stacked by the base
/// coordinate j; they are consulted only in analytic mode (finite differences
/// of the value callables otherwise, and also as a fallback when a Jacobian
/// slot is empty).
struct AffgebroidSpec {
  int base_dim = 0;  // m
  int rank = 0;      // n

  std::function<Vec(const Vec&)> anchor_drift;
  std::function<Mat(const Vec&)> anchor_linear;
  std::function<Mat(const Vec&)> structure_drift;
  std::function<Tensor3(const Vec&)> structure_linear;

  std::function<std::vector<Vec>(const Vec&)> anchor_drift_jac;
  std::function<std::vector<Mat>(const Vec&)> anchor_linear_jac;
  std::function<std::vector<Mat>(const Vec&)> structure_drift_jac;
  std::function<std::vector<Tensor3>(const Vec&)> structure_linear_jac;

  DerivativeMode derivative_mode = DerivativeMode::finite_difference;
  double fd_step = 1e-6;
};

/// Image of a full fiber element under the anchor: rho^i_0 + rho^i_alpha y^alpha.
/// `y` holds the n linear-fiber velocities (the drift coefficient is fixed at 1).
Vec eval_anchor(const AffgebroidSpec& spec, const Vec& x, const Vec& y);

struct SkewReport {
  bool ok = true;
  double max_violation = 0.0;
  int worst_gamma = -1, worst_alpha = -1, worst_beta = -1;
  Vec worst_point;
};

/// Checks C^gamma_{alpha beta} = -C^gamma_{beta alpha} at each probe point.
/// `tol` is absolute; the default demands exact skewness.
SkewReport validate_skew(const AffgebroidSpec& spec, const std::vector<Vec>& probes,
                         double tol = 0.0);

/// Worst Jacobi defect over the full frame {e_0..e_n} at x. For each output
/// slot phi and each triple (a, b, c):
///   sum_cyc [ C^eps_{ab} C^phi_{eps c} - rho^i_c dC^phi_{ab}/dx^i ]
/// which vanishes identically when the frame closes into a Lie bracket.
double jacobi_residual(const AffgebroidSpec& spec, const Vec& x);

/// Worst defect of the anchor as a bracket morphism at x:
///   [rho(e_a), rho(e_b)]^i - C^gamma_{ab} rho^i_gamma
/// over all frame pairs, with the vector-field commutator formed from the
/// anchor's x-derivatives.
double anchor_morphism_residual(const AffgebroidSpec& spec, const Vec& x);

// x-derivative stacks of the frame callables, honoring derivative_mode.
std::vector<Vec> anchor_drift_dx(const AffgebroidSpec& spec, const Vec& x);
std::vector<Mat> anchor_linear_dx(const AffgebroidSpec& spec, const Vec& x);
std::vector<Mat> structure_drift_dx(const AffgebroidSpec& spec, const Vec& x);
std::vector<Tensor3> structure_linear_dx(const AffgebroidSpec& spec, const Vec& x);

}  // namespace affmech
