#pragma once

#include <stdexcept>
#include <string>

namespace affmech {

/// Degenerate constraint-restricted fiber metric: the linear solve that turns
/// the momentum balance into an explicit ODE has no unique solution.
class SingularRegularity : public std::runtime_error {
 public:
  SingularRegularity(double det, double condition, const std::string& where)
      : std::runtime_error(where + ": regularity matrix is numerically singular (det=" +
                           std::to_string(det) + ", cond~" + std::to_string(condition) + ")"),
        det(det),
        condition(condition) {}
  double det;
  double condition;
};

/// Newton iteration failed to invert the momentum map within the iteration budget.
class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(int iterations, double residual, const std::string& where)
      : std::runtime_error(where + ": no convergence after " + std::to_string(iterations) +
                           " iterations (residual=" + std::to_string(residual) + ")"),
        iterations(iterations),
        residual(residual) {}
  int iterations;
  double residual;
};

/// Evaluation requested at (or too close to) a pole of the model's coefficient
/// functions, e.g. the gravitational center of a point-mass field.
class OriginSingularity : public std::runtime_error {
 public:
  explicit OriginSingularity(const std::string& what) : std::runtime_error(what) {}
};

/// Adaptive step control drove the step below the representable minimum.
class StepUnderflow : public std::runtime_error {
 public:
  StepUnderflow(double t, double h)
      : std::runtime_error("step underflow at t=" + std::to_string(t) +
                           " (h=" + std::to_string(h) + ")"),
        t(t),
        h(h) {}
  double t;
  double h;
};

}  // namespace affmech
