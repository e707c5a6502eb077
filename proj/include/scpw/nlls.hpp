#pragma once

#include <Eigen/Dense>
#include <functional>

namespace scpw {

/// Residual callback: parameters in, stacked residual vector out. The
/// residual length must not change between calls.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct NllsOptions {
  int max_iterations = 200;
  /// Scaled-gradient stopping rule: max_j |(J^T r)_j| * scale_j below this
  /// times max(1, cost) counts as converged.
  double gradient_tol = 1e-8;
  /// Step-size stopping rule, relative to the parameter scale.
  double step_tol = 1e-13;
  double initial_lambda = 1e-3;
  /// Characteristic magnitude per parameter, used for finite-difference
  /// steps and the stopping rules. Empty means |initial guess| (or 1 where
  /// that is zero).
  Eigen::VectorXd step_scale;
};

struct NllsResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // sigma^2 (J^T J)^-1 at the optimum
  double residual_rms = 0.0;   // sqrt(sum r^2 / m)
  double cost = 0.0;           // 0.5 sum r^2
  int iterations = 0;
  bool converged = false;
  bool singular_jacobian = false;
};

/// Levenberg-Marquardt least squares with a finite-difference Jacobian and
/// box constraints (pass -inf/+inf entries for unbounded parameters).
/// Deterministic for identical inputs. On non-convergence the result carries
/// the best parameters found with converged = false; nothing is thrown.
NllsResult nlls_fit(const ResidualFn& residuals, Eigen::VectorXd init,
                    Eigen::VectorXd lower, Eigen::VectorXd upper,
                    const NllsOptions& options = {});

}  // namespace scpw
