#include "scpw/nlls.hpp"

#include <algorithm>
#include <cmath>

#include "scpw/errors.hpp"

namespace scpw {

namespace {

Eigen::VectorXd clamp_to_box(Eigen::VectorXd p, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
  for (Eigen::Index j = 0; j < p.size(); ++j) p[j] = std::clamp(p[j], lo[j], hi[j]);
  return p;
}

// Jacobian in the scaled coordinates by central differences; stencil points
// are clamped into the box.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                 Eigen::Index m) {
  const Eigen::Index n = q.size();
  Eigen::MatrixXd jac(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-7 * std::max(std::abs(q[j]), 1.0);
    Eigen::VectorXd qu = q;
    Eigen::VectorXd qd = q;
    qu[j] = std::min(q[j] + h, hi[j]);
    qd[j] = std::max(q[j] - h, lo[j]);
    const double span = qu[j] - qd[j];
    if (!(span > 0.0)) throw DomainError("nlls_fit: degenerate bounds for parameter");
    jac.col(j) = (fn(qu) - fn(qd)) / span;
  }
  return jac;
}

}  // namespace

NllsResult nlls_fit(const ResidualFn& residuals, Eigen::VectorXd init, Eigen::VectorXd lower,
                    Eigen::VectorXd upper, const NllsOptions& options) {
  const Eigen::Index n = init.size();
  if (lower.size() != n || upper.size() != n) {
    throw DomainError("nlls_fit: bound vectors must match the parameter count");
  }
  Eigen::VectorXd scale = options.step_scale;
  if (scale.size() == 0) {
    scale = init.cwiseAbs();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (scale[j] == 0.0) scale[j] = 1.0;
    }
  } else if (scale.size() != n) {
    throw DomainError("nlls_fit: step_scale must match the parameter count");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(scale[j] > 0.0) || !std::isfinite(scale[j])) {
      throw DomainError("nlls_fit: step scales must be positive and finite");
    }
  }

  // All optimizer work happens in scaled coordinates q = p / scale, which
  // keeps the normal equations well conditioned when parameters differ by
  // many orders of magnitude (frequencies next to delays, for example).
  const auto to_params = [&](const Eigen::VectorXd& q) {
    return (q.array() * scale.array()).matrix().eval();
  };
  const auto scaled_residual = [&](const Eigen::VectorXd& q) { return residuals(to_params(q)); };

  const Eigen::VectorXd qlo = (lower.array() / scale.array()).matrix();
  const Eigen::VectorXd qhi = (upper.array() / scale.array()).matrix();
  Eigen::VectorXd q = clamp_to_box((init.array() / scale.array()).matrix(), qlo, qhi);

  NllsResult result;
  Eigen::VectorXd r = scaled_residual(q);
  const Eigen::Index m = r.size();
  if (m < n) throw DomainError("nlls_fit: fewer residuals than parameters");
  if (!r.allFinite()) throw DomainError("nlls_fit: residuals not finite at initial guess");
  double cost = 0.5 * r.squaredNorm();

  double lambda = options.initial_lambda;
  Eigen::MatrixXd jac = numeric_jacobian(scaled_residual, q, qlo, qhi, m);

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;

    if (grad.cwiseAbs().maxCoeff() <= options.gradient_tol * std::max(1.0, cost)) {
      result.converged = true;
      break;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 24 && !stepped; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index j = 0; j < n; ++j) {
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      }
      const Eigen::LDLT<Eigen::MatrixXd> solver(damped);
      Eigen::VectorXd step = solver.solve(-grad);
      if (solver.info() != Eigen::Success || !step.allFinite()) {
        result.singular_jacobian = true;
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = clamp_to_box(q + step, qlo, qhi);
      const Eigen::VectorXd r_trial = scaled_residual(trial);
      const double cost_trial = r_trial.allFinite() ? 0.5 * r_trial.squaredNorm()
                                                    : std::numeric_limits<double>::infinity();
      if (cost_trial < cost) {
        double rel_step = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          rel_step = std::max(rel_step,
                              std::abs(trial[j] - q[j]) / std::max(std::abs(q[j]), 1.0));
        }
        const double improvement = cost - cost_trial;
        q = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-14);
        stepped = true;
        if (rel_step <= options.step_tol ||
            improvement <= 1e-15 * std::max(cost, 1e-300)) {
          result.converged = true;
        }
      } else {
        lambda *= 4.0;
        if (lambda > 1e15) break;
      }
    }
    if (result.converged) {
      ++iter;
      break;
    }
    if (!stepped) {
      // Damping saturated without an acceptable step; treat a stall at a
      // small-gradient point as convergence defeated by rounding.
      result.converged = grad.cwiseAbs().maxCoeff() <=
                         1e4 * options.gradient_tol * std::max(1.0, cost);
      break;
    }
    jac = numeric_jacobian(scaled_residual, q, qlo, qhi, m);
  }

  result.params = to_params(q);
  result.cost = cost;
  result.iterations = iter;
  result.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(m));

  // Covariance from the Jacobian at the solution, mapped back to the
  // caller's units. Rank deficiency is reported, not fatal.
  jac = numeric_jacobian(scaled_residual, q, qlo, qhi, m);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
  if (cod.rank() < n) result.singular_jacobian = true;
  const double dof = static_cast<double>(m - n);
  const double sigma2 = dof > 0.0 ? 2.0 * cost / dof : 0.0;
  result.covariance = sigma2 * (scale.asDiagonal() * cod.pseudoInverse() * scale.asDiagonal());
  return result;
}

}  // namespace scpw
