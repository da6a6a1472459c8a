#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace elab {

struct LmOptions {
  int max_iterations = 200;
  double initial_lambda = 1e-3;
  double gradient_tol = 1e-12;
  double step_tol = 1e-14;
};

struct LmResult {
  Eigen::VectorXd theta;
  double sum_squares = 0.0;
  int iterations = 0;
};

/// Dense Levenberg-Marquardt with a forward-difference Jacobian. Sized for
/// the handful-of-parameters fits used here; fully deterministic.
inline LmResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd theta, const LmOptions& opt = LmOptions{}) {
  const auto n = theta.size();
  Eigen::VectorXd r = residuals(theta);
  double cost = r.squaredNorm();
  double lambda = opt.initial_lambda;

  LmResult out;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    out.iterations = iter + 1;

    Eigen::MatrixXd J(r.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = std::max(1e-7, 1e-7 * std::abs(theta(j)));
      Eigen::VectorXd tp = theta;
      tp(j) += h;
      J.col(j) = (residuals(tp) - r) / h;
    }

    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tol) break;

    bool stepped = false;
    for (int tries = 0; tries < 20; ++tries) {
      Eigen::MatrixXd M = JtJ;
      M.diagonal().array() += lambda * (JtJ.diagonal().array().abs() + 1e-12);
      const Eigen::VectorXd step = M.ldlt().solve(-g);
      if (step.norm() < opt.step_tol * (theta.norm() + opt.step_tol)) {
        stepped = false;
        break;
      }
      const Eigen::VectorXd cand = theta + step;
      const Eigen::VectorXd rc = residuals(cand);
      const double cc = rc.squaredNorm();
      if (cc < cost) {
        theta = cand;
        r = rc;
        cost = cc;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;
  }

  out.theta = theta;
  out.sum_squares = cost;
  return out;
}

}  // namespace elab
