#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "elab/types.hpp"

namespace elab {

/// Matern-5/2 correlation for a squared ARD distance r2 = sum((dx_i/l_i)^2).
inline double matern52(double r2) {
  const double r = std::sqrt(5.0 * r2);
  return (1.0 + r + 5.0 * r2 / 3.0) * std::exp(-r);
}

/// ARD Matern-5/2 kernel on points given as row vectors.
template <typename DerivedA, typename DerivedB, typename DerivedL>
double kernel_ard_matern52(const Eigen::MatrixBase<DerivedA>& a,
                           const Eigen::MatrixBase<DerivedB>& b,
                           const Eigen::MatrixBase<DerivedL>& lengthscales,
                           double signal_var) {
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = (a(i) - b(i)) / lengthscales(i);
    r2 += d * d;
  }
  return signal_var * matern52(r2);
}

/// Training pairs on the normalized [0,1]^3 cube. Duplicate grid points are
/// rejected; `best` tracks the running maximum of y.
class ObservationSet {
 public:
  void add(const Eigen::Vector3d& x_normalized, double y);
  Eigen::Index size() const { return static_cast<Eigen::Index>(y_.size()); }
  const Eigen::MatrixXd x_matrix() const;  // n x 3
  const std::vector<double>& y() const { return y_; }
  double best() const { return best_; }

 private:
  std::vector<Eigen::Vector3d> x_;
  std::vector<double> y_;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct GpHyperparams {
  Eigen::Vector3d lengthscales{0.3, 0.3, 0.3};
  double signal_var = 1.0;
  double noise_var = 1e-4;

  bool operator==(const GpHyperparams&) const = default;
};

/// Fitted surrogate: hyperparameters, the Cholesky factor of the training
/// covariance and the y-standardization constants.
struct GpPosterior {
  GpHyperparams hyper;
  Eigen::MatrixXd train_x;   // n x 3
  Eigen::MatrixXd chol_l;    // lower factor of K + noise*I (standardized y)
  Eigen::VectorXd alpha;     // (K + noise*I)^{-1} z
  double y_mean = 0.0;
  double y_scale = 1.0;
  double log_marginal = 0.0;

  Eigen::Index size() const { return train_x.rows(); }
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // includes the fitted noise variance
};

struct GpFitOptions {
  int starts = 16;
  int sweeps = 6;
  double lengthscale_lo = 0.05;
  double lengthscale_hi = 5.0;
  double signal_var_lo = 1e-3;
  double signal_var_hi = 10.0;
  // Relative instrument repeatability used to floor the noise variance.
  double noise_floor_rel = 0.013;
  std::uint64_t seed = 0;
};

/// Maximizes log marginal likelihood with a deterministic multi-start
/// coordinate search on log-parameters. The search is derivative-free, so no
/// analytic likelihood gradient exists to cross-check against finite
/// differences; correctness rests on the dense-solve oracle tests instead.
GpPosterior fit_gp(const ObservationSet& obs, const GpFitOptions& opt = GpFitOptions{});

GpPrediction gp_predict(const GpPosterior& p, const Eigen::Vector3d& x);

/// Same posterior without the observation-noise term in the variance: the
/// distribution of the latent objective f rather than of a new noisy
/// reading. Acquisition functions score f, matching the joint sampler.
GpPrediction gp_predict_latent(const GpPosterior& p, const Eigen::Vector3d& x);

/// Joint latent posterior over a candidate set (rows of `candidates`), in
/// original y units. Used by Thompson sampling.
void gp_joint_posterior(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                        Eigen::VectorXd& mean_out, Eigen::MatrixXd& cov_out);

}  // namespace elab
