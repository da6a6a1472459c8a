#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "elab/gp.hpp"
#include "elab/rng.hpp"

namespace elab {

enum class AcquisitionKind {
  kThompsonSampling,
  kExpectedImprovement,
  kTopTwoEI,
  kUcb,
  kRandom,
};

std::string to_string(AcquisitionKind k);
AcquisitionKind acquisition_from_string(const std::string& s);

/// EI = (mu - best) Phi(z) + sigma phi(z), z = (mu - best)/sigma;
/// max(mu - best, 0) in the sigma -> 0 limit.
double acq_ei(const GpPosterior& p, const Eigen::Vector3d& x, double best);

double acq_ucb(const GpPosterior& p, const Eigen::Vector3d& x, double beta);

/// Draws one joint posterior sample over the candidates (exact when the set
/// is small enough to factorize, independent marginals otherwise) and
/// returns the argmax index. Ties break to the lowest index.
std::size_t acq_thompson(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                         Rng& rng, std::size_t joint_limit = 2000);

/// Returns the EI argmax with probability 1/2, otherwise the runner-up.
std::size_t acq_ttei(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                     double best, Rng& rng);

/// Shared helpers for scoring a full candidate matrix.
Eigen::VectorXd ei_scores(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                          double best);
Eigen::VectorXd ucb_scores(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                           double beta);

}  // namespace elab
