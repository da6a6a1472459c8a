#include "elab/acquisition.hpp"

#include <cmath>

namespace elab {

std::string to_string(AcquisitionKind k) {
  switch (k) {
    case AcquisitionKind::kThompsonSampling: return "thompson";
    case AcquisitionKind::kExpectedImprovement: return "ei";
    case AcquisitionKind::kTopTwoEI: return "ttei";
    case AcquisitionKind::kUcb: return "ucb";
    case AcquisitionKind::kRandom: return "random";
  }
  return "unknown";
}

AcquisitionKind acquisition_from_string(const std::string& s) {
  if (s == "thompson" || s == "ts") return AcquisitionKind::kThompsonSampling;
  if (s == "ei") return AcquisitionKind::kExpectedImprovement;
  if (s == "ttei") return AcquisitionKind::kTopTwoEI;
  if (s == "ucb") return AcquisitionKind::kUcb;
  if (s == "random") return AcquisitionKind::kRandom;
  throw ConfigError("unknown acquisition kind: " + s);
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double ei_value(double mean, double var, double best) {
  if (var < 0.0) throw Error("negative posterior variance");
  const double sigma = std::sqrt(var);
  const double improve = mean - best;
  if (sigma < 1e-14) return std::max(improve, 0.0);
  const double z = improve / sigma;
  return std::max(0.0, improve * normal_cdf(z) + sigma * normal_pdf(z));
}

}  // namespace

double acq_ei(const GpPosterior& p, const Eigen::Vector3d& x, double best) {
  const GpPrediction pr = gp_predict_latent(p, x);
  return ei_value(pr.mean, pr.variance, best);
}

double acq_ucb(const GpPosterior& p, const Eigen::Vector3d& x, double beta) {
  const GpPrediction pr = gp_predict_latent(p, x);
  if (pr.variance < 0.0) throw Error("negative posterior variance");
  return pr.mean + beta * std::sqrt(pr.variance);
}

Eigen::VectorXd ei_scores(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                          double best) {
  Eigen::VectorXd s(candidates.rows());
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    const GpPrediction pr = gp_predict_latent(p, candidates.row(i).transpose());
    s(i) = ei_value(pr.mean, pr.variance, best);
  }
  return s;
}

Eigen::VectorXd ucb_scores(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                           double beta) {
  Eigen::VectorXd s(candidates.rows());
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    const GpPrediction pr = gp_predict_latent(p, candidates.row(i).transpose());
    s(i) = pr.mean + beta * std::sqrt(std::max(0.0, pr.variance));
  }
  return s;
}

std::size_t acq_thompson(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                         Rng& rng, std::size_t joint_limit) {
  const Eigen::Index c = candidates.rows();
  if (c == 0) throw DomainError("thompson sampling needs candidates");

  Eigen::VectorXd sample(c);
  if (static_cast<std::size_t>(c) <= joint_limit) {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    gp_joint_posterior(p, candidates, mean, cov);
    // Escalate jitter until the candidate covariance factorizes; the draw
    // stays joint rather than degrading to independent marginals.
    double jitter = 1e-9 * p.y_scale * p.y_scale;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd jittered = cov;
      jittered.diagonal().array() += jitter;
      llt.compute(jittered);
      if (llt.info() == Eigen::Success) break;
      jitter *= 10.0;
    }
    if (llt.info() != Eigen::Success)
      throw FitError("candidate covariance not factorizable for sampling");
    Eigen::VectorXd z(c);
    for (Eigen::Index i = 0; i < c; ++i) z(i) = rng.normal();
    sample = mean + Eigen::MatrixXd(llt.matrixL()) * z;
  } else {
    for (Eigen::Index i = 0; i < c; ++i) {
      const GpPrediction pr = gp_predict_latent(p, candidates.row(i).transpose());
      sample(i) = pr.mean + std::sqrt(std::max(0.0, pr.variance)) * rng.normal();
    }
  }

  std::size_t best = 0;
  for (Eigen::Index i = 1; i < c; ++i)
    if (sample(i) > sample(static_cast<Eigen::Index>(best)))
      best = static_cast<std::size_t>(i);
  return best;
}

std::size_t acq_ttei(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                     double best, Rng& rng) {
  const Eigen::Index c = candidates.rows();
  if (c == 0) throw DomainError("top-two EI needs candidates");
  const Eigen::VectorXd s = ei_scores(p, candidates, best);

  Eigen::Index first = 0;
  for (Eigen::Index i = 1; i < c; ++i)
    if (s(i) > s(first)) first = i;
  Eigen::Index second = first == 0 ? 1 : 0;
  for (Eigen::Index i = 0; i < c; ++i) {
    if (i == first) continue;
    if (s(i) > s(second)) second = i;
  }
  if (c == 1) return 0;
  return static_cast<std::size_t>(rng.coin_flip() ? first : second);
}

}  // namespace elab
