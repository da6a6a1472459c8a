#include "elab/gp.hpp"

#include <algorithm>
#include <cmath>

#include "elab/rng.hpp"

namespace elab {

void ObservationSet::add(const Eigen::Vector3d& x_normalized, double y) {
  for (const auto& existing : x_) {
    if ((existing - x_normalized).lpNorm<Eigen::Infinity>() < 1e-12)
      throw DomainError("duplicate observation point");
  }
  x_.push_back(x_normalized);
  y_.push_back(y);
  best_ = std::max(best_, y);
}

const Eigen::MatrixXd ObservationSet::x_matrix() const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(x_.size()), 3);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    X.row(i) = x_[static_cast<std::size_t>(i)].transpose();
  return X;
}

namespace {

Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& X, const GpHyperparams& h) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = h.signal_var;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      K(i, j) = kernel_ard_matern52(X.row(i), X.row(j), h.lengthscales,
                                    h.signal_var);
      K(j, i) = K(i, j);
    }
  }
  return K;
}

struct CholOut {
  Eigen::MatrixXd L;
  bool ok = false;
};

CholOut chol_with_jitter(Eigen::MatrixXd K) {
  CholOut out;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 10; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) {
      out.L = llt.matrixL();
      out.ok = true;
      return out;
    }
    const double bump = jitter == 0.0 ? 1e-10 * K.trace() / K.rows() : jitter * 9.0;
    K.diagonal().array() += bump;
    jitter += bump;
  }
  return out;
}

/// log p(z | X, theta) for standardized targets z.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                               const GpHyperparams& h) {
  Eigen::MatrixXd K = build_kernel(X, h);
  K.diagonal().array() += h.noise_var;
  const CholOut c = chol_with_jitter(std::move(K));
  if (!c.ok) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha =
      c.L.transpose().triangularView<Eigen::Upper>().solve(
          c.L.triangularView<Eigen::Lower>().solve(z));
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < c.L.rows(); ++i) logdet += std::log(c.L(i, i));
  return -0.5 * z.dot(alpha) - logdet -
         0.5 * static_cast<double>(z.size()) * std::log(2.0 * M_PI);
}

}  // namespace

GpPosterior fit_gp(const ObservationSet& obs, const GpFitOptions& opt) {
  if (obs.size() < 2) throw FitError("fit_gp needs at least 2 observations");

  const Eigen::MatrixXd X = obs.x_matrix();
  Eigen::VectorXd y(obs.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y(i) = obs.y()[static_cast<std::size_t>(i)];

  const double y_mean = y.mean();
  double y_scale = std::sqrt((y.array() - y_mean).square().sum() /
                             std::max<Eigen::Index>(1, y.size() - 1));
  if (y_scale < 1e-12) y_scale = 1.0;
  const Eigen::VectorXd z = (y.array() - y_mean) / y_scale;

  // Noise variance floored at the instrument repeatability, expressed in
  // standardized units.
  const double noise_floor =
      std::max(1e-8, std::pow(opt.noise_floor_rel * std::abs(y_mean) / y_scale, 2));
  const double noise_hi = std::max(noise_floor * 4.0, 1.0);

  const double lo[5] = {std::log(opt.lengthscale_lo), std::log(opt.lengthscale_lo),
                        std::log(opt.lengthscale_lo), std::log(opt.signal_var_lo),
                        std::log(noise_floor)};
  const double hi[5] = {std::log(opt.lengthscale_hi), std::log(opt.lengthscale_hi),
                        std::log(opt.lengthscale_hi), std::log(opt.signal_var_hi),
                        std::log(noise_hi)};

  auto lml_of = [&](const double* t) {
    GpHyperparams h;
    h.lengthscales << std::exp(t[0]), std::exp(t[1]), std::exp(t[2]);
    h.signal_var = std::exp(t[3]);
    h.noise_var = std::exp(t[4]);
    return log_marginal_likelihood(X, z, h);
  };

  Rng rng(mix_seed(opt.seed, "gp-fit"));
  double best_t[5];
  double best_lml = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < opt.starts; ++s) {
    double t[5];
    if (s == 0) {
      // Canonical start: mid lengthscales, unit signal, floored noise.
      t[0] = t[1] = t[2] = std::log(0.3);
      t[3] = 0.0;
      t[4] = std::log(std::min(std::max(noise_floor * 2.0, 1e-6), noise_hi));
    } else {
      for (int k = 0; k < 5; ++k) t[k] = rng.uniform(lo[k], hi[k]);
    }

    double cur = lml_of(t);
    for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
      for (int k = 0; k < 5; ++k) {
        // Coarse scan then golden-section refinement on the bracket.
        const int kGridPoints = 13;
        double bk = t[k];
        double bv = cur;
        const double saved = t[k];
        for (int gi = 0; gi < kGridPoints; ++gi) {
          t[k] = lo[k] + (hi[k] - lo[k]) * gi / (kGridPoints - 1);
          const double v = lml_of(t);
          if (v > bv) {
            bv = v;
            bk = t[k];
          }
        }
        t[k] = saved;
        double a = std::max(lo[k], bk - (hi[k] - lo[k]) / (kGridPoints - 1));
        double b = std::min(hi[k], bk + (hi[k] - lo[k]) / (kGridPoints - 1));
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - gr * (b - a);
        double x2 = a + gr * (b - a);
        t[k] = x1;
        double f1 = lml_of(t);
        t[k] = x2;
        double f2 = lml_of(t);
        for (int it = 0; it < 20; ++it) {
          if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            t[k] = x2;
            f2 = lml_of(t);
          } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            t[k] = x1;
            f1 = lml_of(t);
          }
        }
        const double xm = (a + b) / 2.0;
        t[k] = xm;
        const double fm = lml_of(t);
        if (fm >= bv) {
          cur = fm;
        } else {
          t[k] = bk;
          cur = bv;
        }
      }
    }

    if (cur > best_lml) {
      best_lml = cur;
      std::copy(t, t + 5, best_t);
    }
  }

  if (!std::isfinite(best_lml))
    throw FitError("covariance not positive definite for any hyperparameters");

  GpPosterior p;
  p.hyper.lengthscales << std::exp(best_t[0]), std::exp(best_t[1]),
      std::exp(best_t[2]);
  p.hyper.signal_var = std::exp(best_t[3]);
  p.hyper.noise_var = std::exp(best_t[4]);
  p.train_x = X;
  p.y_mean = y_mean;
  p.y_scale = y_scale;
  p.log_marginal = best_lml;

  Eigen::MatrixXd K = build_kernel(X, p.hyper);
  K.diagonal().array() += p.hyper.noise_var;
  const CholOut c = chol_with_jitter(std::move(K));
  if (!c.ok) throw FitError("covariance not positive definite after jitter escalation");
  p.chol_l = c.L;
  p.alpha = c.L.transpose().triangularView<Eigen::Upper>().solve(
      c.L.triangularView<Eigen::Lower>().solve(z));
  return p;
}

namespace {

GpPrediction predict_impl(const GpPosterior& p, const Eigen::Vector3d& x,
                          bool with_noise) {
  const Eigen::Index n = p.size();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k_star(i) = kernel_ard_matern52(p.train_x.row(i), x.transpose(),
                                    p.hyper.lengthscales, p.hyper.signal_var);
  const Eigen::VectorXd v =
      p.chol_l.triangularView<Eigen::Lower>().solve(k_star);

  GpPrediction out;
  out.mean = p.y_mean + p.y_scale * k_star.dot(p.alpha);
  const double var_std = p.hyper.signal_var +
                         (with_noise ? p.hyper.noise_var : 0.0) -
                         v.squaredNorm();
  out.variance = std::max(0.0, p.y_scale * p.y_scale * var_std);
  return out;
}

}  // namespace

GpPrediction gp_predict(const GpPosterior& p, const Eigen::Vector3d& x) {
  return predict_impl(p, x, /*with_noise=*/true);
}

GpPrediction gp_predict_latent(const GpPosterior& p, const Eigen::Vector3d& x) {
  return predict_impl(p, x, /*with_noise=*/false);
}

void gp_joint_posterior(const GpPosterior& p, const Eigen::MatrixXd& candidates,
                        Eigen::VectorXd& mean_out, Eigen::MatrixXd& cov_out) {
  const Eigen::Index n = p.size();
  const Eigen::Index c = candidates.rows();

  Eigen::MatrixXd k_xc(n, c);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      k_xc(i, j) = kernel_ard_matern52(p.train_x.row(i), candidates.row(j),
                                       p.hyper.lengthscales, p.hyper.signal_var);

  Eigen::MatrixXd k_cc(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    k_cc(i, i) = p.hyper.signal_var;
    for (Eigen::Index j = i + 1; j < c; ++j) {
      k_cc(i, j) = kernel_ard_matern52(candidates.row(i), candidates.row(j),
                                       p.hyper.lengthscales, p.hyper.signal_var);
      k_cc(j, i) = k_cc(i, j);
    }
  }

  const Eigen::MatrixXd v = p.chol_l.triangularView<Eigen::Lower>().solve(k_xc);
  mean_out =
      (p.y_mean + p.y_scale * (k_xc.transpose() * p.alpha).array()).matrix();
  cov_out = (p.y_scale * p.y_scale) * (k_cc - v.transpose() * v);
}

}  // namespace elab
