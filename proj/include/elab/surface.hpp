#pragma once

#include <span>
#include <string>
#include <vector>

#include "elab/types.hpp"

namespace elab {

/// Ground-truth conductivity surface: a Casteel-Amis curve in molality whose
/// height varies smoothly with the solvent blend,
///
///   kappa(blend, m, T) = kappa_peak(blend) * g(m) * (1 + alpha*(T - T_ref))
///   g(m) = (m/mu)^a * exp(-b*(m - mu)^2 - (a/mu)*(m - mu))
///
/// g peaks at exactly m = mu with g(mu) = 1, so kappa_peak is the peak
/// conductivity and mu the peak molality. kappa_peak is quadratic in the EC
/// fraction around its optimum and linear in the DMC co-solvent ratio.
struct SurfaceParams {
  double peak_base = 11.0;       // kappa_peak at (best_ec_frac, ratio 0)
  double ec_curvature = -90.0;   // per (ec - best_ec_frac)^2, negative
  double ratio_gain = 2.7;       // per unit dmc_ratio, positive
  double best_ec_frac = 0.40;
  double peak_molality = 0.9;    // mu
  double shape_a = 0.9;
  double shape_b = 0.75;
  double temp_coeff_per_c = 0.02;   // alpha
  double ref_temp_c = 27.0;

  double kappa_peak(double ec_frac, double dmc_ratio) const {
    const double d = ec_frac - best_ec_frac;
    return peak_base + ec_curvature * d * d + ratio_gain * dmc_ratio;
  }
};

/// One calibration observation. `tolerance` is the absolute error the fitted
/// surface must reproduce this anchor within; `weight` its least-squares
/// weight.
struct ConductivityAnchor {
  Electrolyte electrolyte;
  double conductivity_ms_cm = 0.0;
  double weight = 1.0;
  double tolerance = 1.0;
  std::string label;
};

struct CalibrationReport {
  SurfaceParams params;
  std::vector<double> anchor_residuals;  // fit minus anchor, anchor order
  double rms_residual = 0.0;
};

double true_conductivity(const Electrolyte& e, double temp_c,
                         const SurfaceParams& p);

/// Weighted least-squares fit of (peak_base, ec_curvature, ratio_gain,
/// shape_a, shape_b) to the anchors; peak_molality, temperature handling and
/// best_ec_frac are taken from `init`. Throws CalibrationError when the
/// blend dependence is unidentifiable from the anchors, when any anchor
/// misses its tolerance, or when the fitted family is not peaked at
/// (best_ec_frac, ratio 1, mu).
CalibrationReport calibrate_surface(std::span<const ConductivityAnchor> anchors,
                                    const SurfaceParams& init = SurfaceParams{});

/// The anchor set used by default: the published blend table plus a
/// high-weight anchor pinning the 13.7 mS/cm optimum.
std::vector<ConductivityAnchor> default_anchor_set();

/// Anchors from CSV with header columns
/// w_ec, w_dmc, w_emc, molality, conductivity_ms_cm[, weight[, tolerance]].
std::vector<ConductivityAnchor> load_anchors_csv(const std::string& path);

}  // namespace elab
