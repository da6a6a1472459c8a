#include "elab/surface.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "elab/composition.hpp"
#include "elab/lm.hpp"

namespace elab {

namespace {

double molality_shape(double m, double mu, double a, double b) {
  if (m <= 0.0) return 0.0;
  const double dm = m - mu;
  return std::pow(m / mu, a) * std::exp(-b * dm * dm - (a / mu) * dm);
}

DesignAxes blend_axes(const Electrolyte& e) {
  DesignAxes a;
  a.ec_frac = e.blend.w_ec;
  a.dmc_ratio = e.blend.w_ec < 1.0 - 1e-15
                    ? e.blend.w_dmc / (1.0 - e.blend.w_ec)
                    : 0.0;
  a.molality = e.molality;
  return a;
}

}  // namespace

double true_conductivity(const Electrolyte& e, double temp_c,
                         const SurfaceParams& p) {
  e.validate();
  if (temp_c < 20.0 || temp_c > 35.0)
    throw DomainError("sample temperature outside supported range [20, 35] C");
  const DesignAxes a = blend_axes(e);
  const double peak = p.kappa_peak(a.ec_frac, a.dmc_ratio);
  const double g = molality_shape(e.molality, p.peak_molality, p.shape_a, p.shape_b);
  const double temp = 1.0 + p.temp_coeff_per_c * (temp_c - p.ref_temp_c);
  return std::max(0.0, peak * g * temp);
}

CalibrationReport calibrate_surface(std::span<const ConductivityAnchor> anchors,
                                    const SurfaceParams& init) {
  if (anchors.size() < 4)
    throw CalibrationError("calibration needs at least 4 anchors");

  // Blend-dependence identifiability: the unique blend rows must span the
  // [1, (ec - ec*)^2, ratio] basis.
  std::set<std::pair<long long, long long>> seen;
  std::vector<Eigen::Vector3d> rows;
  for (const auto& a : anchors) {
    const DesignAxes ax = blend_axes(a.electrolyte);
    const auto key = std::make_pair(llround(ax.ec_frac * 1e9),
                                    llround(ax.dmc_ratio * 1e9));
    if (seen.insert(key).second) {
      const double d = ax.ec_frac - init.best_ec_frac;
      rows.emplace_back(1.0, d * d, ax.dmc_ratio);
    }
  }
  Eigen::MatrixXd B(static_cast<Eigen::Index>(rows.size()), 3);
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    B.row(i) = rows[static_cast<std::size_t>(i)].transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  if (svd.rank() < 3)
    throw CalibrationError(
        "blend dependence unidentifiable: anchors span too few blends");

  // theta = (peak_base, ec_curvature, ratio_gain, log a, log b).
  auto params_of = [&](const Eigen::VectorXd& t) {
    SurfaceParams p = init;
    p.peak_base = t(0);
    p.ec_curvature = t(1);
    p.ratio_gain = t(2);
    p.shape_a = std::exp(t(3));
    p.shape_b = std::exp(t(4));
    return p;
  };
  auto residuals = [&](const Eigen::VectorXd& t) {
    const SurfaceParams p = params_of(t);
    Eigen::VectorXd r(static_cast<Eigen::Index>(anchors.size()));
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const auto& a = anchors[static_cast<std::size_t>(i)];
      const double fit =
          true_conductivity(a.electrolyte, p.ref_temp_c, p);
      r(i) = std::sqrt(a.weight) * (fit - a.conductivity_ms_cm);
    }
    return r;
  };

  double kappa_max = 0.0;
  for (const auto& a : anchors)
    kappa_max = std::max(kappa_max, a.conductivity_ms_cm);
  if (kappa_max <= 0.0) throw CalibrationError("anchors carry no signal");

  // Deterministic multi-start over the shape exponents and peak split.
  const double scale = kappa_max / 13.7;
  std::vector<Eigen::VectorXd> starts;
  for (double base_frac : {0.8, 0.65}) {
    for (auto [a0, b0] : {std::pair{0.9, 0.75}, std::pair{0.3, 0.08},
                          std::pair{1.5, 0.3}}) {
      Eigen::VectorXd t(5);
      t << base_frac * kappa_max, -90.0 * scale,
          (1.0 - base_frac) * kappa_max, std::log(a0), std::log(b0);
      starts.push_back(t);
    }
  }

  LmResult best;
  best.sum_squares = std::numeric_limits<double>::infinity();
  for (const auto& t0 : starts) {
    LmResult r = levenberg_marquardt(residuals, t0);
    if (r.sum_squares < best.sum_squares) best = r;
  }

  CalibrationReport report;
  report.params = params_of(best.theta);

  // Structural checks: the family must actually peak where declared.
  if (!(report.params.ec_curvature < 0.0))
    throw CalibrationError("fitted surface not peaked in EC fraction");
  if (!(report.params.ratio_gain > 0.0))
    throw CalibrationError("fitted surface not increasing in DMC ratio");
  if (!(report.params.shape_a > 0.0) || !(report.params.shape_b >= 0.0))
    throw CalibrationError("fitted molality shape degenerate");

  double ss = 0.0;
  std::ostringstream misses;
  for (const auto& a : anchors) {
    const double fit =
        true_conductivity(a.electrolyte, report.params.ref_temp_c, report.params);
    const double res = fit - a.conductivity_ms_cm;
    report.anchor_residuals.push_back(res);
    ss += res * res;
    if (std::abs(res) > a.tolerance) {
      misses << "  " << (a.label.empty() ? "anchor" : a.label) << ": fit " << fit
             << " vs " << a.conductivity_ms_cm << " (tol " << a.tolerance
             << ")\n";
    }
  }
  report.rms_residual = std::sqrt(ss / static_cast<double>(anchors.size()));
  const std::string missed = misses.str();
  if (!missed.empty())
    throw CalibrationError("calibration residuals exceed tolerance:\n" + missed);
  return report;
}

std::vector<ConductivityAnchor> default_anchor_set() {
  auto make = [](double w_ec, double w_dmc, double w_emc, double m, double k,
                 double weight, double tol, std::string label) {
    ConductivityAnchor a;
    a.electrolyte = Electrolyte{SolventBlend{w_ec, w_dmc, w_emc}, m};
    a.conductivity_ms_cm = k;
    a.weight = weight;
    a.tolerance = tol;
    a.label = std::move(label);
    return a;
  };
  return {
      make(0.30, 0.00, 0.70, 1.1, 9.8, 1.0, 1.0, "G"),
      make(0.50, 0.45, 0.05, 1.1, 12.2, 1.0, 1.0, "A"),
      make(0.30, 0.70, 0.00, 1.5, 12.1, 1.0, 1.0, "B"),
      make(0.40, 0.60, 0.00, 0.9, 12.8, 1.0, 1.0, "C"),
      make(0.50, 0.50, 0.00, 0.5, 10.8, 1.0, 1.0, "D"),
      make(0.30, 0.70, 0.00, 1.3, 12.1, 1.0, 1.0, "E"),
      make(0.30, 0.70, 0.00, 1.0, 12.4, 1.0, 1.0, "F"),
      make(0.40, 0.60, 0.00, 0.9, 13.7, 50.0, 0.2, "peak"),
  };
}

std::vector<ConductivityAnchor> load_anchors_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open anchor CSV: " + path);
  std::vector<ConductivityAnchor> anchors;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {  // skip the column header row
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::vector<double> fields;
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(std::stod(tok));
    if (fields.size() < 5)
      throw ConfigError("anchor CSV row needs at least 5 columns: " + line);
    ConductivityAnchor a;
    a.electrolyte =
        Electrolyte{SolventBlend{fields[0], fields[1], fields[2]}, fields[3]};
    a.conductivity_ms_cm = fields[4];
    if (fields.size() > 5) a.weight = fields[5];
    if (fields.size() > 6) a.tolerance = fields[6];
    anchors.push_back(a);
  }
  return anchors;
}

}  // namespace elab
