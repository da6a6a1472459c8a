#include "elab/composition.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "elab/nnls.hpp"

namespace elab {

namespace {

constexpr double kBlendSumTol = 1e-9;
constexpr double kDoseResidualTol = 1e-6;

bool in_range(double v, const AxisRange& r, double tol = 1e-12) {
  return v >= r.lo - tol && v <= r.hi + tol;
}

}  // namespace

void SolventBlend::validate() const {
  if (w_ec < -kBlendSumTol || w_dmc < -kBlendSumTol || w_emc < -kBlendSumTol)
    throw DomainError("solvent mass fractions must be non-negative");
  const double sum = w_ec + w_dmc + w_emc;
  if (std::abs(sum - 1.0) > kBlendSumTol) {
    std::ostringstream os;
    os << "solvent mass fractions must sum to 1 (got " << sum << ")";
    throw DomainError(os.str());
  }
}

void Electrolyte::validate() const {
  blend.validate();
  if (molality < 0.0 || molality > 2.0)
    throw DomainError("molality must lie in [0, 2] mol/kg");
}

double salt_mass_fraction(double molality, double salt_molar_mass_kg_mol) {
  const double s = molality * salt_molar_mass_kg_mol;
  return s / (1.0 + s);
}

Electrolyte axes_to_electrolyte(const DesignAxes& a, const AxisBounds& bounds) {
  if (!in_range(a.ec_frac, bounds.ec_frac) ||
      !in_range(a.dmc_ratio, bounds.dmc_ratio) ||
      !in_range(a.molality, bounds.molality)) {
    std::ostringstream os;
    os << "axes out of bounds: (" << a.ec_frac << ", " << a.dmc_ratio << ", "
       << a.molality << ")";
    throw DomainError(os.str());
  }
  Electrolyte e;
  e.blend.w_ec = a.ec_frac;
  e.blend.w_dmc = a.dmc_ratio * (1.0 - a.ec_frac);
  e.blend.w_emc = 1.0 - e.blend.w_ec - e.blend.w_dmc;
  if (e.blend.w_emc < 0.0 && e.blend.w_emc > -kBlendSumTol) e.blend.w_emc = 0.0;
  e.molality = a.molality;
  return e;
}

DesignAxes electrolyte_to_axes(const Electrolyte& e) {
  e.validate();
  if (e.blend.w_ec >= 1.0 - 1e-15)
    throw DomainError("DMC co-solvent ratio undefined at w_ec = 1");
  DesignAxes a;
  a.ec_frac = e.blend.w_ec;
  a.dmc_ratio = e.blend.w_dmc / (1.0 - e.blend.w_ec);
  a.molality = e.molality;
  return a;
}

DomainGrid enumerate_grid(const AxisBounds& bounds, int ec_levels,
                          int ratio_levels, int molality_levels) {
  if (ec_levels < 2 || ratio_levels < 2 || molality_levels < 2)
    throw DomainError("grid needs at least 2 levels per axis");

  auto levels_of = [](const AxisRange& r, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    const double step = (r.hi - r.lo) / (n - 1);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = r.lo + i * step;
    return v;
  };

  DomainGrid g;
  g.bounds = bounds;
  g.ec_levels = ec_levels;
  g.ratio_levels = ratio_levels;
  g.molality_levels = molality_levels;
  g.ec_values = levels_of(bounds.ec_frac, ec_levels);
  g.ratio_values = levels_of(bounds.dmc_ratio, ratio_levels);
  g.molality_values = levels_of(bounds.molality, molality_levels);

  g.points.reserve(static_cast<std::size_t>(ec_levels) * ratio_levels *
                   molality_levels);
  for (double ec : g.ec_values)
    for (double ratio : g.ratio_values)
      for (double m : g.molality_values)
        g.points.push_back(DesignAxes{ec, ratio, m});
  return g;
}

double estimate_density(const Electrolyte& e, double temp_c,
                        const DensityModel& model) {
  e.validate();
  const double dt = temp_c - model.ref_temp_c;
  const double rho_ec = model.ec_density_g_ml - model.temp_slope_g_ml_per_c * dt;
  const double rho_dmc = model.dmc_density_g_ml - model.temp_slope_g_ml_per_c * dt;
  const double rho_emc = model.emc_density_g_ml - model.temp_slope_g_ml_per_c * dt;

  // Per kilogram of solvent: mass in grams over volume in millilitres.
  const double mass_g = 1000.0 * (1.0 + e.molality * model.salt_molar_mass_kg_mol);
  const double vol_ml = 1000.0 * (e.blend.w_ec / rho_ec + e.blend.w_dmc / rho_dmc +
                                  e.blend.w_emc / rho_emc) +
                        e.molality * model.salt_apparent_volume_ml_mol;
  return mass_g / vol_ml;
}

namespace {

// Species mass fractions (EC, DMC, EMC, salt) of a full electrolyte.
Eigen::Vector4d species_fractions(const Electrolyte& e, double salt_molar_mass) {
  const double s = salt_mass_fraction(e.molality, salt_molar_mass);
  Eigen::Vector4d w;
  w << e.blend.w_ec * (1.0 - s), e.blend.w_dmc * (1.0 - s),
      e.blend.w_emc * (1.0 - s), s;
  return w;
}

}  // namespace

DosePlan plan_dose(const Electrolyte& target, double total_mass_g,
                   std::span<const FeederSolution> feeders) {
  target.validate();
  if (feeders.empty()) throw DomainError("plan_dose needs at least one feeder");
  if (total_mass_g <= 0.0) throw DomainError("total mass must be positive");

  const double salt_molar_mass = DensityModel{}.salt_molar_mass_kg_mol;
  const Eigen::Index n = static_cast<Eigen::Index>(feeders.size());

  // Column j: grams of each species delivered per millilitre of feeder j.
  Eigen::MatrixXd A(4, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& f = feeders[static_cast<std::size_t>(j)];
    if (f.density_g_ml <= 0.0)
      throw DomainError("feeder density must be positive: " + f.id);
    A.col(j) = f.density_g_ml * species_fractions(f.composition, salt_molar_mass);
  }
  const Eigen::Vector4d b = total_mass_g * species_fractions(target, salt_molar_mass);

  Eigen::VectorXd v;
  // Fast path: square, well-conditioned system solves exactly.
  bool solved = false;
  if (n == 4) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const double cond = svd.singularValues()(0) /
                        std::max(svd.singularValues()(3), 1e-300);
    if (cond < 1e8) {
      Eigen::VectorXd cand = A.partialPivLu().solve(b);
      if ((cand.array() >= -1e-9).all()) {
        v = cand.cwiseMax(0.0);
        solved = true;
      }
    }
  }
  if (!solved) {
    auto res = nnls(A, b);
    v = res.x;
  }

  const double residual = (A * v - b).norm() / total_mass_g;
  if (!(residual <= kDoseResidualTol)) {
    std::ostringstream os;
    os << "target outside feeder conical hull (relative residual " << residual
       << ")";
    throw InfeasibleDoseError(os.str());
  }

  DosePlan plan;
  plan.total_mass_g = total_mass_g;
  plan.residual = residual;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& f = feeders[static_cast<std::size_t>(j)];
    const double vol = v(j);
    if (vol > f.inventory_ml + 1e-9)
      throw InventoryError("insufficient inventory in feeder " + f.id);
    plan.volumes_ml[f.id] = vol;
  }
  return plan;
}

}  // namespace elab
