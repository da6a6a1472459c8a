#pragma once

#include <span>
#include <vector>

#include "elab/types.hpp"

namespace elab {

/// Mixing-rule constants. These are config values; only the functional form
/// of estimate_density is contractual.
struct DensityModel {
  double ec_density_g_ml = 1.321;   // at reference temperature
  double dmc_density_g_ml = 1.069;
  double emc_density_g_ml = 1.006;
  double ref_temp_c = 25.0;
  double temp_slope_g_ml_per_c = 0.001;  // pure-solvent density drop per degC
  double salt_molar_mass_kg_mol = 0.15191;
  double salt_apparent_volume_ml_mol = 45.0;
};

/// Salt mass fraction of an electrolyte: m*M / (1 + m*M).
double salt_mass_fraction(double molality, double salt_molar_mass_kg_mol);

Electrolyte axes_to_electrolyte(const DesignAxes& a,
                                const AxisBounds& bounds = AxisBounds{});

DesignAxes electrolyte_to_axes(const Electrolyte& e);

DomainGrid enumerate_grid(const AxisBounds& bounds, int ec_levels,
                          int ratio_levels, int molality_levels);

/// Ideal volume-fraction mixing over pure-solvent densities plus a constant
/// apparent molar volume for the dissolved salt.
double estimate_density(const Electrolyte& e, double temp_c,
                        const DensityModel& model = DensityModel{});

/// Solves the 4-species (EC, DMC, EMC, salt) mass balance for feeder volumes
/// hitting `target` at `total_mass_g`, minimising the squared residual
/// subject to non-negative volumes. Throws InfeasibleDoseError if the target
/// lies outside the conical hull of the feeder compositions (relative
/// residual > 1e-6) and InventoryError if a required volume exceeds a
/// feeder's remaining inventory.
DosePlan plan_dose(const Electrolyte& target, double total_mass_g,
                   std::span<const FeederSolution> feeders);

}  // namespace elab
