#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace elab {

// ---------------------------------------------------------------------------
// Error hierarchy. Protocol-visible failures (dose infeasibility, inventory)
// carry distinct types so the instrument service can map them to statuses.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

struct InfeasibleDoseError : Error {
  using Error::Error;
};

struct InventoryError : Error {
  using Error::Error;
};

struct CalibrationError : Error {
  using Error::Error;
};

struct FitError : Error {
  using Error::Error;
};

struct InstrumentError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct TransportError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Composition domain types.
// ---------------------------------------------------------------------------

/// Ternary carbonate solvent blend in mass fractions. Components must be
/// non-negative and sum to 1 within 1e-9.
struct SolventBlend {
  double w_ec = 0.0;
  double w_dmc = 0.0;
  double w_emc = 0.0;

  void validate() const;
  bool operator==(const SolventBlend&) const = default;
};

/// Full physical sample identity: solvent blend plus salt molality
/// (mol salt per kg solvent), molality limited to [0, 2].
struct Electrolyte {
  SolventBlend blend;
  double molality = 0.0;

  void validate() const;
  bool operator==(const Electrolyte&) const = default;
};

/// The planner's 3-coordinate view of the design space:
/// EC mass fraction, DMC co-solvent ratio w_dmc/(1-w_ec), and molality.
struct DesignAxes {
  double ec_frac = 0.0;
  double dmc_ratio = 0.0;
  double molality = 0.0;

  bool operator==(const DesignAxes&) const = default;
};

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Domain-level axis limits. The grid used by a campaign may span any
/// sub-range of these.
struct AxisBounds {
  AxisRange ec_frac{0.30, 0.50};
  AxisRange dmc_ratio{0.0, 1.0};
  AxisRange molality{0.0, 2.0};
};

/// Equally spaced levels per axis, endpoints included; points enumerated in
/// lexicographic order (ec slowest, molality fastest).
struct DomainGrid {
  AxisBounds bounds;
  int ec_levels = 0;
  int ratio_levels = 0;
  int molality_levels = 0;
  std::vector<double> ec_values;
  std::vector<double> ratio_values;
  std::vector<double> molality_values;
  std::vector<DesignAxes> points;

  std::size_t size() const { return points.size(); }
  std::size_t flat_index(int i_ec, int i_ratio, int i_mol) const {
    return (static_cast<std::size_t>(i_ec) * ratio_levels + i_ratio) *
               molality_levels +
           i_mol;
  }
};

/// Pre-mixed stock solution the virtual pumps dose from.
struct FeederSolution {
  std::string id;
  Electrolyte composition;
  double density_g_ml = 0.0;
  double inventory_ml = 0.0;
};

/// Result of the dosing solver: volume drawn from each feeder and the
/// relative mass-balance error of the solution found.
struct DosePlan {
  std::map<std::string, double> volumes_ml;
  double total_mass_g = 0.0;
  double residual = 0.0;
};

}  // namespace elab
