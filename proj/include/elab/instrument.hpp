#pragma once

#include <array>
#include <optional>
#include <vector>

#include "elab/composition.hpp"
#include "elab/rng.hpp"
#include "elab/surface.hpp"
#include "elab/types.hpp"

namespace elab {

/// Five (frequency, complex impedance) samples, frequencies strictly
/// increasing within [14 kHz, 800 kHz].
struct ImpedancePoint {
  double frequency_hz = 0.0;
  double real_ohm = 0.0;
  double imag_ohm = 0.0;
  double phase_rad = 0.0;
};

struct ImpedanceSpectrum {
  std::array<ImpedancePoint, 5> points;
};

struct CellConstant {
  double value_per_cm = 1.0;
  double standard_ms_cm = 0.0;  // conductivity of the calibration standard
};

/// One triplicate evaluation. The first run absorbs line contamination and is
/// excluded from the reported value, which is the mean of the remaining runs.
struct MeasurementRecord {
  Electrolyte electrolyte;
  std::vector<double> runs_ms_cm;  // size = replicates, default 3
  double reported_ms_cm = 0.0;
  double temperature_c = 0.0;
  double density_g_ml = 0.0;
  double started_s = 0.0;  // simulated clock
  double finished_s = 0.0;
};

struct LabConfig {
  SurfaceParams surface;
  DensityModel density;
  std::vector<FeederSolution> feeders;

  double sample_mass_g = 10.0;
  double contamination_fraction = 0.08;  // lambda
  // Log-normal run noise sized so E|run2-run3| / mean = target MAD.
  double run_mad_fraction = 0.013;
  double impedance_noise_rel = 0.0;
  double temp_lo_c = 26.0;
  double temp_hi_c = 28.0;

  double rinse_residual_ms_cm = 0.0;      // neat acetonitrile
  double calibration_standard_ms_cm = 12.39;
  double physical_cell_constant_per_cm = 1.0;

  double dose_s = 360.0;
  double run_s = 480.0;   // per replicate
  double rinse_s = 240.0;

  // Constant-phase electrode-polarisation element in series with the
  // solution resistance; values keep the min-phase point inside the band.
  double cpe_magnitude = 2e-5;
  double cpe_exponent = 0.85;

  int replicates = 3;
  std::uint64_t seed = 1;

  double run_noise_sigma() const;  // log-space sigma from run_mad_fraction

  static LabConfig with_default_feeders();
};

/// Serialized instrument state. One measurement or rinse is in flight at a
/// time; the protocol layer enforces the queueing.
struct LabState {
  LabConfig config;
  std::vector<FeederSolution> feeders;  // live inventories
  double residual_line_ms_cm = 0.0;
  CellConstant cell_constant;
  double clock_s = 0.0;
  std::uint64_t experiments_started = 0;

  explicit LabState(LabConfig cfg);
};

ImpedanceSpectrum simulate_impedance(double kappa_true_ms_cm,
                                     const CellConstant& cc, Rng& rng,
                                     const LabConfig& cfg = LabConfig{});

double extract_conductivity(const ImpedanceSpectrum& s, const CellConstant& cc);

CellConstant calibrate_cell_constant(double standard_ms_cm, LabState& state);

/// Doses the sample, runs the replicate protocol, updates inventory, the
/// residual line and the clock. Throws InfeasibleDoseError / InventoryError
/// from the dosing stage.
MeasurementRecord run_measurement(const Electrolyte& e, LabState& state);

void rinse(LabState& state);

}  // namespace elab
