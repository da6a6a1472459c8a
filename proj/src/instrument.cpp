#include "elab/instrument.hpp"

#include <algorithm>
#include <cmath>

namespace elab {

namespace {

constexpr double kFreqLoHz = 14e3;
constexpr double kFreqHiHz = 800e3;
constexpr double kOpenCircuitKappa = 1e-9;  // mS/cm below which the cell reads open

// Resistance in ohms for a conductivity in mS/cm and cell constant in 1/cm.
double solution_resistance_ohm(double kappa_ms_cm, double cc_per_cm) {
  return 1000.0 * cc_per_cm / kappa_ms_cm;
}

}  // namespace

double LabConfig::run_noise_sigma() const {
  // For runs kappa*exp(sigma*Z), E|r2 - r3| / mean = 2*sigma/sqrt(pi) to
  // first order, so sigma = target * sqrt(pi) / 2.
  return run_mad_fraction * std::sqrt(M_PI) / 2.0;
}

LabConfig LabConfig::with_default_feeders() {
  LabConfig cfg;
  // Feeder stocks may exceed the sample-domain molality cap; they are never
  // validated as samples.
  auto feeder = [&cfg](std::string id, double w_ec, double w_dmc, double w_emc,
                       double molality, double inventory_ml) {
    FeederSolution f;
    f.id = std::move(id);
    f.composition = Electrolyte{SolventBlend{w_ec, w_dmc, w_emc}, molality};
    f.density_g_ml = 0.0;
    f.inventory_ml = inventory_ml;
    cfg.feeders.push_back(std::move(f));
  };
  feeder("EC", 1.0, 0.0, 0.0, 0.0, 400.0);
  feeder("DMC", 0.0, 1.0, 0.0, 0.0, 400.0);
  feeder("EMC", 0.0, 0.0, 1.0, 0.0, 400.0);
  feeder("EC-4m", 1.0, 0.0, 0.0, 4.0, 400.0);
  feeder("DMC-4m", 0.0, 1.0, 0.0, 4.0, 400.0);
  feeder("EMC-4m", 0.0, 0.0, 1.0, 4.0, 400.0);
  return cfg;
}

LabState::LabState(LabConfig cfg) : config(std::move(cfg)) {
  if (config.feeders.empty())
    config.feeders = LabConfig::with_default_feeders().feeders;
  feeders = config.feeders;
  for (auto& f : feeders) {
    if (f.density_g_ml <= 0.0) {
      // A-priori density estimate for stocks lacking a measured value.
      Electrolyte c = f.composition;
      const double m = c.molality;
      c.molality = 0.0;
      double rho = estimate_density(c, config.density.ref_temp_c, config.density);
      if (m > 0.0) {
        const double mass_g = 1000.0 * (1.0 + m * config.density.salt_molar_mass_kg_mol);
        const double vol_ml = 1000.0 / rho + m * config.density.salt_apparent_volume_ml_mol;
        rho = mass_g / vol_ml;
      }
      f.density_g_ml = rho;
    }
  }
  residual_line_ms_cm = config.rinse_residual_ms_cm;
  calibrate_cell_constant(config.calibration_standard_ms_cm, *this);
}

ImpedanceSpectrum simulate_impedance(double kappa_true_ms_cm,
                                     const CellConstant& cc, Rng& rng,
                                     const LabConfig& cfg) {
  if (kappa_true_ms_cm <= kOpenCircuitKappa)
    throw InstrumentError("open circuit: sample resistance above measurable ceiling");

  const double r_s = solution_resistance_ohm(kappa_true_ms_cm, cc.value_per_cm);
  const double n = cfg.cpe_exponent;
  const double q = cfg.cpe_magnitude;
  const double ratio = std::pow(kFreqHiHz / kFreqLoHz, 0.25);

  ImpedanceSpectrum s;
  double f = kFreqLoHz;
  for (auto& pt : s.points) {
    const double omega = 2.0 * M_PI * f;
    const double mag = 1.0 / (q * std::pow(omega, n));
    double re = r_s + mag * std::cos(n * M_PI / 2.0);
    double im = -mag * std::sin(n * M_PI / 2.0);
    if (cfg.impedance_noise_rel > 0.0) {
      re *= 1.0 + cfg.impedance_noise_rel * rng.normal();
      im *= 1.0 + cfg.impedance_noise_rel * rng.normal();
    }
    pt.frequency_hz = f;
    pt.real_ohm = re;
    pt.imag_ohm = im;
    pt.phase_rad = std::atan2(im, re);
    f *= ratio;
  }
  s.points.back().frequency_hz = kFreqHiHz;  // land the endpoint exactly
  return s;
}

double extract_conductivity(const ImpedanceSpectrum& s, const CellConstant& cc) {
  const ImpedancePoint* best = nullptr;
  for (const auto& pt : s.points) {
    if (!best || std::abs(pt.phase_rad) < std::abs(best->phase_rad)) best = &pt;
  }
  if (std::abs(best->phase_rad) > M_PI / 4.0)
    throw InstrumentError("unreliable spectrum: no near-resistive frequency");
  if (best->real_ohm <= 0.0)
    throw InstrumentError("unreliable spectrum: non-positive resistance");
  return 1000.0 * cc.value_per_cm / best->real_ohm;
}

CellConstant calibrate_cell_constant(double standard_ms_cm, LabState& state) {
  if (standard_ms_cm <= 0.0)
    throw DomainError("calibration standard conductivity must be positive");
  Rng rng(mix_seed(state.config.seed, "cell-constant"));

  // Measure the standard against the physical cell, then set the constant so
  // extraction reproduces the standard's known conductivity.
  CellConstant physical{state.config.physical_cell_constant_per_cm, standard_ms_cm};
  const ImpedanceSpectrum s =
      simulate_impedance(standard_ms_cm, physical, rng, state.config);
  const ImpedancePoint* best = &s.points[0];
  for (const auto& pt : s.points)
    if (std::abs(pt.phase_rad) < std::abs(best->phase_rad)) best = &pt;

  CellConstant cc;
  cc.standard_ms_cm = standard_ms_cm;
  cc.value_per_cm = standard_ms_cm * best->real_ohm / 1000.0;
  state.cell_constant = cc;
  return cc;
}

MeasurementRecord run_measurement(const Electrolyte& e, LabState& state) {
  e.validate();
  auto& cfg = state.config;
  const std::uint64_t experiment_index = state.experiments_started++;
  Rng rng(mix_seed(mix_seed(cfg.seed, "measurement"), experiment_index));

  // Dose first; failures must not consume time or inventory.
  const DosePlan plan = plan_dose(e, cfg.sample_mass_g, state.feeders);
  for (auto& f : state.feeders) {
    auto it = plan.volumes_ml.find(f.id);
    if (it != plan.volumes_ml.end()) f.inventory_ml -= it->second;
  }

  MeasurementRecord rec;
  rec.electrolyte = e;
  rec.started_s = state.clock_s;
  rec.temperature_c = rng.uniform(cfg.temp_lo_c, cfg.temp_hi_c);
  rec.density_g_ml = estimate_density(e, rec.temperature_c, cfg.density);

  const double kappa = true_conductivity(e, rec.temperature_c, cfg.surface);
  const double sigma = cfg.run_noise_sigma();
  const int replicates = std::max(2, cfg.replicates);

  for (int run = 0; run < replicates; ++run) {
    double value = kappa;
    if (sigma > 0.0)
      value *= std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
    if (run == 0) {
      value = (1.0 - cfg.contamination_fraction) * value +
              cfg.contamination_fraction * state.residual_line_ms_cm;
    }
    // Route the run through the impedance pipeline unless the cell reads open.
    if (value > kOpenCircuitKappa) {
      const ImpedanceSpectrum s =
          simulate_impedance(value, state.cell_constant, rng, cfg);
      value = extract_conductivity(s, state.cell_constant);
    } else {
      value = 0.0;
    }
    rec.runs_ms_cm.push_back(value);
  }

  double sum = 0.0;
  for (std::size_t i = 1; i < rec.runs_ms_cm.size(); ++i) sum += rec.runs_ms_cm[i];
  rec.reported_ms_cm = sum / static_cast<double>(rec.runs_ms_cm.size() - 1);

  state.residual_line_ms_cm = kappa;
  state.clock_s += cfg.dose_s + replicates * cfg.run_s;
  rec.finished_s = state.clock_s;
  return rec;
}

void rinse(LabState& state) {
  state.residual_line_ms_cm = state.config.rinse_residual_ms_cm;
  state.clock_s += state.config.rinse_s;
}

}  // namespace elab
