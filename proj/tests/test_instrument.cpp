#include <cmath>
#include <numeric>

#include "doctest.h"
#include "elab/instrument.hpp"
#include "elab/surface.hpp"

using namespace elab;

namespace {

LabConfig test_lab() {
  LabConfig cfg = LabConfig::with_default_feeders();
  cfg.surface = calibrate_surface(default_anchor_set()).params;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("impedance spectrum shape: five ascending in-band frequencies") {
  Rng rng(1);
  CellConstant cc{1.0, 12.39};
  const ImpedanceSpectrum s = simulate_impedance(12.39, cc, rng);
  double prev = 0.0;
  for (const auto& pt : s.points) {
    CHECK(pt.frequency_hz >= 14e3);
    CHECK(pt.frequency_hz <= 800e3);
    CHECK(pt.frequency_hz > prev);
    prev = pt.frequency_hz;
  }
  CHECK(s.points.front().frequency_hz == doctest::Approx(14e3));
  CHECK(s.points.back().frequency_hz == doctest::Approx(800e3));
}

TEST_CASE("min-phase real part reads the solution resistance within 0.5%") {
  Rng rng(1);
  CellConstant cc{1.0, 12.39};
  const ImpedanceSpectrum s = simulate_impedance(12.39, cc, rng);
  const ImpedancePoint* best = &s.points[0];
  for (const auto& pt : s.points)
    if (std::abs(pt.phase_rad) < std::abs(best->phase_rad)) best = &pt;
  const double r_expected = 1000.0 / 12.39;  // ohms at cc = 1/cm
  CHECK(std::abs(best->real_ohm - r_expected) / r_expected <= 0.005);

  // Doubling the cell constant doubles the extracted resistance.
  CellConstant cc2{2.0, 12.39};
  const ImpedanceSpectrum s2 = simulate_impedance(12.39, cc2, rng);
  const ImpedancePoint* best2 = &s2.points[0];
  for (const auto& pt : s2.points)
    if (std::abs(pt.phase_rad) < std::abs(best2->phase_rad)) best2 = &pt;
  CHECK(best2->real_ohm / best->real_ohm == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("extraction: direct value, round trip, failure modes") {
  // A spectrum with one zero-phase point at 100 ohms reads 10 mS/cm.
  ImpedanceSpectrum s;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    s.points[i].frequency_hz = 20e3 * (i + 1);
    s.points[i].real_ohm = 120.0;
    s.points[i].imag_ohm = -50.0;
    s.points[i].phase_rad = -0.4;
  }
  s.points[3].real_ohm = 100.0;
  s.points[3].imag_ohm = 0.0;
  s.points[3].phase_rad = 0.0;
  CHECK(extract_conductivity(s, CellConstant{1.0, 0.0}) == doctest::Approx(10.0));

  // Noise-free simulate -> extract round trip across the working range.
  Rng rng(7);
  CellConstant cc{1.0, 12.39};
  for (double kappa = 1.0; kappa <= 20.0; kappa += 0.25) {
    const double back =
        extract_conductivity(simulate_impedance(kappa, cc, rng), cc);
    CHECK(std::abs(back - kappa) / kappa <= 0.005);
  }

  // Monotonicity: larger min-phase resistance means smaller conductivity.
  ImpedanceSpectrum hi = s;
  hi.points[3].real_ohm = 200.0;
  CHECK(extract_conductivity(hi, CellConstant{1.0, 0.0}) <
        extract_conductivity(s, CellConstant{1.0, 0.0}));

  // All phases above pi/4: unreliable.
  ImpedanceSpectrum bad = s;
  for (auto& pt : bad.points) pt.phase_rad = -1.0;
  CHECK_THROWS_AS(extract_conductivity(bad, CellConstant{1.0, 0.0}),
                  InstrumentError);

  // Open circuit at zero conductivity.
  CHECK_THROWS_AS(simulate_impedance(0.0, cc, rng), InstrumentError);
}

TEST_CASE("cell-constant calibration closes the loop on the standard") {
  LabConfig cfg = test_lab();
  LabState state(cfg);
  CHECK(state.cell_constant.value_per_cm > 0.0);

  // Extraction of the standard with the calibrated constant returns it.
  Rng rng(3);
  const ImpedanceSpectrum s = simulate_impedance(
      12.39, CellConstant{cfg.physical_cell_constant_per_cm, 12.39}, rng, cfg);
  CHECK(extract_conductivity(s, state.cell_constant) ==
        doctest::Approx(12.39).epsilon(1e-9));

  // Same seed, same constant.
  LabState state2(cfg);
  CHECK(state2.cell_constant.value_per_cm ==
        doctest::Approx(state.cell_constant.value_per_cm).epsilon(1e-15));
}

TEST_CASE("noise-free triplicate reproduces the true surface") {
  LabConfig cfg = test_lab();
  cfg.run_mad_fraction = 0.0;
  cfg.contamination_fraction = 0.0;
  cfg.temp_lo_c = cfg.temp_hi_c = 27.0;
  LabState state(cfg);

  const Electrolyte e{SolventBlend{0.40, 0.60, 0.0}, 0.9};
  const MeasurementRecord rec = run_measurement(e, state);
  const double truth = true_conductivity(e, 27.0, cfg.surface);
  REQUIRE(rec.runs_ms_cm.size() == 3);
  for (double r : rec.runs_ms_cm)
    CHECK(r == doctest::Approx(truth).epsilon(5e-4));  // impedance path bias
  CHECK(rec.reported_ms_cm ==
        doctest::Approx((rec.runs_ms_cm[1] + rec.runs_ms_cm[2]) / 2.0)
            .epsilon(1e-15));
}

TEST_CASE("run 1 is biased low after a rinse; reported excludes it") {
  LabConfig cfg = test_lab();
  LabState state(cfg);
  rinse(state);
  CHECK(state.residual_line_ms_cm == cfg.rinse_residual_ms_cm);

  const Electrolyte e{SolventBlend{0.40, 0.60, 0.0}, 0.9};
  const MeasurementRecord rec = run_measurement(e, state);
  REQUIRE(rec.runs_ms_cm.size() == 3);
  // Contamination pulls run 1 well below the clean runs (8% vs 1.3% noise).
  CHECK(rec.runs_ms_cm[0] < 0.96 * rec.runs_ms_cm[1]);
  CHECK(rec.runs_ms_cm[0] < 0.96 * rec.runs_ms_cm[2]);
  CHECK(rec.reported_ms_cm ==
        doctest::Approx((rec.runs_ms_cm[1] + rec.runs_ms_cm[2]) / 2.0)
            .epsilon(1e-15));
  CHECK(rec.temperature_c >= 26.0);
  CHECK(rec.temperature_c <= 28.0);

  // The residual line now carries this sample, then the rinse clears it.
  CHECK(state.residual_line_ms_cm > 1.0);
  rinse(state);
  CHECK(state.residual_line_ms_cm == cfg.rinse_residual_ms_cm);
  rinse(state);
  CHECK(state.residual_line_ms_cm == cfg.rinse_residual_ms_cm);
}

TEST_CASE("contamination carries the previous sample when not rinsed") {
  LabConfig cfg = test_lab();
  cfg.run_mad_fraction = 0.0;
  cfg.temp_lo_c = cfg.temp_hi_c = 27.0;
  LabState state(cfg);

  const Electrolyte a{SolventBlend{0.40, 0.60, 0.0}, 0.9};   // high kappa
  const Electrolyte b{SolventBlend{0.30, 0.0, 0.70}, 0.2};   // low kappa
  run_measurement(a, state);
  const double kappa_a = true_conductivity(a, 27.0, cfg.surface);

  // No rinse: B's first run is contaminated by A.
  const MeasurementRecord rec_b = run_measurement(b, state);
  const double kappa_b = true_conductivity(b, 27.0, cfg.surface);
  const double expected_run1 =
      (1.0 - cfg.contamination_fraction) * kappa_b +
      cfg.contamination_fraction * kappa_a;
  CHECK(rec_b.runs_ms_cm[0] == doctest::Approx(expected_run1).epsilon(5e-3));

  // With a rinse in between, run 1 is contaminated by the rinse value only.
  LabState state2(cfg);
  run_measurement(a, state2);
  rinse(state2);
  const MeasurementRecord rec_b2 = run_measurement(b, state2);
  CHECK(rec_b2.runs_ms_cm[0] ==
        doctest::Approx((1.0 - cfg.contamination_fraction) * kappa_b)
            .epsilon(5e-3));
}

TEST_CASE("repeatability: run2/run3 spread matches the instrument spec") {
  LabConfig cfg = test_lab();
  LabState state(cfg);

  // 120 triplicates across the sampled domain (salted points only).
  std::vector<double> errors;
  Rng pick(99);
  for (int i = 0; i < 120; ++i) {
    const DesignAxes a{pick.uniform(0.30, 0.50), pick.uniform(0.0, 1.0),
                       pick.uniform(0.2, 1.8)};
    const MeasurementRecord rec =
        run_measurement(axes_to_electrolyte(a), state);
    rinse(state);
    const double mean = (rec.runs_ms_cm[1] + rec.runs_ms_cm[2]) / 2.0;
    errors.push_back(std::abs(rec.runs_ms_cm[1] - rec.runs_ms_cm[2]) / mean);
  }
  const double mean_err =
      std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
  CHECK(mean_err > 0.009);
  CHECK(mean_err < 0.017);
  std::sort(errors.begin(), errors.end());
  CHECK(errors[113] <= 0.05);  // 95th percentile
}

TEST_CASE("measurements advance the clock and deplete inventory") {
  LabConfig cfg = test_lab();
  LabState state(cfg);
  const double inv0 = state.feeders[0].inventory_ml +
                      state.feeders[1].inventory_ml +
                      state.feeders[2].inventory_ml +
                      state.feeders[3].inventory_ml +
                      state.feeders[4].inventory_ml +
                      state.feeders[5].inventory_ml;

  const Electrolyte e{SolventBlend{0.40, 0.60, 0.0}, 0.9};
  const MeasurementRecord rec = run_measurement(e, state);
  CHECK(state.clock_s == doctest::Approx(cfg.dose_s + 3 * cfg.run_s));
  CHECK(rec.finished_s - rec.started_s ==
        doctest::Approx(cfg.dose_s + 3 * cfg.run_s));
  rinse(state);
  CHECK(state.clock_s == doctest::Approx(cfg.dose_s + 3 * cfg.run_s + cfg.rinse_s));

  double inv1 = 0.0;
  for (const auto& f : state.feeders) inv1 += f.inventory_ml;
  CHECK(inv1 < inv0);

  // Exhausting inventory yields the distinct error and leaves state intact.
  LabConfig tiny = cfg;
  for (auto& f : tiny.feeders) f.inventory_ml = 0.5;
  LabState starved(tiny);
  CHECK_THROWS_AS(run_measurement(e, starved), InventoryError);
  CHECK(starved.clock_s == 0.0);
}

TEST_CASE("identical seeds give identical measurement streams") {
  LabConfig cfg = test_lab();
  LabState s1(cfg), s2(cfg);
  for (int i = 0; i < 5; ++i) {
    const DesignAxes a{0.30 + 0.02 * i, 0.5, 0.9};
    const MeasurementRecord r1 = run_measurement(axes_to_electrolyte(a), s1);
    const MeasurementRecord r2 = run_measurement(axes_to_electrolyte(a), s2);
    rinse(s1);
    rinse(s2);
    REQUIRE(r1.runs_ms_cm.size() == r2.runs_ms_cm.size());
    for (std::size_t k = 0; k < r1.runs_ms_cm.size(); ++k)
      CHECK(r1.runs_ms_cm[k] == r2.runs_ms_cm[k]);
    CHECK(r1.reported_ms_cm == r2.reported_ms_cm);
    CHECK(r1.temperature_c == r2.temperature_c);
  }
}
