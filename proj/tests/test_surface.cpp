#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "doctest.h"
#include "elab/composition.hpp"
#include "elab/surface.hpp"

using namespace elab;

namespace {

DomainGrid default_grid() {
  AxisBounds b;
  b.molality = AxisRange{0.0, 1.8};
  return enumerate_grid(b, 11, 11, 11);
}

SurfaceParams calibrated() {
  static const SurfaceParams p =
      calibrate_surface(default_anchor_set()).params;
  return p;
}

}  // namespace

TEST_CASE("calibrated surface hits the published optimum and anchors") {
  const SurfaceParams p = calibrated();
  const Electrolyte peak{SolventBlend{0.40, 0.60, 0.0}, 0.9};
  CHECK(true_conductivity(peak, 27.0, p) == doctest::Approx(13.7).epsilon(0.2 / 13.7));

  // Blend table within +/- 1.0 mS/cm each.
  for (const ConductivityAnchor& a : default_anchor_set()) {
    const double fit = true_conductivity(a.electrolyte, 27.0, p);
    CHECK(std::abs(fit - a.conductivity_ms_cm) <= a.tolerance);
  }

  // Baseline blend lands close to its published value.
  const Electrolyte baseline{SolventBlend{0.30, 0.0, 0.70}, 1.1};
  CHECK(true_conductivity(baseline, 27.0, p) ==
        doctest::Approx(9.8).epsilon(1.0 / 9.8));
}

TEST_CASE("salt-free samples do not conduct") {
  const SurfaceParams p = calibrated();
  for (double ec : {0.30, 0.40, 0.50})
    for (double ratio : {0.0, 0.5, 1.0}) {
      const Electrolyte e = axes_to_electrolyte(DesignAxes{ec, ratio, 0.0});
      CHECK(true_conductivity(e, 27.0, p) == 0.0);
    }
}

TEST_CASE("grid argmax sits exactly at the published optimum") {
  const SurfaceParams p = calibrated();
  const DomainGrid g = default_grid();
  std::size_t argmax = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k =
        true_conductivity(axes_to_electrolyte(g.points[i], g.bounds), 27.0, p);
    CHECK(k >= 0.0);
    if (k > best) {
      best = k;
      argmax = i;
    }
  }
  const DesignAxes& at = g.points[argmax];
  CHECK(at.ec_frac == doctest::Approx(0.40).epsilon(1e-9));
  CHECK(at.dmc_ratio == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(at.molality == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("exactly one interior maximum in molality for fixed blends") {
  const SurfaceParams p = calibrated();
  for (double ec : {0.30, 0.36, 0.40, 0.44, 0.50}) {
    for (double ratio : {0.0, 0.3, 0.7, 1.0}) {
      // Finite differences at 0.01 mol/kg: the sign of the increment must
      // flip exactly once over (0, 2].
      int flips = 0;
      int last_sign = 0;
      for (int i = 1; i < 200; ++i) {
        const double m = i * 0.01;
        const Electrolyte lo = axes_to_electrolyte(DesignAxes{ec, ratio, m});
        const Electrolyte hi = axes_to_electrolyte(
            DesignAxes{ec, ratio, std::min(2.0, m + 0.01)});
        const double d =
            true_conductivity(hi, 27.0, p) - true_conductivity(lo, 27.0, p);
        const int sign = d > 0 ? 1 : (d < 0 ? -1 : 0);
        if (sign != 0) {
          if (last_sign != 0 && sign != last_sign) ++flips;
          last_sign = sign;
        }
      }
      CHECK(flips == 1);
    }
  }
}

TEST_CASE("temperature coefficient scales the surface linearly") {
  const SurfaceParams p = calibrated();
  const Electrolyte e{SolventBlend{0.40, 0.60, 0.0}, 0.9};
  const double at27 = true_conductivity(e, 27.0, p);
  const double at28 = true_conductivity(e, 28.0, p);
  const double at26 = true_conductivity(e, 26.0, p);
  CHECK(at28 / at27 == doctest::Approx(1.0 + p.temp_coeff_per_c).epsilon(1e-12));
  CHECK(at26 / at27 == doctest::Approx(1.0 - p.temp_coeff_per_c).epsilon(1e-12));
  CHECK_THROWS_AS(true_conductivity(e, 50.0, p), DomainError);
}

TEST_CASE("single-blend anchors cannot identify the blend dependence") {
  std::vector<ConductivityAnchor> anchors;
  for (double m : {0.4, 0.8, 1.2, 1.6}) {
    ConductivityAnchor a;
    a.electrolyte = Electrolyte{SolventBlend{0.40, 0.60, 0.0}, m};
    a.conductivity_ms_cm = 10.0;
    anchors.push_back(a);
  }
  CHECK_THROWS_AS(calibrate_surface(anchors), CalibrationError);
}

TEST_CASE("refit recovers a known surface at the anchors within 1e-6") {
  SurfaceParams truth;
  truth.peak_base = 10.5;
  truth.ec_curvature = -70.0;
  truth.ratio_gain = 3.1;
  truth.shape_a = 0.45;
  truth.shape_b = 0.12;

  std::vector<ConductivityAnchor> anchors;
  for (double ec : {0.30, 0.35, 0.40, 0.45, 0.50})
    for (double ratio : {0.0, 0.5, 1.0})
      for (double m : {0.3, 0.72, 0.9, 1.26, 1.7}) {
        ConductivityAnchor a;
        a.electrolyte = axes_to_electrolyte(DesignAxes{ec, ratio, m});
        a.conductivity_ms_cm = true_conductivity(a.electrolyte, 27.0, truth);
        a.tolerance = 0.5;
        anchors.push_back(a);
      }

  const SurfaceParams fit = calibrate_surface(anchors).params;
  for (const auto& a : anchors) {
    CHECK(true_conductivity(a.electrolyte, 27.0, fit) ==
          doctest::Approx(a.conductivity_ms_cm).epsilon(1e-6));
  }
}

TEST_CASE("anchor CSV loader round-trips the default table") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "elab-anchors.csv";
  {
    std::ofstream out(path);
    out << "w_ec,w_dmc,w_emc,molality,conductivity_ms_cm,weight,tolerance\n";
    for (const auto& a : default_anchor_set()) {
      out << a.electrolyte.blend.w_ec << "," << a.electrolyte.blend.w_dmc << ","
          << a.electrolyte.blend.w_emc << "," << a.electrolyte.molality << ","
          << a.conductivity_ms_cm << "," << a.weight << "," << a.tolerance
          << "\n";
    }
  }
  const auto loaded = load_anchors_csv(path.string());
  const auto expected = default_anchor_set();
  REQUIRE(loaded.size() == expected.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].electrolyte.blend.w_ec ==
          doctest::Approx(expected[i].electrolyte.blend.w_ec));
    CHECK(loaded[i].conductivity_ms_cm ==
          doctest::Approx(expected[i].conductivity_ms_cm));
    CHECK(loaded[i].weight == doctest::Approx(expected[i].weight));
    CHECK(loaded[i].tolerance == doctest::Approx(expected[i].tolerance));
  }
  // Calibration from the loaded set matches calibration from the built-ins.
  const SurfaceParams from_csv = calibrate_surface(loaded).params;
  const SurfaceParams builtin = calibrated();
  CHECK(from_csv.peak_base == doctest::Approx(builtin.peak_base).epsilon(1e-6));
  CHECK(from_csv.ratio_gain == doctest::Approx(builtin.ratio_gain).epsilon(1e-6));

  CHECK_THROWS_AS(load_anchors_csv("/nonexistent/anchors.csv"), ConfigError);
}

TEST_CASE("calibration reports residuals when anchors cannot be met") {
  auto anchors = default_anchor_set();
  anchors[0].conductivity_ms_cm = 25.0;  // unreachable given the others
  anchors[0].tolerance = 0.5;
  CHECK_THROWS_AS(calibrate_surface(anchors), CalibrationError);
}
