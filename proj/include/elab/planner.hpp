#pragma once

#include <optional>
#include <set>
#include <vector>

#include "elab/acquisition.hpp"
#include "elab/gp.hpp"
#include "elab/types.hpp"

namespace elab {

struct PlannerConfig {
  int init_count = 5;
  int random_period = 5;  // every Nth post-initialization step is random
  double ucb_beta = 2.0;
  std::vector<AcquisitionKind> cycle = {
      AcquisitionKind::kThompsonSampling, AcquisitionKind::kExpectedImprovement,
      AcquisitionKind::kTopTwoEI, AcquisitionKind::kUcb};
  std::uint64_t seed = 1;
  int budget = 40;

  // Each record reports its sample temperature; normalizing observations to
  // the reference temperature strips that variation from the surrogate's
  // training data. Disable to train on raw readings.
  bool temperature_correct = true;
  double temp_coeff_per_c = 0.02;
  double ref_temp_c = 27.0;

  double corrected(double y_ms_cm, double temperature_c) const {
    if (!temperature_correct) return y_ms_cm;
    return y_ms_cm / (1.0 + temp_coeff_per_c * (temperature_c - ref_temp_c));
  }

  void validate() const;
};

struct PlannedPoint {
  std::size_t grid_index = 0;
  DesignAxes axes;
  AcquisitionKind kind = AcquisitionKind::kRandom;
  std::optional<GpHyperparams> gp;  // present when a surrogate fit ran
};

/// Deterministic sequential experiment planner over a fixed grid. Each call
/// derives its randomness from (seed, step_index), so a planner rebuilt from
/// a log prefix continues identically.
class Planner {
 public:
  Planner(DomainGrid grid, PlannerConfig cfg);

  /// Chooses the next unmeasured grid point for 1-based `step_index`.
  /// Returns nullopt once the grid is exhausted.
  std::optional<PlannedPoint> next_point(int step_index);

  /// Records the measured objective for a previously planned point.
  void observe(std::size_t grid_index, double y_ms_cm);

  /// Excludes a point whose measurement failed; it is never proposed again
  /// and contributes no observation.
  void mark_failed(std::size_t grid_index);

  Eigen::Vector3d normalize(const DesignAxes& a) const;

  const DomainGrid& grid() const { return grid_; }
  const ObservationSet& observations() const { return obs_; }
  std::size_t remaining() const { return grid_.size() - excluded_.size(); }

  /// Acquisition kind the schedule dictates for a step (1-based), before the
  /// too-few-observations fallback is applied.
  AcquisitionKind scheduled_kind(int step_index) const;

 private:
  std::vector<std::size_t> unmeasured_indices() const;
  std::size_t lhs_pick(int step_index) const;

  DomainGrid grid_;
  PlannerConfig cfg_;
  ObservationSet obs_;
  std::set<std::size_t> excluded_;  // measured or failed
};

}  // namespace elab
