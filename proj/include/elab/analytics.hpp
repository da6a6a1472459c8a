#pragma once

#include <cstdint>
#include <string>

namespace elab {

struct HumanModel {
  double hours_per_day = 8.0;
  double minutes_per_experiment = 28.8;  // 1000 sequential runs in 60 work-days

  double work_days(double experiments) const {
    return experiments * minutes_per_experiment / (hours_per_day * 60.0);
  }
};

struct RobotModel {
  double hours_per_day = 24.0;
  double minutes_per_experiment = 80.0;  // per triplicate, wall-clock budget

  double work_days(double experiments) const {
    return experiments * minutes_per_experiment / (hours_per_day * 60.0);
  }
};

struct TimeEfficiency {
  double human_days = 0.0;
  double robot_days = 0.0;
  double human_days_ceil = 0.0;
  double robot_days_ceil = 0.0;
  double ratio = 0.0;  // human / robot, raw days
};

struct EfficiencyReport {
  int experiments = 0;
  TimeEfficiency time;
  int factorial_levels = 0;
  int factorial_factors = 0;
  std::int64_t factorial_count = 0;
  int ml_doe_count = 0;
  double sample_ratio = 0.0;
  double overall_speedup = 0.0;
};

TimeEfficiency time_efficiency(int experiments, const HumanModel& human,
                               const RobotModel& robot);

/// Exact integer levels^factors over the adaptive DOE's sample count.
double sample_efficiency(int ml_doe_count, int factorial_levels, int factors);

std::int64_t factorial_count(int levels, int factors);

/// Human work-days for the corrected factorial divided by robot work-days
/// for the ML design.
double overall_speedup(const HumanModel& human, const RobotModel& robot,
                       int factorial_levels, int factors, int ml_doe_count);

EfficiencyReport efficiency_report(const HumanModel& human, const RobotModel& robot,
                                   int experiments, int factorial_levels,
                                   int factors, int ml_doe_count);

std::string to_json(const EfficiencyReport& r);
std::string to_table(const EfficiencyReport& r);

}  // namespace elab
