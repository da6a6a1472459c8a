#include "elab/analytics.hpp"

#include <cmath>
#include <sstream>

#include "elab/types.hpp"
#include "json.hpp"

namespace elab {

TimeEfficiency time_efficiency(int experiments, const HumanModel& human,
                               const RobotModel& robot) {
  if (experiments < 0) throw DomainError("experiment count must be >= 0");
  if (human.hours_per_day <= 0.0 || human.minutes_per_experiment <= 0.0 ||
      robot.hours_per_day <= 0.0 || robot.minutes_per_experiment <= 0.0)
    throw DomainError("model rates must be positive");
  TimeEfficiency t;
  t.human_days = human.work_days(experiments);
  t.robot_days = robot.work_days(experiments);
  t.human_days_ceil = std::ceil(t.human_days);
  t.robot_days_ceil = std::ceil(t.robot_days);
  t.ratio = t.robot_days > 0.0 ? t.human_days / t.robot_days
                               : human.minutes_per_experiment * robot.hours_per_day /
                                     (robot.minutes_per_experiment * human.hours_per_day);
  return t;
}

std::int64_t factorial_count(int levels, int factors) {
  if (levels < 1 || factors < 1)
    throw DomainError("factorial levels and factors must be >= 1");
  std::int64_t count = 1;
  for (int i = 0; i < factors; ++i) count *= levels;
  return count;
}

double sample_efficiency(int ml_doe_count, int factorial_levels, int factors) {
  if (ml_doe_count < 1) throw DomainError("ML DOE count must be >= 1");
  return static_cast<double>(factorial_count(factorial_levels, factors)) /
         static_cast<double>(ml_doe_count);
}

double overall_speedup(const HumanModel& human, const RobotModel& robot,
                       int factorial_levels, int factors, int ml_doe_count) {
  const double human_days =
      human.work_days(static_cast<double>(factorial_count(factorial_levels, factors)));
  const double robot_days = robot.work_days(ml_doe_count);
  if (robot_days <= 0.0) throw DomainError("robot work must take positive time");
  return human_days / robot_days;
}

EfficiencyReport efficiency_report(const HumanModel& human, const RobotModel& robot,
                                   int experiments, int factorial_levels,
                                   int factors, int ml_doe_count) {
  EfficiencyReport r;
  r.experiments = experiments;
  r.time = time_efficiency(experiments, human, robot);
  r.factorial_levels = factorial_levels;
  r.factorial_factors = factors;
  r.factorial_count = factorial_count(factorial_levels, factors);
  r.ml_doe_count = ml_doe_count;
  r.sample_ratio = sample_efficiency(ml_doe_count, factorial_levels, factors);
  r.overall_speedup =
      overall_speedup(human, robot, factorial_levels, factors, ml_doe_count);
  return r;
}

std::string to_json(const EfficiencyReport& r) {
  nlohmann::ordered_json j{
      {"experiments", r.experiments},
      {"time", nlohmann::ordered_json{{"human_days", r.time.human_days},
                                      {"robot_days", r.time.robot_days},
                                      {"human_days_ceil", r.time.human_days_ceil},
                                      {"robot_days_ceil", r.time.robot_days_ceil},
                                      {"ratio", r.time.ratio}}},
      {"factorial",
       nlohmann::ordered_json{{"levels", r.factorial_levels},
                              {"factors", r.factorial_factors},
                              {"count", r.factorial_count}}},
      {"ml_doe_count", r.ml_doe_count},
      {"sample_ratio", r.sample_ratio},
      {"overall_speedup", r.overall_speedup}};
  return j.dump(2);
}

std::string to_table(const EfficiencyReport& r) {
  std::ostringstream os;
  char buf[160];
  os << "efficiency report\n";
  std::snprintf(buf, sizeof(buf), "  experiments          %d\n", r.experiments);
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "  human work-days      %.2f (ceil %.0f)\n", r.time.human_days,
                r.time.human_days_ceil);
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "  robot work-days      %.2f (ceil %.0f)\n", r.time.robot_days,
                r.time.robot_days_ceil);
  os << buf;
  std::snprintf(buf, sizeof(buf), "  time ratio           %.2fx\n", r.time.ratio);
  os << buf;
  std::snprintf(buf, sizeof(buf), "  factorial            %d^%d = %lld samples\n",
                r.factorial_levels, r.factorial_factors,
                static_cast<long long>(r.factorial_count));
  os << buf;
  std::snprintf(buf, sizeof(buf), "  ML DOE               %d samples\n",
                r.ml_doe_count);
  os << buf;
  std::snprintf(buf, sizeof(buf), "  sample ratio         %.2fx\n", r.sample_ratio);
  os << buf;
  std::snprintf(buf, sizeof(buf), "  overall speed-up     %.2fx\n",
                r.overall_speedup);
  os << buf;
  return os.str();
}

}  // namespace elab
