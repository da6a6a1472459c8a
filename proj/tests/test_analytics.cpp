#include <cmath>

#include "doctest.h"
#include "elab/analytics.hpp"
#include "elab/types.hpp"
#include "elab/rng.hpp"

using namespace elab;

TEST_CASE("time efficiency reproduces the published aggregates") {
  const HumanModel human;
  const RobotModel robot;

  // 1000 sequential experiments take a researcher about 60 work-days.
  const TimeEfficiency t1000 = time_efficiency(1000, human, robot);
  CHECK(t1000.human_days == doctest::Approx(60.0).epsilon(0.05));

  // 40 experiments take the autonomous loop about 2 work-days.
  const TimeEfficiency t40 = time_efficiency(40, human, robot);
  CHECK(t40.robot_days == doctest::Approx(2.0).epsilon(0.25));
  CHECK(t40.human_days > t40.robot_days);

  // Zero experiments, zero days.
  const TimeEfficiency t0 = time_efficiency(0, human, robot);
  CHECK(t0.human_days == 0.0);
  CHECK(t0.robot_days == 0.0);

  // Ceiled values are whole days.
  CHECK(t40.human_days_ceil == std::ceil(t40.human_days));
  CHECK(t40.robot_days_ceil == std::ceil(t40.robot_days));
}

TEST_CASE("sample efficiency is exact integer arithmetic over the DOE") {
  CHECK(factorial_count(5, 3) == 125);
  CHECK(factorial_count(10, 3) == 1000);
  CHECK(factorial_count(2, 10) == 1024);

  CHECK(sample_efficiency(42, 5, 3) == doctest::Approx(125.0 / 42.0));
  CHECK(sample_efficiency(42, 5, 3) > 2.9);
  CHECK(sample_efficiency(42, 5, 3) < 3.1);
  CHECK(sample_efficiency(42, 10, 3) == doctest::Approx(1000.0 / 42.0));
  CHECK(sample_efficiency(125, 5, 3) == doctest::Approx(1.0));
}

TEST_CASE("overall speed-up lands near the published 3x") {
  const HumanModel human;
  const RobotModel robot;
  const double factor = overall_speedup(human, robot, 5, 3, 42);
  CHECK(factor >= 2.5);
  CHECK(factor <= 3.5);

  // Identical models and equal counts give exactly 1.
  HumanModel same_h;
  RobotModel same_r;
  same_r.hours_per_day = same_h.hours_per_day;
  same_r.minutes_per_experiment = same_h.minutes_per_experiment;
  CHECK(overall_speedup(same_h, same_r, 5, 3, 125) == doctest::Approx(1.0));

  // Doubling robot throughput doubles the factor.
  RobotModel fast = robot;
  fast.minutes_per_experiment = robot.minutes_per_experiment / 2.0;
  CHECK(overall_speedup(human, fast, 5, 3, 42) == doctest::Approx(2.0 * factor));
}

TEST_CASE("overall speed-up factors into time and sample components") {
  Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    HumanModel h;
    h.hours_per_day = rng.uniform(4.0, 12.0);
    h.minutes_per_experiment = rng.uniform(10.0, 60.0);
    RobotModel r;
    r.hours_per_day = rng.uniform(12.0, 24.0);
    r.minutes_per_experiment = rng.uniform(20.0, 120.0);
    const int levels = 3 + static_cast<int>(rng.below(8));
    const int ml = 10 + static_cast<int>(rng.below(200));

    const double time_component = time_efficiency(40, h, r).ratio;
    const double sample_component = sample_efficiency(ml, levels, 3);
    const double overall = overall_speedup(h, r, levels, 3, ml);
    CHECK(overall ==
          doctest::Approx(time_component * sample_component).epsilon(1e-12));
  }
}

TEST_CASE("report generation is pure and carries every field") {
  const HumanModel human;
  const RobotModel robot;
  const EfficiencyReport a = efficiency_report(human, robot, 40, 5, 3, 42);
  const EfficiencyReport b = efficiency_report(human, robot, 40, 5, 3, 42);
  CHECK(to_json(a) == to_json(b));
  CHECK(to_table(a) == to_table(b));
  CHECK(a.factorial_count == 125);
  CHECK(a.sample_ratio > 0.0);
  CHECK(a.overall_speedup > 0.0);
  CHECK(to_json(a).find("overall_speedup") != std::string::npos);
}

TEST_CASE("degenerate models are rejected") {
  HumanModel h;
  h.hours_per_day = 0.0;
  CHECK_THROWS_AS(time_efficiency(10, h, RobotModel{}), DomainError);
  CHECK_THROWS_AS(time_efficiency(-1, HumanModel{}, RobotModel{}), DomainError);
  CHECK_THROWS_AS(sample_efficiency(0, 5, 3), DomainError);
  CHECK_THROWS_AS(factorial_count(0, 3), DomainError);
}
