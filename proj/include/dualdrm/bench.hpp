#pragma once

#include <string>
#include <vector>

#include "dualdrm/scenario.hpp"

namespace dualdrm {

struct BenchRow {
  std::uint32_t scenario_index = 0;
  std::string scenario_id;
  std::string planner;
  bool success = false;
  double time_s = 0.0;
  double cost = 0.0;
  std::uint64_t pairs_expanded = 0;
  bool fallback_used = false;
  std::string failure;  // empty on success
};

/// Success-only timing aggregates, per the convention that planning times are
/// reported for successful plans.
struct BenchAggregate {
  std::string planner;
  std::uint32_t total = 0;
  std::uint32_t successes = 0;
  double success_rate = 0.0;
  double mean_s = 0.0;
  double median_s = 0.0;
  double p10_s = 0.0;
  double p90_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;           // ordered by (scenario, planner)
  std::vector<BenchAggregate> aggregates;
};

struct BenchOptions {
  PlanOptions plan;
  std::vector<std::string> planners = {"dual", "leader-follower"};
  // Rows stay deterministic regardless; zero_timing additionally zeroes the
  // wall-clock columns so reruns are byte-identical.
  bool zero_timing = false;
  unsigned threads = 0;  // 0 = thread_budget()
};

BenchReport run_bench(const DualRoadmap& dual, const RobotModel& model,
                      const std::vector<Scenario>& scenarios,
                      const std::vector<std::string>& scenario_ids,
                      const BenchOptions& options);

std::string bench_csv(const BenchReport& report);
std::string bench_histogram_csv(const BenchReport& report, double bucket_s = 0.05,
                                double max_s = 2.0);

/// Linear-interpolation quantile of a sorted sample (q in [0, 1]).
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace dualdrm
