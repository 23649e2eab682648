#include "dualdrm/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "dualdrm/baselines.hpp"
#include "dualdrm/threading.hpp"

namespace dualdrm {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * double(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - double(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BenchReport run_bench(const DualRoadmap& dual, const RobotModel& model,
                      const std::vector<Scenario>& scenarios,
                      const std::vector<std::string>& scenario_ids,
                      const BenchOptions& options) {
  if (scenarios.size() != scenario_ids.size()) {
    throw InputError("scenario and id counts differ");
  }
  BenchReport report;
  const std::size_t per_scenario = options.planners.size();
  report.rows.resize(scenarios.size() * per_scenario);

  const unsigned workers = options.threads ? options.threads : thread_budget();
  parallel_chunks(
      scenarios.size(),
      [&](std::size_t sb, std::size_t se, std::size_t) {
        for (std::size_t si = sb; si < se; ++si) {
          const Scenario& sc = scenarios[si];
          const OccupancySet occ = scenario_occupancy(sc);
          for (std::size_t pi = 0; pi < options.planners.size(); ++pi) {
            const std::string& planner = options.planners[pi];
            BenchRow& row = report.rows[si * per_scenario + pi];
            row.scenario_index = static_cast<std::uint32_t>(si);
            row.scenario_id = scenario_ids[si];
            row.planner = planner;

            PlanRequest request{sc.start, sc.target, occ, options.plan};
            PlanResult result;
            try {
              if (planner == "dual") {
                result = plan(dual, model, request);
              } else if (planner == "leader-follower") {
                result = leader_follower_plan(dual, model, request);
              } else if (planner == "product-oracle") {
                request.options.backend = SearchBackend::product_oracle;
                result = plan(dual, model, request);
              } else {
                throw InputError("unknown planner: " + planner);
              }
            } catch (const CapacityError& e) {
              row.success = false;
              row.failure = std::string("BudgetExceeded: ") + e.what();
              continue;
            }
            row.success = result.ok();
            row.time_s = options.zero_timing ? 0.0 : result.timings.total_s;
            row.pairs_expanded = result.search.pairs_expanded;
            row.fallback_used = result.search.fallback_used;
            if (result.ok()) {
              row.cost = result.trajectory->cost;
            } else {
              row.failure = to_string(result.status);
            }
          }
        }
      },
      workers);

  for (const std::string& planner : options.planners) {
    BenchAggregate agg;
    agg.planner = planner;
    std::vector<double> times;
    for (const auto& row : report.rows) {
      if (row.planner != planner) continue;
      ++agg.total;
      if (row.success) {
        ++agg.successes;
        times.push_back(row.time_s);
      }
    }
    std::sort(times.begin(), times.end());
    agg.success_rate = agg.total ? double(agg.successes) / double(agg.total) : 0.0;
    if (!times.empty()) {
      agg.mean_s = std::accumulate(times.begin(), times.end(), 0.0) / times.size();
      agg.median_s = quantile_sorted(times, 0.5);
      agg.p10_s = quantile_sorted(times, 0.1);
      agg.p90_s = quantile_sorted(times, 0.9);
      agg.min_s = times.front();
      agg.max_s = times.back();
    }
    report.aggregates.push_back(agg);
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string bench_csv(const BenchReport& report) {
  std::string out =
      "scenario,planner,success,time_s,cost,pairs_expanded,fallback_used,failure\n";
  for (const auto& r : report.rows) {
    out += r.scenario_id + "," + r.planner + "," + (r.success ? "1" : "0") + "," +
           fmt(r.time_s) + "," + fmt(r.cost) + "," +
           std::to_string(r.pairs_expanded) + "," + (r.fallback_used ? "1" : "0") +
           "," + r.failure + "\n";
  }
  out +=
      "\nplanner,total,successes,success_rate,mean_s,median_s,p10_s,p90_s,min_s,"
      "max_s\n";
  for (const auto& a : report.aggregates) {
    out += a.planner + "," + std::to_string(a.total) + "," +
           std::to_string(a.successes) + "," + fmt(a.success_rate) + "," +
           fmt(a.mean_s) + "," + fmt(a.median_s) + "," + fmt(a.p10_s) + "," +
           fmt(a.p90_s) + "," + fmt(a.min_s) + "," + fmt(a.max_s) + "\n";
  }
  return out;
}

std::string bench_histogram_csv(const BenchReport& report, double bucket_s,
                                double max_s) {
  const std::size_t n_buckets = static_cast<std::size_t>(max_s / bucket_s) + 1;
  std::string out = "planner,bucket_lo_s,bucket_hi_s,count\n";
  for (const auto& agg : report.aggregates) {
    std::vector<std::uint64_t> counts(n_buckets, 0);
    for (const auto& r : report.rows) {
      if (r.planner != agg.planner || !r.success) continue;
      const std::size_t b = std::min(
          n_buckets - 1, static_cast<std::size_t>(r.time_s / bucket_s));
      ++counts[b];
    }
    for (std::size_t b = 0; b < n_buckets; ++b) {
      const bool overflow = b + 1 == n_buckets;
      out += agg.planner + "," + fmt(b * bucket_s) + "," +
             (overflow ? std::string("inf") : fmt((b + 1) * bucket_s)) + "," +
             std::to_string(counts[b]) + "\n";
    }
  }
  return out;
}

}  // namespace dualdrm
