#include "dualdrm/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dualdrm/baselines.hpp"
#include "dualdrm/bench.hpp"
#include "dualdrm/scenario.hpp"
#include "dualdrm/serialize.hpp"
#include "dualdrm/threading.hpp"

namespace dualdrm {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitPlanning = 4;
constexpr int kExitIo = 5;
constexpr int kExitCompat = 6;

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

VoxelGrid parse_workspace(const std::string& workspace, const std::string& min_str,
                          double voxel_size) {
  double w, d, h;
  if (std::sscanf(workspace.c_str(), "%lfx%lfx%lf", &w, &d, &h) != 3 || w <= 0 ||
      d <= 0 || h <= 0) {
    throw InputError("--workspace expects WIDTHxDEPTHxHEIGHT in meters");
  }
  Vec3 min(-w / 2, -d / 2, 0.0);
  if (!min_str.empty()) {
    if (std::sscanf(min_str.c_str(), "%lf,%lf,%lf", &min[0], &min[1], &min[2]) != 3) {
      throw InputError("--workspace-min expects x,y,z");
    }
  }
  auto cells = [&](double extent) {
    return std::max<std::uint32_t>(
        1, static_cast<std::uint32_t>(std::floor(extent / voxel_size + 1e-9)));
  };
  return VoxelGrid(min, voxel_size, {cells(w), cells(d), cells(h)});
}

// "lo:hi" applied to every joint, or a comma list with one lo:hi per joint
// over torso then arm1 then arm2.
std::vector<std::pair<double, double>> parse_ranges(const std::string& text,
                                                    std::size_t joint_count) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double lo, hi;
    if (std::sscanf(item.c_str(), "%lf:%lf", &lo, &hi) != 2 || hi < lo) {
      throw InputError("--joint-ranges expects lo:hi[,lo:hi...]");
    }
    out.emplace_back(lo, hi);
  }
  if (out.size() == 1) out.assign(joint_count, out[0]);
  if (out.size() != joint_count) {
    throw InputError("--joint-ranges needs 1 entry or one per joint (" +
                     std::to_string(joint_count) + ")");
  }
  return out;
}

std::vector<JointGrid> make_spec(const std::vector<Joint>& joints, double step,
                                 const std::vector<std::pair<double, double>>* ranges,
                                 std::size_t offset) {
  std::vector<JointGrid> spec;
  spec.reserve(joints.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    double lo = joints[j].lo, hi = joints[j].hi;
    if (ranges) {
      lo = std::max(lo, (*ranges)[offset + j].first);
      hi = std::min(hi, (*ranges)[offset + j].second);
    }
    spec.emplace_back(lo, hi, step);
  }
  return spec;
}

FullConfig config_dims_checked(const RobotModel& model, const FullConfig& q,
                               const char* what) {
  if (static_cast<std::size_t>(q.torso.size()) != model.torso_dof() ||
      static_cast<std::size_t>(q.arm1.size()) != model.arm_dof(ChainId::arm1) ||
      static_cast<std::size_t>(q.arm2.size()) != model.arm_dof(ChainId::arm2)) {
    throw FormatError(std::string(what) + ": joint counts do not match the robot");
  }
  return q;
}

struct PlanFlags {
  double resolution = 0.05;
  double time_budget = 30.0;
  std::uint32_t retries = 2;
  std::uint32_t iteration_cap = 50;
  std::uint64_t product_budget = 100'000;

  PlanOptions options() const {
    PlanOptions opt;
    opt.resolution = resolution;
    opt.time_budget_s = time_budget;
    opt.restricted_retries = retries;
    opt.iteration_cap = iteration_cap;
    opt.product_budget = product_budget;
    return opt;
  }
};

void add_plan_flags(CLI::App* cmd, PlanFlags& flags) {
  cmd->add_option("--resolution", flags.resolution,
                  "per-joint collision sampling step (rad)");
  cmd->add_option("--time-budget", flags.time_budget, "seconds per query, 0 = off");
  cmd->add_option("--retries", flags.retries,
                  "restricted search rounds before exhaustive fallback");
  cmd->add_option("--iteration-cap", flags.iteration_cap, "repair rounds per query");
  cmd->add_option("--product-budget", flags.product_budget,
                  "pair cap for --planner product-oracle");
}

int run_plan_result(const PlanResult& result) {
  switch (result.status) {
    case PlanStatus::success: return kExitOk;
    case PlanStatus::budget_exceeded: return kExitCapacity;
    default: return kExitPlanning;
  }
}

int cmd_build(const std::string& robot_path, const std::string& out_path,
              double torso_step, double arm_step, const std::string& ranges_text,
              double voxel_size, const std::string& workspace,
              const std::string& workspace_min, double padding_flag,
              std::uint32_t max_moving, std::uint64_t node_cap,
              std::uint64_t pair_budget) {
  if (torso_step <= 0 || arm_step <= 0) {
    std::cerr << "error: discretization steps must be > 0\n";
    return kExitUsage;
  }
  if (voxel_size <= 0) {
    std::cerr << "error: --voxel-size must be > 0\n";
    return kExitUsage;
  }
  const RobotModel model = load_robot_model(robot_path);
  const VoxelGrid grid = parse_workspace(workspace, workspace_min, voxel_size);
  const double padding = padding_flag >= 0 ? padding_flag : 0.5 * voxel_size;

  const std::size_t total_joints =
      model.torso_dof() + model.arm_dof(ChainId::arm1) + model.arm_dof(ChainId::arm2);
  std::vector<std::pair<double, double>> ranges;
  const std::vector<std::pair<double, double>>* ranges_ptr = nullptr;
  if (!ranges_text.empty()) {
    ranges = parse_ranges(ranges_text, total_joints);
    ranges_ptr = &ranges;
  }
  const auto torso_spec = make_spec(model.torso, torso_step, ranges_ptr, 0);
  const auto arm1_spec =
      make_spec(model.arm1, arm_step, ranges_ptr, model.torso_dof());
  const auto arm2_spec = make_spec(model.arm2, arm_step, ranges_ptr,
                                   model.torso_dof() + model.arm_dof(ChainId::arm1));

  DualBuildLimits limits;
  limits.per_roadmap.node_cap = node_cap;
  limits.pair_budget = pair_budget;

  const double t0 = now_s();
  const DualRoadmap dual = build_dual(model, torso_spec, arm1_spec, arm2_spec,
                                      grid, padding, {}, limits, max_moving);
  const double build_s = now_s() - t0;
  save_dual(out_path, dual);

  std::cout << "roadmap r1: " << dual.r1.node_count() << " nodes, "
            << dual.r1.edge_count() << " edges\n"
            << "roadmap r2: " << dual.r2.node_count() << " nodes, "
            << dual.r2.edge_count() << " edges\n"
            << "torso support: " << dual.torso_count() << " configurations\n"
            << "inter-arm pairs: " << dual.inter_pair_count() << "\n"
            << "collision-map entries: " << dual.r1.mc.size() << " + "
            << dual.r2.mc.size() << "\n"
            << "build time: " << build_s << " s\n"
            << "written: " << out_path << "\n";
  return kExitOk;
}

int cmd_plan(const std::string& robot_path, const std::string& roadmap_path,
             const std::string& scenario_path, const std::string& planner,
             const std::string& out_path, const PlanFlags& flags) {
  const RobotModel model = load_robot_model(robot_path);
  const DualRoadmap dual = load_dual(roadmap_path);
  const Scenario scenario = load_scenario(scenario_path);

  if (auto compat = hash_compatibility(dual.r1.meta, scenario.grid); !compat) {
    std::cerr << "error: scenario incompatible with roadmap: " << compat.mismatch
              << "\n";
    return kExitCompat;
  }

  PlanRequest request{config_dims_checked(model, scenario.start, "start"),
                      config_dims_checked(model, scenario.target, "target"),
                      scenario_occupancy(scenario), flags.options()};

  PlanResult result;
  if (planner == "dual") {
    result = plan(dual, model, request);
  } else if (planner == "leader-follower") {
    result = leader_follower_plan(dual, model, request);
  } else if (planner == "product-oracle") {
    request.options.backend = SearchBackend::product_oracle;
    result = plan(dual, model, request);
  } else {
    std::cerr << "error: unknown planner '" << planner << "'\n";
    return kExitUsage;
  }

  std::cout << "status: " << to_string(result.status) << "\n";
  if (!result.detail.empty()) std::cout << "detail: " << result.detail << "\n";
  std::cout << "pairs expanded: " << result.search.pairs_expanded
            << ", generated: " << result.search.pairs_generated
            << ", fallback: " << (result.search.fallback_used ? "yes" : "no")
            << "\n"
            << "timings (s): prune " << result.timings.prune_s << ", connect "
            << result.timings.connect_s << ", search " << result.timings.search_s
            << ", check " << result.timings.check_s << ", shortcut "
            << result.timings.shortcut_s << ", total " << result.timings.total_s
            << "\n";
  if (result.ok()) {
    std::cout << "waypoints: " << result.trajectory->waypoints.size()
              << ", cost: " << result.trajectory->cost << "\n";
    if (!out_path.empty()) {
      TrajectoryFile file;
      file.waypoints = result.trajectory->waypoints;
      file.cost = result.trajectory->cost;
      file.grid_hash = dual.r1.meta.grid.spec_hash();
      file.planner = planner;
      file.search = result.search;
      file.timings = result.timings;
      save_trajectory(out_path, file);
      std::cout << "written: " << out_path << "\n";
    }
  }
  return run_plan_result(result);
}

int cmd_check(const std::string& trajectory_path, const std::string& scenario_path,
              const std::string& robot_path, double resolution) {
  const RobotModel model = load_robot_model(robot_path);
  const Scenario scenario = load_scenario(scenario_path);
  const TrajectoryFile traj = load_trajectory(trajectory_path);
  if (traj.grid_hash != 0 && traj.grid_hash != scenario.grid.spec_hash()) {
    std::cerr << "error: trajectory was planned on a different grid\n";
    return kExitCompat;
  }
  for (const auto& q : traj.waypoints) config_dims_checked(model, q, "waypoint");

  const OccupancySet occ = scenario_occupancy(scenario);
  const ValidationReport report =
      validate_trajectory(model, traj.waypoints, scenario.grid, occ, resolution);
  if (report.ok) {
    std::cout << "trajectory valid: " << traj.waypoints.size() << " waypoints\n";
    return kExitOk;
  }
  const Violation& v = *report.violation;
  std::cout << "violation: segment " << v.segment << " at s=" << v.s
            << " condition " << v.condition << "\n";
  return kExitCheckFailed;
}

int cmd_bench(const std::string& robot_path, const std::string& roadmap_path,
              const std::string& scenario_dir, const std::string& planners_text,
              const std::string& out_path, std::uint64_t seed,
              const PlanFlags& flags, bool zero_timing) {
  const RobotModel model = load_robot_model(robot_path);
  const DualRoadmap dual = load_dual(roadmap_path);

  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(scenario_dir)) {
    if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    std::cerr << "error: no scenario .json files in " << scenario_dir << "\n";
    return kExitUsage;
  }

  std::vector<Scenario> scenarios;
  std::vector<std::string> ids;
  for (const auto& p : paths) {
    Scenario s = load_scenario(p);
    if (auto compat = hash_compatibility(dual.r1.meta, s.grid); !compat) {
      std::cerr << "error: " << p << " incompatible with roadmap: "
                << compat.mismatch << "\n";
      return kExitCompat;
    }
    scenarios.push_back(std::move(s));
    ids.push_back(fs::path(p).stem().string());
  }

  BenchOptions options;
  options.plan = flags.options();
  options.zero_timing = zero_timing;
  options.planners.clear();
  std::stringstream ss(planners_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) options.planners.push_back(item);
  }
  if (options.planners.empty()) {
    std::cerr << "error: --planners is empty\n";
    return kExitUsage;
  }

  const BenchReport report = run_bench(dual, model, scenarios, ids, options);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + out_path);
  out << "# dualdrm bench seed=" << seed << " scenarios=" << scenarios.size()
      << "\n";
  out << bench_csv(report);

  const std::string hist_path =
      (fs::path(out_path).parent_path() /
       (fs::path(out_path).stem().string() + "_hist.csv"))
          .string();
  std::ofstream hist(hist_path, std::ios::trunc);
  hist << bench_histogram_csv(report);

  for (const auto& a : report.aggregates) {
    std::cout << a.planner << ": " << a.successes << "/" << a.total
              << " success rate " << a.success_rate << ", median "
              << a.median_s << " s, mean " << a.mean_s << " s, p10-p90 ["
              << a.p10_s << ", " << a.p90_s << "] s\n";
  }
  std::cout << "written: " << out_path << " and " << hist_path << "\n";
  return kExitOk;
}

int cmd_gen(const std::string& robot_path, const std::string& roadmap_path,
            const std::string& out_dir, std::uint32_t count, std::uint64_t seed,
            const PlanFlags& flags) {
  const RobotModel model = load_robot_model(robot_path);
  const DualRoadmap dual = load_dual(roadmap_path);
  fs::create_directories(out_dir);

  ShelfParams params;
  params.verify_options = flags.options();

  std::uint32_t written = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t scenario_seed = fnv1a64_u64(seed, 0x100 + i);
    auto scenario = generate_shelf_scenario(dual, model, scenario_seed, params);
    if (!scenario) {
      std::cerr << "warning: generation failed for index " << i << "\n";
      continue;
    }
    char name[64];
    std::snprintf(name, sizeof(name), "scenario_%04u.json", i);
    save_scenario((fs::path(out_dir) / name).string(), *scenario);
    ++written;
  }
  std::cout << "generated " << written << "/" << count << " scenarios in "
            << out_dir << "\n";
  return written == count ? kExitOk : kExitPlanning;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"dual-arm dynamic-roadmap motion planner"};
  app.require_subcommand(1);

  // build
  std::string robot, out, ranges_text, workspace = "2.1x2.1x1.9", workspace_min;
  double torso_step = M_PI / 6, arm_step = M_PI / 6, voxel_size = 0.06;
  double padding = -1.0;  // default 0.5 * voxel_size
  std::uint32_t max_moving = 2;
  std::uint64_t node_cap = 2'000'000, pair_budget = 400'000'000;
  auto* build = app.add_subcommand("build", "construct a dual roadmap");
  build->add_option("robot", robot, "robot model JSON")->required();
  build->add_option("--out", out, "output roadmap file")->required();
  build->add_option("--torso-step", torso_step, "torso discretization step (rad)");
  build->add_option("--arm-step", arm_step, "arm discretization step (rad)");
  build->add_option("--joint-ranges", ranges_text,
                    "lo:hi or comma list per joint (torso,arm1,arm2 order)");
  build->add_option("--voxel-size", voxel_size, "voxel edge length (m)");
  build->add_option("--workspace", workspace, "workspace extents WxDxH (m)");
  build->add_option("--workspace-min", workspace_min,
                    "grid min corner x,y,z (default centered, z=0)");
  build->add_option("--padding", padding,
                    "node pruning padding (m), default 0.5*voxel-size");
  build->add_option("--max-moving-joints", max_moving,
                    "joints allowed to move per roadmap edge");
  build->add_option("--node-cap", node_cap, "max candidate nodes per roadmap");
  build->add_option("--pair-budget", pair_budget, "max same-torso pairs");

  // plan
  std::string roadmap_path, scenario_path, planner = "dual", traj_out;
  PlanFlags plan_flags;
  auto* plan_cmd = app.add_subcommand("plan", "plan one scenario");
  plan_cmd->add_option("robot", robot, "robot model JSON")->required();
  plan_cmd->add_option("roadmap", roadmap_path, "dual roadmap file")->required();
  plan_cmd->add_option("scenario", scenario_path, "scenario JSON")->required();
  plan_cmd->add_option("--planner", planner, "dual|leader-follower|product-oracle");
  plan_cmd->add_option("--out", traj_out, "write the trajectory JSON here");
  add_plan_flags(plan_cmd, plan_flags);

  // check
  std::string traj_path;
  double check_resolution = 0.01;
  auto* check = app.add_subcommand("check", "re-verify a trajectory");
  check->add_option("trajectory", traj_path, "trajectory JSON")->required();
  check->add_option("scenario", scenario_path, "scenario JSON")->required();
  check->add_option("robot", robot, "robot model JSON")->required();
  check->add_option("--resolution", check_resolution, "sampling step (rad)");

  // bench
  std::string scenario_dir, planners_text = "dual,leader-follower";
  std::string bench_out = "bench.csv";
  std::uint64_t seed = 0;
  bool zero_timing = false;
  PlanFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "run a scenario directory");
  bench->add_option("robot", robot, "robot model JSON")->required();
  bench->add_option("roadmap", roadmap_path, "dual roadmap file")->required();
  bench->add_option("scenarios", scenario_dir, "directory of scenario JSONs")
      ->required();
  bench->add_option("--planners", planners_text, "comma list of planners");
  bench->add_option("--out", bench_out, "output CSV path");
  bench->add_option("--seed", seed, "recorded in the CSV header");
  bench->add_flag("--zero-timing", zero_timing,
                  "zero wall-clock columns for byte-identical reruns");
  add_plan_flags(bench, bench_flags);

  // gen
  std::string gen_dir = "scenarios";
  std::uint32_t gen_count = 10;
  PlanFlags gen_flags;
  auto* gen = app.add_subcommand("gen", "generate shelf-world scenarios");
  gen->add_option("robot", robot, "robot model JSON")->required();
  gen->add_option("roadmap", roadmap_path, "dual roadmap file")->required();
  gen->add_option("--out-dir", gen_dir, "output directory");
  gen->add_option("--count", gen_count, "number of scenarios");
  gen->add_option("--seed", seed, "master seed");
  add_plan_flags(gen, gen_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (build->parsed()) {
      return cmd_build(robot, out, torso_step, arm_step, ranges_text, voxel_size,
                       workspace, workspace_min, padding, max_moving, node_cap,
                       pair_budget);
    }
    if (plan_cmd->parsed()) {
      return cmd_plan(robot, roadmap_path, scenario_path, planner, traj_out,
                      plan_flags);
    }
    if (check->parsed()) {
      return cmd_check(traj_path, scenario_path, robot, check_resolution);
    }
    if (bench->parsed()) {
      return cmd_bench(robot, roadmap_path, scenario_dir, planners_text, bench_out,
                       seed, bench_flags, zero_timing);
    }
    if (gen->parsed()) {
      return cmd_gen(robot, roadmap_path, gen_dir, gen_count, seed, gen_flags);
    }
  } catch (const CompatibilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompat;
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace dualdrm
