#include "dualdrm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace dualdrm {

using nlohmann::json;

OccupancySet scenario_occupancy(const Scenario& s) {
  OccupancySet occ(s.grid);
  for (VoxelId id : s.occupied) occ.insert(id);
  for (const Vec3& p : s.points) {
    if (auto id = s.grid.voxel_of(p)) occ.insert(*id);
  }
  return occ;
}

namespace {

json vec_to_json(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VecX vec_from_json(const json& a, const std::string& where) {
  if (!a.is_array()) throw FormatError(where + ": expected an array");
  VecX v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

json config_to_json(const FullConfig& q) {
  return json{{"torso", vec_to_json(q.torso)},
              {"arm1", vec_to_json(q.arm1)},
              {"arm2", vec_to_json(q.arm2)}};
}

FullConfig config_from_json(const json& j, const std::string& where) {
  FullConfig q;
  q.torso = vec_from_json(j.at("torso"), where + ".torso");
  q.arm1 = vec_from_json(j.at("arm1"), where + ".arm1");
  q.arm2 = vec_from_json(j.at("arm2"), where + ".arm2");
  return q;
}

json grid_to_json(const VoxelGrid& g) {
  return json{{"min_corner", {g.min_corner[0], g.min_corner[1], g.min_corner[2]}},
              {"voxel_size", g.voxel_size},
              {"dims", {g.dims[0], g.dims[1], g.dims[2]}}};
}

VoxelGrid grid_from_json(const json& j) {
  const auto& m = j.at("min_corner");
  const auto& d = j.at("dims");
  return VoxelGrid(Vec3(m[0].get<double>(), m[1].get<double>(), m[2].get<double>()),
                   j.at("voxel_size").get<double>(),
                   {d[0].get<std::uint32_t>(), d[1].get<std::uint32_t>(),
                    d[2].get<std::uint32_t>()});
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("scenario: invalid JSON: ") + e.what());
  }
  try {
    if (j.value("format_version", 1) != 1) {
      throw FormatError("scenario: unsupported format_version");
    }
    Scenario s;
    s.grid = grid_from_json(j.at("grid"));
    if (j.contains("occupied_voxels")) {
      for (const auto& v : j["occupied_voxels"]) {
        const std::uint64_t id = v.get<std::uint64_t>();
        if (id >= s.grid.total_voxels()) {
          throw FormatError("scenario: occupied voxel id out of range");
        }
        s.occupied.push_back(static_cast<VoxelId>(id));
      }
    }
    if (j.contains("points")) {
      for (const auto& p : j["points"]) {
        s.points.emplace_back(p[0].get<double>(), p[1].get<double>(),
                              p[2].get<double>());
      }
    }
    s.start = config_from_json(j.at("start"), "start");
    s.target = config_from_json(j.at("target"), "target");
    if (j.contains("meta")) {
      s.seed = j["meta"].value("seed", std::uint64_t(0));
      s.note = j["meta"].value("note", "");
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  return parse_scenario(slurp(path));
}

void save_scenario(const std::string& path, const Scenario& s) {
  json j;
  j["format_version"] = 1;
  j["grid"] = grid_to_json(s.grid);
  j["occupied_voxels"] = s.occupied;
  if (!s.points.empty()) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back({p[0], p[1], p[2]});
    j["points"] = pts;
  }
  j["start"] = config_to_json(s.start);
  j["target"] = config_to_json(s.target);
  j["meta"] = {{"seed", s.seed}, {"note", s.note}};
  spit(path, j.dump(2) + "\n");
}

TrajectoryFile load_trajectory(const std::string& path) {
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw FormatError(std::string("trajectory: invalid JSON: ") + e.what());
  }
  try {
    if (j.value("format_version", 1) != 1) {
      throw FormatError("trajectory: unsupported format_version");
    }
    TrajectoryFile t;
    if (!j.contains("waypoints") || !j["waypoints"].is_array() ||
        j["waypoints"].empty()) {
      throw FormatError("trajectory: empty waypoint list");
    }
    for (std::size_t i = 0; i < j["waypoints"].size(); ++i) {
      t.waypoints.push_back(
          config_from_json(j["waypoints"][i], "waypoints[" + std::to_string(i) + "]"));
    }
    t.cost = j.value("cost", 0.0);
    t.grid_hash = j.value("grid_hash", std::uint64_t(0));
    t.planner = j.value("planner", "");
    if (j.contains("stats")) {
      const auto& st = j["stats"];
      t.search.pairs_expanded = st.value("pairs_expanded", std::uint64_t(0));
      t.search.pairs_generated = st.value("pairs_generated", std::uint64_t(0));
      t.search.queue_peak = st.value("queue_peak", std::uint64_t(0));
      t.search.fallback_used = st.value("fallback_used", false);
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("trajectory: ") + e.what());
  }
}

void save_trajectory(const std::string& path, const TrajectoryFile& t) {
  json j;
  j["format_version"] = 1;
  json wps = json::array();
  for (const auto& q : t.waypoints) wps.push_back(config_to_json(q));
  j["waypoints"] = wps;
  j["cost"] = t.cost;
  j["grid_hash"] = t.grid_hash;
  j["planner"] = t.planner;
  j["stats"] = {{"pairs_expanded", t.search.pairs_expanded},
                {"pairs_generated", t.search.pairs_generated},
                {"queue_peak", t.search.queue_peak},
                {"fallback_used", t.search.fallback_used},
                {"prune_s", t.timings.prune_s},
                {"connect_s", t.timings.connect_s},
                {"search_s", t.timings.search_s},
                {"check_s", t.timings.check_s},
                {"shortcut_s", t.timings.shortcut_s},
                {"total_s", t.timings.total_s}};
  spit(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Shelf-world generator

namespace {

// Explicit uniform draws on top of mt19937_64, so generated scenarios are
// identical across standard library implementations.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}

  double uniform() { return double(eng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return n ? eng() % n : 0; }
  bool chance(double p) { return uniform() < p; }
};

struct SampledPair {
  NodePair pair;
  FullConfig config;
};

// One valid, mutually collision-free node pair, optionally preferring pairs
// whose arm1 tip reaches past x_front.
std::optional<SampledPair> sample_pair(const DualRoadmap& dual,
                                       const RobotModel& model,
                                       const ValidityMask& mask1,
                                       const ValidityMask& mask2, Rng& rng,
                                       std::optional<double> x_front) {
  CollisionKernel kernel(model, 0.0);
  const std::uint32_t n_torso = dual.torso_count();
  for (int attempt = 0; attempt < 60; ++attempt) {
    const auto t = static_cast<std::uint32_t>(rng.below(n_torso));
    const auto [a0, a1] = dual.r1.torso_node_range(t);
    const auto [b0, b1] = dual.r2.torso_node_range(t);
    if (a0 == a1 || b0 == b1) continue;
    const NodeId a = a0 + static_cast<NodeId>(rng.below(a1 - a0));
    const NodeId b = b0 + static_cast<NodeId>(rng.below(b1 - b0));
    if (!mask1.valid(a) || !mask2.valid(b)) continue;
    if (dual.inter_contains({a, b})) continue;
    FullConfig q = compose(dual, {a, b});
    if (x_front) {
      kernel.set_torso(q.torso);
      kernel.set_arm(ChainId::arm1, q.arm1);
      const auto centers = kernel.arm_centers(ChainId::arm1);
      if (centers.empty() || centers.back().x() < *x_front) {
        if (attempt < 40) continue;  // keep trying for a reach-through pair
      }
    }
    return SampledPair{{a, b}, std::move(q)};
  }
  return std::nullopt;
}

FullConfig jitter_config(const RobotModel& model, const DualRoadmap& dual,
                         const FullConfig& q, double jitter, Rng& rng) {
  auto jog = [&](const VecX& values, const std::vector<JointGrid>& spec,
                 const std::vector<Joint>& joints) {
    VecX out = values;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
      const double half = 0.5 * spec[j].step * jitter;
      out[j] = std::clamp(out[j] + rng.uniform(-half, half), joints[j].lo,
                          joints[j].hi);
    }
    return out;
  };
  FullConfig out;
  out.torso = jog(q.torso, dual.r1.meta.torso_spec, model.torso);
  out.arm1 = jog(q.arm1, dual.r1.meta.arm_spec, model.arm1);
  out.arm2 = jog(q.arm2, dual.r2.meta.arm_spec, model.arm2);
  return out;
}

}  // namespace

std::optional<Scenario> generate_shelf_scenario(const DualRoadmap& dual,
                                                const RobotModel& model,
                                                std::uint64_t seed,
                                                const ShelfParams& params) {
  const VoxelGrid& grid = dual.r1.meta.grid;

  for (std::uint32_t attempt = 0; attempt < params.max_attempts; ++attempt) {
    Rng rng(fnv1a64_u64(seed, 0x9e3779b97f4a7c15ull + attempt));

    Scenario s;
    s.grid = grid;
    s.seed = seed;
    s.note = "shelf";

    // Wall with rectangular openings.
    const double wall_x = rng.uniform(params.wall_x_min, params.wall_x_max);
    const std::uint32_t n_openings =
        params.openings_min +
        static_cast<std::uint32_t>(rng.below(params.openings_max - params.openings_min + 1));
    struct Opening {
      double y, z, w, h;
    };
    std::vector<Opening> openings;
    for (std::uint32_t i = 0; i < n_openings; ++i) {
      Opening o;
      o.w = rng.uniform(params.opening_w_min, params.opening_w_max);
      o.h = rng.uniform(params.opening_h_min, params.opening_h_max);
      o.y = rng.uniform(-params.wall_y_half + o.w / 2, params.wall_y_half - o.w / 2);
      o.z = rng.uniform(params.wall_z_lo + o.h / 2, params.wall_z_hi - o.h / 2);
      openings.push_back(o);
    }
    for (std::uint64_t id = 0; id < grid.total_voxels(); ++id) {
      const Vec3 c = grid.voxel_center(static_cast<VoxelId>(id));
      if (c.x() < wall_x || c.x() >= wall_x + grid.voxel_size) continue;
      if (std::abs(c.y()) > params.wall_y_half) continue;
      if (c.z() < params.wall_z_lo || c.z() > params.wall_z_hi) continue;
      bool in_opening = false;
      for (const auto& o : openings) {
        if (std::abs(c.y() - o.y) <= o.w / 2 && std::abs(c.z() - o.z) <= o.h / 2) {
          in_opening = true;
          break;
        }
      }
      if (!in_opening) s.occupied.push_back(static_cast<VoxelId>(id));
    }

    // Obstacle blobs.
    const std::uint32_t n_blobs =
        static_cast<std::uint32_t>(rng.below(params.blobs_max + 1));
    for (std::uint32_t i = 0; i < n_blobs; ++i) {
      const double r = rng.uniform(params.blob_r_min, params.blob_r_max);
      const Vec3 c(rng.uniform(0.1, wall_x - 0.05),
                   rng.uniform(-params.wall_y_half, params.wall_y_half),
                   rng.uniform(params.wall_z_lo, params.wall_z_hi));
      for (std::uint64_t id = 0; id < grid.total_voxels(); ++id) {
        if ((grid.voxel_center(static_cast<VoxelId>(id)) - c).norm() < r) {
          s.occupied.push_back(static_cast<VoxelId>(id));
        }
      }
    }
    std::sort(s.occupied.begin(), s.occupied.end());
    s.occupied.erase(std::unique(s.occupied.begin(), s.occupied.end()),
                     s.occupied.end());

    const OccupancySet occ = scenario_occupancy(s);
    const ValidityMask mask1 = build_collision_set(dual.r1, occ);
    const ValidityMask mask2 = build_collision_set(dual.r2, occ);

    const bool reach_through = rng.chance(params.reach_through_prob);
    auto start = sample_pair(dual, model, mask1, mask2, rng, std::nullopt);
    auto target = sample_pair(dual, model, mask1, mask2, rng,
                              reach_through ? std::optional<double>(wall_x)
                                            : std::nullopt);
    if (!start || !target) continue;
    if (start->pair == target->pair && attempt + 1 < params.max_attempts) continue;

    s.start = jitter_config(model, dual, start->config, params.endpoint_jitter, rng);
    s.target = jitter_config(model, dual, target->config, params.endpoint_jitter, rng);
    if (config_collision(model, s.start, grid, occ)) s.start = start->config;
    if (config_collision(model, s.target, grid, occ)) s.target = target->config;

    // Keep only solvable problems.
    PlanRequest verify{s.start, s.target, occ, params.verify_options};
    if (plan(dual, model, verify).ok()) return s;
  }
  return std::nullopt;
}

}  // namespace dualdrm
