#include "dualdrm/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dualdrm {

using nlohmann::json;

Isometry3 Joint::motion(double q) const {
  Isometry3 t = Isometry3::Identity();
  if (kind == Kind::revolute) {
    t.linear() = Eigen::AngleAxisd(q, axis).toRotationMatrix();
  } else {
    t.translation() = axis * q;
  }
  return t;
}

const char* body_name(Body b) {
  switch (b) {
    case Body::torso: return "torso";
    case Body::arm1: return "arm1";
    case Body::arm2: return "arm2";
    case Body::base: return "base";
  }
  return "?";
}

namespace {

void validate_joint(const Joint& j, const std::string& where) {
  if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
    throw InputError(where + ": joint axis must have unit norm");
  }
  if (!(j.lo <= j.hi)) {
    throw InputError(where + ": joint limits must satisfy lo <= hi");
  }
  const Mat3 r = j.origin.linear();
  if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InputError(where + ": origin rotation is not orthonormal");
  }
}

void validate_spheres(const std::vector<CollisionSphere>& spheres,
                      std::size_t link_count, const std::string& where) {
  for (const auto& s : spheres) {
    if (s.radius <= 0.0) throw InputError(where + ": sphere radius must be > 0");
    if (s.link < 0 || static_cast<std::size_t>(s.link) >= link_count) {
      throw InputError(where + ": sphere link index out of range");
    }
  }
}

bool within(const std::vector<Joint>& joints, const VecX& q, double tol) {
  if (static_cast<std::size_t>(q.size()) != joints.size()) return false;
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (q[i] < joints[i].lo - tol || q[i] > joints[i].hi + tol) return false;
  }
  return true;
}

}  // namespace

void RobotModel::validate() const {
  if (torso.empty() || arm1.empty() || arm2.empty()) {
    throw InputError("model requires at least one torso joint and one joint per arm");
  }
  for (std::size_t i = 0; i < torso.size(); ++i)
    validate_joint(torso[i], "torso joint " + std::to_string(i));
  for (std::size_t i = 0; i < arm1.size(); ++i)
    validate_joint(arm1[i], "arm1 joint " + std::to_string(i));
  for (std::size_t i = 0; i < arm2.size(); ++i)
    validate_joint(arm2[i], "arm2 joint " + std::to_string(i));
  validate_spheres(torso_spheres, torso.size(), "torso");
  validate_spheres(arm1_spheres, arm1.size(), "arm1");
  validate_spheres(arm2_spheres, arm2.size(), "arm2");
  for (const auto& s : base_spheres) {
    if (s.radius <= 0.0) throw InputError("base: sphere radius must be > 0");
  }

  auto sphere_count = [&](Body b) -> std::size_t {
    switch (b) {
      case Body::torso: return torso_spheres.size();
      case Body::arm1: return arm1_spheres.size();
      case Body::arm2: return arm2_spheres.size();
      case Body::base: return base_spheres.size();
    }
    return 0;
  };
  for (const auto* list : {&exempt_pairs, &force_check_pairs}) {
    for (const auto& [a, b] : *list) {
      if (a.index >= sphere_count(a.body) || b.index >= sphere_count(b.body)) {
        throw InputError("self-collision pair references a sphere that does not exist");
      }
    }
  }
}

namespace {

std::int32_t sphere_link(const RobotModel& m, SphereRef r) {
  switch (r.body) {
    case Body::torso: return m.torso_spheres[r.index].link;
    case Body::arm1: return m.arm1_spheres[r.index].link;
    case Body::arm2: return m.arm2_spheres[r.index].link;
    case Body::base: return -1;
  }
  return -1;
}

// Kinematic adjacency between the links two spheres sit on: consecutive links
// of one body, torso tip <-> arm root, base <-> torso root.
bool links_adjacent(const RobotModel& m, SphereRef a, SphereRef b) {
  const std::int32_t la = sphere_link(m, a);
  const std::int32_t lb = sphere_link(m, b);
  if (a.body == b.body) return std::abs(la - lb) <= 1;
  auto is_pair = [&](Body x, Body y) {
    return (a.body == x && b.body == y) || (a.body == y && b.body == x);
  };
  const std::int32_t torso_tip = static_cast<std::int32_t>(m.torso.size()) - 1;
  if (is_pair(Body::torso, Body::arm1) || is_pair(Body::torso, Body::arm2)) {
    const std::int32_t tl = a.body == Body::torso ? la : lb;
    const std::int32_t al = a.body == Body::torso ? lb : la;
    return tl == torso_tip && al == 0;
  }
  if (is_pair(Body::base, Body::torso)) {
    const std::int32_t tl = a.body == Body::torso ? la : lb;
    return tl == 0;
  }
  return false;
}

std::pair<SphereRef, SphereRef> canonical(SphereRef a, SphereRef b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

void RobotModel::build_self_pairs() {
  std::set<std::pair<SphereRef, SphereRef>> exempt, force;
  for (const auto& [a, b] : exempt_pairs) exempt.insert(canonical(a, b));
  for (const auto& [a, b] : force_check_pairs) force.insert(canonical(a, b));
  for (const auto& p : force) {
    if (exempt.count(p)) {
      throw InputError("sphere pair listed as both exempt and force-check");
    }
  }
  for (const auto& p : exempt) {
    if (links_adjacent(*this, p.first, p.second)) {
      throw InputError(
          "adjacent-link sphere pairs are exempt by default and must not "
          "appear in the exempt list");
    }
  }

  auto build = [&](ChainId chain) {
    std::vector<std::pair<SphereRef, SphereRef>> out;
    const Body arm_body = chain == ChainId::arm1 ? Body::arm1 : Body::arm2;
    std::vector<SphereRef> refs;
    for (std::uint16_t i = 0; i < torso_spheres.size(); ++i)
      refs.push_back({Body::torso, i});
    for (std::uint16_t i = 0; i < chain_spheres(chain).size(); ++i)
      refs.push_back({arm_body, i});
    for (std::uint16_t i = 0; i < base_spheres.size(); ++i)
      refs.push_back({Body::base, i});

    for (std::size_t i = 0; i < refs.size(); ++i) {
      for (std::size_t j = i + 1; j < refs.size(); ++j) {
        const SphereRef a = refs[i], b = refs[j];
        if (a.body == Body::base && b.body == Body::base) continue;  // static
        const auto key = canonical(a, b);
        if (force.count(key)) {
          out.push_back(key);
          continue;
        }
        if (exempt.count(key)) continue;
        if (a.body == b.body && sphere_link(*this, a) == sphere_link(*this, b))
          continue;
        if (links_adjacent(*this, a, b)) continue;
        out.push_back(key);
      }
    }
    return out;
  };
  self_pairs_arm1_ = build(ChainId::arm1);
  self_pairs_arm2_ = build(ChainId::arm2);
}

void RobotModel::finalize() {
  validate();
  build_self_pairs();
  finalized_ = true;
}

bool RobotModel::within_limits(const FullConfig& q, double tol) const {
  return within(torso, q.torso, tol) && within(arm1, q.arm1, tol) &&
         within(arm2, q.arm2, tol);
}

bool RobotModel::within_limits(ChainId c, const ChainConfig& q, double tol) const {
  return within(torso, q.torso, tol) && within(chain_joints(c), q.arm, tol);
}

void RobotModel::require_within_limits(const FullConfig& q) const {
  if (!within_limits(q)) throw InputError("configuration violates joint limits");
}

void RobotModel::require_within_limits(ChainId c, const ChainConfig& q) const {
  if (!within_limits(c, q)) throw InputError("configuration violates joint limits");
}

const std::vector<std::pair<SphereRef, SphereRef>>& RobotModel::self_pairs(
    ChainId c) const {
  return c == ChainId::arm1 ? self_pairs_arm1_ : self_pairs_arm2_;
}

const CollisionSphere& RobotModel::sphere(SphereRef r) const {
  switch (r.body) {
    case Body::arm1: return arm1_spheres[r.index];
    case Body::arm2: return arm2_spheres[r.index];
    default: return torso_spheres[r.index];
  }
}

// ---------------------------------------------------------------------------
// JSON loading

namespace {

Vec3 parse_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw FormatError(where + ": expected a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Isometry3 parse_transform(const json& j, const std::string& where) {
  Isometry3 t = Isometry3::Identity();
  if (j.contains("translation")) {
    t.translation() = parse_vec3(j["translation"], where + ".translation");
  }
  if (j.contains("rpy")) {
    const Vec3 rpy = parse_vec3(j["rpy"], where + ".rpy");
    t.linear() = (Eigen::AngleAxisd(rpy[2], Vec3::UnitZ()) *
                  Eigen::AngleAxisd(rpy[1], Vec3::UnitY()) *
                  Eigen::AngleAxisd(rpy[0], Vec3::UnitX()))
                     .toRotationMatrix();
  }
  return t;
}

Joint parse_joint(const json& j, const std::string& where) {
  Joint out;
  const std::string kind = j.value("kind", "revolute");
  if (kind == "revolute") {
    out.kind = Joint::Kind::revolute;
  } else if (kind == "prismatic") {
    out.kind = Joint::Kind::prismatic;
  } else {
    throw FormatError(where + ": unknown joint kind '" + kind + "'");
  }
  if (j.contains("axis")) out.axis = parse_vec3(j["axis"], where + ".axis");
  if (j.contains("origin")) out.origin = parse_transform(j["origin"], where + ".origin");
  if (!j.contains("limits") || !j["limits"].is_array() || j["limits"].size() != 2) {
    throw FormatError(where + ": 'limits' must be [lo, hi]");
  }
  out.lo = j["limits"][0].get<double>();
  out.hi = j["limits"][1].get<double>();
  return out;
}

std::vector<CollisionSphere> parse_spheres(const json& j, const std::string& where) {
  std::vector<CollisionSphere> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& s = j[i];
    CollisionSphere cs;
    cs.link = s.value("link", 0);
    cs.offset = parse_vec3(s.at("offset"), where + ".offset");
    cs.radius = s.at("radius").get<double>();
    out.push_back(cs);
  }
  return out;
}

Body parse_body(const std::string& s, const std::string& where) {
  if (s == "torso") return Body::torso;
  if (s == "arm1") return Body::arm1;
  if (s == "arm2") return Body::arm2;
  if (s == "base") return Body::base;
  throw FormatError(where + ": unknown body '" + s + "'");
}

std::vector<std::pair<SphereRef, SphereRef>> parse_pairs(const json& j,
                                                         const std::string& where) {
  std::vector<std::pair<SphereRef, SphereRef>> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 4) {
      throw FormatError(where + ": each pair is [body, index, body, index]");
    }
    SphereRef a{parse_body(e[0].get<std::string>(), where),
                e[1].get<std::uint16_t>()};
    SphereRef b{parse_body(e[2].get<std::string>(), where),
                e[3].get<std::uint16_t>()};
    out.emplace_back(a, b);
  }
  return out;
}

}  // namespace

RobotModel parse_robot_model(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("robot model: invalid JSON: ") + e.what());
  }
  try {
    if (j.value("format_version", 1) != 1) {
      throw FormatError("robot model: unsupported format_version");
    }
    RobotModel m;
    m.name = j.value("name", "robot");
    const auto& torso = j.at("torso");
    for (std::size_t i = 0; i < torso.at("joints").size(); ++i) {
      m.torso.push_back(parse_joint(torso["joints"][i],
                                    "torso.joints[" + std::to_string(i) + "]"));
    }
    if (torso.contains("spheres"))
      m.torso_spheres = parse_spheres(torso["spheres"], "torso.spheres");

    for (ChainId c : {ChainId::arm1, ChainId::arm2}) {
      const char* key = c == ChainId::arm1 ? "arm1" : "arm2";
      const auto& arm = j.at(key);
      auto& joints = c == ChainId::arm1 ? m.arm1 : m.arm2;
      for (std::size_t i = 0; i < arm.at("joints").size(); ++i) {
        joints.push_back(parse_joint(
            arm["joints"][i], std::string(key) + ".joints[" + std::to_string(i) + "]"));
      }
      auto& spheres = c == ChainId::arm1 ? m.arm1_spheres : m.arm2_spheres;
      if (arm.contains("spheres"))
        spheres = parse_spheres(arm["spheres"], std::string(key) + ".spheres");
      auto& mount = c == ChainId::arm1 ? m.arm1_mount : m.arm2_mount;
      if (arm.contains("mount"))
        mount = parse_transform(arm["mount"], std::string(key) + ".mount");
    }

    if (j.contains("base_spheres")) {
      for (const auto& s : j["base_spheres"]) {
        m.base_spheres.push_back(
            {parse_vec3(s.at("offset"), "base_spheres.offset"),
             s.at("radius").get<double>()});
      }
    }
    if (j.contains("self_collision")) {
      const auto& sc = j["self_collision"];
      if (sc.contains("exempt_pairs"))
        m.exempt_pairs = parse_pairs(sc["exempt_pairs"], "self_collision.exempt_pairs");
      if (sc.contains("force_check_pairs"))
        m.force_check_pairs =
            parse_pairs(sc["force_check_pairs"], "self_collision.force_check_pairs");
    }
    m.finalize();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("robot model: ") + e.what());
  }
}

RobotModel load_robot_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open robot model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_robot_model(ss.str());
}

}  // namespace dualdrm
