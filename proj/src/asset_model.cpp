#include "artready/asset_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <utility>

#include "artready/error.hpp"
#include "artready/text.hpp"
#include "model_check.hpp"

namespace artready {

Mat3 Inertia::matrix() const {
  Mat3 m;
  m << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
  return m;
}

Inertia Inertia::from_matrix(const Mat3& m) {
  return {m(0, 0), m(1, 1), m(2, 2), m(0, 1), m(0, 2), m(1, 2)};
}

std::string_view to_string(JointType type) {
  switch (type) {
    case JointType::Revolute: return "revolute";
    case JointType::Prismatic: return "prismatic";
    case JointType::Continuous: return "continuous";
    case JointType::Fixed: return "fixed";
  }
  return "fixed";
}

std::optional<JointType> joint_type_from_string(std::string_view text) {
  if (text == "revolute") return JointType::Revolute;
  if (text == "prismatic") return JointType::Prismatic;
  if (text == "continuous") return JointType::Continuous;
  if (text == "fixed") return JointType::Fixed;
  return std::nullopt;
}

const LinkSpec* AssetModel::find_link(std::string_view link) const {
  for (const auto& l : links) {
    if (l.name == link) return &l;
  }
  return nullptr;
}

const JointSpec* AssetModel::find_joint(std::string_view joint) const {
  for (const auto& j : joints) {
    if (j.name == joint) return &j;
  }
  return nullptr;
}

LinkSpec* AssetModel::find_link(std::string_view link) {
  return const_cast<LinkSpec*>(std::as_const(*this).find_link(link));
}

JointSpec* AssetModel::find_joint(std::string_view joint) {
  return const_cast<JointSpec*>(std::as_const(*this).find_joint(joint));
}

std::filesystem::path AssetModel::resolve(const std::string& mesh_filename) const {
  std::string f = mesh_filename;
  if (f.rfind("file://", 0) == 0) {
    f = f.substr(7);
  } else if (f.rfind("package://", 0) == 0) {
    // Drop the package name; assets ship meshes beside the URDF.
    f = f.substr(10);
    const auto slash = f.find('/');
    f = slash == std::string::npos ? f : f.substr(slash + 1);
  }
  std::filesystem::path p(f);
  if (p.is_absolute()) return p;
  return base_dir / p;
}

bool AssetModel::same_declared_fields(const AssetModel& o) const {
  return name == o.name && links == o.links && joints == o.joints && root == o.root &&
         metadata == o.metadata && documented_initial_state == o.documented_initial_state &&
         opaque == o.opaque;
}

double JointConfig::get(const std::string& joint, double fallback) const {
  const auto it = values.find(joint);
  return it == values.end() ? fallback : it->second;
}

// ---------------------------------------------------------------------------

namespace detail {

namespace {

bool finite_nonneg(const std::optional<double>& v) { return !v || (std::isfinite(*v) && *v >= 0.0); }

bool finite3(const Triple& t) {
  return std::isfinite(t[0]) && std::isfinite(t[1]) && std::isfinite(t[2]);
}

}  // namespace

void check_model(const AssetModel& model, const Locator& where) {
  if (model.links.empty()) throw Error(ErrorKind::InvalidValue, "asset has no links", model.name);

  std::set<std::string> link_names;
  for (const auto& l : model.links) {
    if (l.name.empty()) throw Error(ErrorKind::InvalidValue, "link without name", where("link", l.name));
    if (!link_names.insert(l.name).second)
      throw Error(ErrorKind::DuplicateName, "duplicate link name '" + l.name + "'", where("link", l.name));
    if (l.mass && !(std::isfinite(*l.mass) && *l.mass > 0.0))
      throw Error(ErrorKind::InvalidValue, "mass must be positive and finite", where("link", l.name) + ".mass");
    if (l.inertia) {
      const auto& i = *l.inertia;
      for (double v : {i.ixx, i.iyy, i.izz, i.ixy, i.ixz, i.iyz}) {
        if (!std::isfinite(v))
          throw Error(ErrorKind::InvalidValue, "inertia entry not finite", where("link", l.name) + ".inertia");
      }
    }
    if (l.center_of_mass && !finite3(*l.center_of_mass))
      throw Error(ErrorKind::InvalidValue, "center of mass not finite", where("link", l.name));
    for (const auto* meshes : {&l.visual_meshes, &l.collision_meshes}) {
      for (const auto& m : *meshes) {
        if (!finite3(m.scale) || m.scale[0] <= 0.0 || m.scale[1] <= 0.0 || m.scale[2] <= 0.0)
          throw Error(ErrorKind::InvalidValue, "mesh scale must be positive", where("link", l.name));
      }
    }
  }

  std::set<std::string> joint_names;
  std::map<std::string, std::string> parent_of;
  for (const auto& j : model.joints) {
    const std::string loc = where("joint", j.name);
    if (j.name.empty()) throw Error(ErrorKind::InvalidValue, "joint without name", loc);
    if (!joint_names.insert(j.name).second)
      throw Error(ErrorKind::DuplicateName, "duplicate joint name '" + j.name + "'", loc);
    if (!link_names.count(j.parent))
      throw Error(ErrorKind::UnresolvedReference,
                  "joint '" + j.name + "' names missing parent link '" + j.parent + "'", loc);
    if (!link_names.count(j.child))
      throw Error(ErrorKind::UnresolvedReference,
                  "joint '" + j.name + "' names missing child link '" + j.child + "'", loc);
    if (j.parent == j.child)
      throw Error(ErrorKind::CyclicJointGraph, "joint '" + j.name + "' connects a link to itself", loc);
    if (!parent_of.emplace(j.child, j.name).second)
      throw Error(ErrorKind::CyclicJointGraph,
                  "link '" + j.child + "' has more than one parent joint ('" + parent_of[j.child] + "', '" +
                      j.name + "')",
                  loc);
    if (!finite3(j.origin.xyz) || !finite3(j.origin.rpy))
      throw Error(ErrorKind::InvalidValue, "joint origin not finite", loc);
    if (j.active()) {
      const double n = to_vec(j.axis).norm();
      if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9)
        throw Error(ErrorKind::InvalidValue, "joint axis must have unit norm", loc + ".axis");
    }
    if (j.type == JointType::Revolute || j.type == JointType::Prismatic) {
      if (!j.limits) throw Error(ErrorKind::InvalidValue, "limited joint without limits", loc + ".limit");
    }
    if (j.limits) {
      if (!std::isfinite(j.limits->lower) || !std::isfinite(j.limits->upper) || j.limits->lower > j.limits->upper)
        throw Error(ErrorKind::InvalidValue, "joint limits must satisfy lower <= upper", loc + ".limit");
    }
    if (j.dynamics) {
      if (!finite_nonneg(j.dynamics->damping))
        throw Error(ErrorKind::InvalidValue, "damping must be finite and >= 0", loc + ".dynamics.damping");
      if (!finite_nonneg(j.dynamics->friction))
        throw Error(ErrorKind::InvalidValue, "friction must be finite and >= 0", loc + ".dynamics.friction");
      if (!finite_nonneg(j.dynamics->stiffness))
        throw Error(ErrorKind::InvalidValue, "stiffness must be finite and >= 0", loc + ".dynamics.stiffness");
    }
  }

  std::vector<std::string> roots;
  for (const auto& l : model.links) {
    if (!parent_of.count(l.name)) roots.push_back(l.name);
  }
  if (roots.empty()) throw Error(ErrorKind::CyclicJointGraph, "joint graph has no root link", model.name);
  if (roots.size() > 1) {
    std::string names;
    for (const auto& r : roots) names += (names.empty() ? "" : ", ") + r;
    throw Error(ErrorKind::MultipleRoots, "joint graph has multiple roots: " + names, where("link", roots[1]));
  }
  // Every link must hang off the root; anything else sits on a cycle.
  std::map<std::string, std::vector<std::string>> children;
  for (const auto& j : model.joints) children[j.parent].push_back(j.child);
  std::set<std::string> seen{roots[0]};
  std::vector<std::string> stack{roots[0]};
  while (!stack.empty()) {
    const std::string cur = stack.back();
    stack.pop_back();
    for (const auto& c : children[cur]) {
      if (seen.insert(c).second) stack.push_back(c);
    }
  }
  for (const auto& j : model.joints) {
    if (!seen.count(j.child))
      throw Error(ErrorKind::CyclicJointGraph, "joint '" + j.name + "' lies on a cycle", where("joint", j.name));
  }
  if (!model.root.empty() && model.root != roots[0])
    throw Error(ErrorKind::InvalidValue, "declared root '" + model.root + "' is not the tree root", model.name);

  if (model.documented_initial_state) {
    for (const auto& [name, value] : *model.documented_initial_state) {
      const JointSpec* j = model.find_joint(name);
      if (!j || !j->active())
        throw Error(ErrorKind::UnknownJoint, "documented state names unknown joint '" + name + "'", name);
      if (!std::isfinite(value))
        throw Error(ErrorKind::InvalidValue, "documented state value not finite", name);
    }
  }
}

std::string default_locator(std::string_view kind, std::string_view name) {
  return std::string(kind) + " '" + std::string(name) + "'";
}

}  // namespace detail

void check_model(const AssetModel& model) { detail::check_model(model, detail::default_locator); }

// ---------------------------------------------------------------------------

KinematicTree::KinematicTree(const AssetModel& model) : model_(&model) {
  for (size_t i = 0; i < model.links.size(); ++i) link_index_.emplace(model.links[i].name, static_cast<int>(i));
  for (size_t i = 0; i < model.joints.size(); ++i) joint_index_.emplace(model.joints[i].name, static_cast<int>(i));
  parent_joint_.assign(model.links.size(), -1);
  child_joints_.assign(model.links.size(), {});
  for (size_t i = 0; i < model.joints.size(); ++i) {
    const int c = link_index(model.joints[i].child);
    const int p = link_index(model.joints[i].parent);
    if (c < 0 || p < 0) throw Error(ErrorKind::UnresolvedReference, "joint references missing link", model.joints[i].name);
    parent_joint_[c] = static_cast<int>(i);
    child_joints_[p].push_back(static_cast<int>(i));
  }
  for (size_t i = 0; i < model.links.size(); ++i) {
    if (parent_joint_[i] < 0) {
      root_ = static_cast<int>(i);
      break;
    }
  }
  if (root_ < 0) throw Error(ErrorKind::CyclicJointGraph, "no root link", model.name);
  depth_.assign(model.links.size(), 0);
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int link = stack.back();
    stack.pop_back();
    // Reverse push keeps siblings in declaration order.
    const auto& kids = child_joints_[link];
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      joint_order_.push_back(*it);
      const int c = link_index(model.joints[*it].child);
      depth_[c] = depth_[link] + 1;
      stack.push_back(c);
    }
  }
  // joint_order_ above is only parent-before-child per branch; make it a
  // stable breadth ordering by depth so callers get a canonical sequence.
  std::stable_sort(joint_order_.begin(), joint_order_.end(), [&](int a, int b) {
    return depth_[link_index(model.joints[a].child)] < depth_[link_index(model.joints[b].child)];
  });
}

int KinematicTree::link_index(std::string_view name) const {
  const auto it = link_index_.find(name);
  return it == link_index_.end() ? -1 : it->second;
}

int KinematicTree::joint_index(std::string_view name) const {
  const auto it = joint_index_.find(name);
  return it == joint_index_.end() ? -1 : it->second;
}

std::vector<int> KinematicTree::root_path(int link) const {
  std::vector<int> path;
  while (parent_joint_[link] >= 0) {
    const int j = parent_joint_[link];
    path.push_back(j);
    link = link_index(model_->joints[j].parent);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> KinematicTree::path_between(int a, int b) const {
  std::vector<int> up_a;
  std::vector<int> up_b;
  while (depth_[a] > depth_[b]) {
    up_a.push_back(parent_joint_[a]);
    a = link_index(model_->joints[parent_joint_[a]].parent);
  }
  while (depth_[b] > depth_[a]) {
    up_b.push_back(parent_joint_[b]);
    b = link_index(model_->joints[parent_joint_[b]].parent);
  }
  while (a != b) {
    up_a.push_back(parent_joint_[a]);
    a = link_index(model_->joints[parent_joint_[a]].parent);
    up_b.push_back(parent_joint_[b]);
    b = link_index(model_->joints[parent_joint_[b]].parent);
  }
  up_a.insert(up_a.end(), up_b.rbegin(), up_b.rend());
  return up_a;
}

bool KinematicTree::adjacent(int link_a, int link_b) const {
  const auto joined = [&](int child, int parent) {
    const int j = parent_joint_[child];
    return j >= 0 && link_index(model_->joints[j].parent) == parent;
  };
  return joined(link_a, link_b) || joined(link_b, link_a);
}

// ---------------------------------------------------------------------------

double wrap_angle(double angle) {
  double r = std::remainder(angle, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

Transform joint_transform(const JointSpec& joint, double q) {
  Transform t = joint.origin.transform();
  switch (joint.type) {
    case JointType::Revolute:
    case JointType::Continuous:
      t.rotate(Eigen::AngleAxisd(q, to_vec(joint.axis)));
      break;
    case JointType::Prismatic:
      t.translate(q * to_vec(joint.axis));
      break;
    case JointType::Fixed:
      break;
  }
  return t;
}

std::map<std::string, Transform> forward_kinematics(const AssetModel& model, const JointConfig& q,
                                                    const Transform& base_pose) {
  for (const auto& [name, value] : q.values) {
    if (!model.find_joint(name)) throw Error(ErrorKind::UnknownJoint, "configuration names unknown joint", name);
  }
  const KinematicTree tree(model);
  std::map<std::string, Transform> poses;
  poses.emplace(model.links[tree.root()].name, base_pose);
  for (int ji : tree.joint_order()) {
    const auto& j = model.joints[ji];
    const double value = j.active() ? q.get(j.name) : 0.0;
    poses.insert_or_assign(j.child, poses.at(j.parent) * joint_transform(j, value));
  }
  return poses;
}

JointConfig project_to_limits(const JointConfig& q, const AssetModel& model) {
  JointConfig out;
  for (const auto& [name, value] : q.values) {
    const JointSpec* j = model.find_joint(name);
    if (!j || !j->active()) continue;
    double v = value;
    if (j->type == JointType::Continuous) {
      v = std::isfinite(v) ? wrap_angle(v) : 0.0;
    } else if (j->limits) {
      if (std::isnan(v)) v = j->limits->lower;
      v = std::clamp(v, j->limits->lower, j->limits->upper);
    }
    out.values.emplace(name, v);
  }
  return out;
}

std::vector<std::string> active_joint_names(const AssetModel& model) {
  std::vector<std::string> out;
  for (const auto& j : model.joints) {
    if (j.active()) out.push_back(j.name);
  }
  return out;
}

// ---------------------------------------------------------------------------

SemanticMap parse_semantics(std::string_view text) {
  SemanticMap out;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_ws(line);
    if (fields.size() < 3)
      throw Error(ErrorKind::SemanticsParse, "expected 'link joint_kind label', got " + std::to_string(fields.size()) +
                                                 " field(s)",
                  "line " + std::to_string(line_no));
    std::string label = fields[2];
    for (size_t i = 3; i < fields.size(); ++i) label += " " + fields[i];
    if (out.entries.count(fields[0])) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": duplicate entry for '" + fields[0] +
                             "', keeping the later one");
    }
    out.entries.insert_or_assign(fields[0], SemanticEntry{label, fields[1]});
  }
  return out;
}

SemanticMap load_semantics(const std::filesystem::path& path) { return parse_semantics(read_file(path.string())); }

std::vector<std::string> orphan_semantics(const SemanticMap& semantics, const AssetModel& model) {
  std::vector<std::string> out;
  for (const auto& [link, entry] : semantics.entries) {
    if (!model.find_link(link)) out.push_back(link);
  }
  return out;
}

}  // namespace artready
