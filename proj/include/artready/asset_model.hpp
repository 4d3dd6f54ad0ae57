#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artready/geometry.hpp"

namespace artready {

struct Pose {
  Triple xyz{0.0, 0.0, 0.0};
  Triple rpy{0.0, 0.0, 0.0};

  Transform transform() const { return make_transform(xyz, rpy); }
  bool operator==(const Pose&) const = default;
};

/// Six unique entries of a symmetric 3x3 inertia tensor (kg m^2).
struct Inertia {
  double ixx = 0.0;
  double iyy = 0.0;
  double izz = 0.0;
  double ixy = 0.0;
  double ixz = 0.0;
  double iyz = 0.0;

  Mat3 matrix() const;
  static Inertia from_matrix(const Mat3& m);
  static Inertia diagonal(double x, double y, double z) { return {x, y, z, 0.0, 0.0, 0.0}; }
  bool operator==(const Inertia&) const = default;
};

struct MeshRef {
  std::string filename;
  Triple scale{1.0, 1.0, 1.0};
  Pose origin;
  std::optional<std::array<double, 4>> rgba;
  std::string material;  // material name on visuals, may be empty
  std::string name;      // optional visual/collision element name
  bool operator==(const MeshRef&) const = default;
};

struct LinkSpec {
  std::string name;
  std::optional<double> mass;
  std::optional<Inertia> inertia;
  std::optional<Triple> center_of_mass;
  Triple inertial_rpy{0.0, 0.0, 0.0};
  std::vector<MeshRef> visual_meshes;
  std::vector<MeshRef> collision_meshes;
  /// Child elements this toolkit does not interpret, kept as raw XML.
  std::vector<std::string> opaque;
  bool operator==(const LinkSpec&) const = default;
};

enum class JointType { Revolute, Prismatic, Continuous, Fixed };

std::string_view to_string(JointType type);
std::optional<JointType> joint_type_from_string(std::string_view text);

struct JointLimits {
  double lower = 0.0;
  double upper = 0.0;
  bool operator==(const JointLimits&) const = default;
};

/// Passive joint dynamics: damping, friction, stiffness. Units follow the
/// joint type (angular: N m s/rad, N m, N m/rad; linear: N s/m, N, N/m).
struct JointDynamics {
  std::optional<double> damping;
  std::optional<double> friction;
  std::optional<double> stiffness;
  bool operator==(const JointDynamics&) const = default;
};

struct JointSpec {
  std::string name;
  JointType type = JointType::Fixed;
  std::string parent;
  std::string child;
  Pose origin;
  Triple axis{1.0, 0.0, 0.0};
  std::optional<JointLimits> limits;
  std::optional<double> effort;
  std::optional<double> velocity;
  std::optional<JointDynamics> dynamics;
  std::vector<std::string> opaque;

  bool active() const { return type != JointType::Fixed; }
  bool angular() const { return type == JointType::Revolute || type == JointType::Continuous; }
  bool operator==(const JointSpec&) const = default;
};

/// Parsed articulated object. Plain value type; `check_model` enforces the
/// structural invariants and every producer in the library calls it.
struct AssetModel {
  std::string name;
  std::vector<LinkSpec> links;
  std::vector<JointSpec> joints;
  std::string root;
  std::map<std::string, std::string> metadata;
  std::optional<std::map<std::string, double>> documented_initial_state;
  /// Uninterpreted top-level elements (transmissions, gazebo tags, materials).
  std::vector<std::string> opaque;
  /// Directory relative mesh references resolve against. Not serialized.
  std::filesystem::path base_dir;

  const LinkSpec* find_link(std::string_view link) const;
  const JointSpec* find_joint(std::string_view joint) const;
  LinkSpec* find_link(std::string_view link);
  JointSpec* find_joint(std::string_view joint);

  std::filesystem::path resolve(const std::string& mesh_filename) const;

  /// Field-wise equality on everything serialized (base_dir excluded).
  bool same_declared_fields(const AssetModel& other) const;
};

struct SemanticEntry {
  std::string semantic_label;
  std::string joint_kind;
  bool operator==(const SemanticEntry&) const = default;
};

struct SemanticMap {
  std::map<std::string, SemanticEntry> entries;
  std::vector<std::string> warnings;
};

/// Joint positions keyed by joint name (rad or m by joint type).
struct JointConfig {
  std::map<std::string, double> values;

  double get(const std::string& joint, double fallback = 0.0) const;
  bool operator==(const JointConfig&) const = default;
};

/// Precomputed parent/child relations over a validated model.
class KinematicTree {
 public:
  explicit KinematicTree(const AssetModel& model);

  int root() const { return root_; }
  int link_index(std::string_view name) const;  // -1 when absent
  int joint_index(std::string_view name) const;
  /// Joint whose child is `link`, or -1 for the root.
  int parent_joint(int link) const { return parent_joint_[link]; }
  const std::vector<int>& child_joints(int link) const { return child_joints_[link]; }
  /// Joint indices in parent-before-child order.
  const std::vector<int>& joint_order() const { return joint_order_; }
  /// Joints on the path from root to link, root side first.
  std::vector<int> root_path(int link) const;
  /// Joints on the tree path between two links, ordered from `a` towards
  /// the common ancestor then down to `b`.
  std::vector<int> path_between(int a, int b) const;
  bool adjacent(int link_a, int link_b) const;

 private:
  const AssetModel* model_;
  int root_ = -1;
  std::map<std::string, int, std::less<>> link_index_;
  std::map<std::string, int, std::less<>> joint_index_;
  std::vector<int> parent_joint_;
  std::vector<std::vector<int>> child_joints_;
  std::vector<int> joint_order_;
  std::vector<int> depth_;
};

/// Throws Error on any structural or value invariant violation.
void check_model(const AssetModel& model);

AssetModel parse_urdf(std::string_view text, std::filesystem::path base_dir = {});
AssetModel load_urdf(const std::filesystem::path& path);
std::string write_urdf(const AssetModel& model);

SemanticMap parse_semantics(std::string_view text);
SemanticMap load_semantics(const std::filesystem::path& path);
/// Semantic keys that name no link of `model`.
std::vector<std::string> orphan_semantics(const SemanticMap& semantics, const AssetModel& model);

/// Link poses for configuration q. Joints absent from q sit at zero.
std::map<std::string, Transform> forward_kinematics(const AssetModel& model, const JointConfig& q,
                                                    const Transform& base_pose = Transform::Identity());

/// Clamp into joint limits; continuous joints wrap to (-pi, pi]. Entries for
/// unknown or fixed joints are dropped.
JointConfig project_to_limits(const JointConfig& q, const AssetModel& model);

double wrap_angle(double angle);

/// Pose of a child link frame relative to its parent for joint position q.
Transform joint_transform(const JointSpec& joint, double q);

std::vector<std::string> active_joint_names(const AssetModel& model);

}  // namespace artready
