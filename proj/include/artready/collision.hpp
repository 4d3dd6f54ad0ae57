#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "artready/asset_model.hpp"
#include "artready/mesh.hpp"

namespace artready {

/// Half-space boundary normal . x = offset; the normal points out of the ground.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

/// Name used as the second member of a link-vs-ground pair.
inline const std::string kGround = "<ground>";

using LinkPair = std::pair<std::string, std::string>;

struct Contact {
  LinkPair pair;
  Vec3 point = Vec3::Zero();
  /// Unit direction from pair.first towards pair.second.
  Vec3 normal = Vec3::UnitZ();
  /// Negative when penetrating.
  double signed_separation = 0.0;
};

struct ContactReport {
  std::vector<Contact> contacts;
  std::map<LinkPair, double> per_pair_penetration;
  double total = 0.0;

  /// Pairs with positive penetration, deepest first; ties keep pair order.
  std::vector<std::pair<LinkPair, double>> ranked_pairs() const;
  int penetrating_count() const;
};

/// Convex collision shape in its link frame, with the feature lists the
/// separating-axis and closest-feature queries need.
struct ConvexShape {
  struct Edge {
    int a = 0;
    int b = 0;
    Vec3 n1 = Vec3::Zero();  // normals of the two incident hull faces
    Vec3 n2 = Vec3::Zero();
  };
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> face_normals;  // de-duplicated
  std::vector<Edge> edges;         // feature edges only (no coplanar diagonals)
  std::vector<std::pair<int, int>> all_edges;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

ConvexShape make_convex_shape(const TriMesh& hull);

struct ShapeContact {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // from a towards b
  double signed_separation = 0.0;
};

/// Penetration depth (minimum translation) for overlapping shapes, exact
/// distance for shapes separated by at most `margin`, nullopt otherwise.
std::optional<ShapeContact> shape_contact(const ConvexShape& a, const Transform& pose_a, const ConvexShape& b,
                                          const Transform& pose_b, double margin);

struct CollisionOptions {
  double margin = 0.005;
  /// Skip jointed neighbours whose geometry already overlaps with every
  /// joint at zero (clamped into limits): that overlap is structural.
  bool skip_resting_adjacent_overlap = true;
};

/// Hulls for every link, built once and reused across configurations.
class CollisionModel {
 public:
  explicit CollisionModel(const AssetModel& model, CollisionOptions options = {});

  const AssetModel& model() const { return model_; }
  const CollisionOptions& options() const { return options_; }
  const std::vector<ConvexShape>& hulls(const std::string& link) const;
  const std::vector<LinkPair>& candidate_pairs() const { return pairs_; }
  const std::vector<LinkPair>& excluded_adjacent_pairs() const { return excluded_; }

  ContactReport contacts(const JointConfig& q, const std::optional<Plane>& ground = std::nullopt,
                         const Transform& base_pose = Transform::Identity()) const;
  /// Self-penetration score at q (ground ignored).
  double penetration(const JointConfig& q) const;
  /// Penetration of one link pair at q.
  double pair_penetration(const JointConfig& q, const LinkPair& pair) const;

 private:
  double pair_depth(const std::map<std::string, Transform>& poses, const LinkPair& pair,
                    std::optional<ShapeContact>* best) const;

  AssetModel model_;
  CollisionOptions options_;
  std::map<std::string, std::vector<ConvexShape>> hulls_;
  std::vector<LinkPair> pairs_;
  std::vector<LinkPair> excluded_;
};

ContactReport compute_contacts(const AssetModel& model, const JointConfig& q,
                               const std::optional<Plane>& ground = std::nullopt);

/// Sum over contacts of max(0, -signed_separation).
double penetration_score(const ContactReport& report);

/// Active joints on the tree paths of the most severely penetrating pairs
/// (root path for ground pairs), deduplicated, at most `cap`.
std::vector<std::string> localize_focus_joints(const AssetModel& model, const ContactReport& report,
                                               std::size_t cap = 8);

/// Active joints that directly connect a penetrating pair.
std::vector<std::string> direct_colliding_joints(const AssetModel& model, const ContactReport& report);

/// Summed-penetration band: minor below 0.01 m, moderate below 0.05 m.
std::string severity_band(double penetration_sum);

}  // namespace artready
