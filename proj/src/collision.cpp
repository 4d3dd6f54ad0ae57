#include "artready/collision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "artready/error.hpp"

namespace artready {

std::vector<std::pair<LinkPair, double>> ContactReport::ranked_pairs() const {
  std::vector<std::pair<LinkPair, double>> out;
  for (const auto& [pair, depth] : per_pair_penetration) {
    if (depth > 0.0) out.emplace_back(pair, depth);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

int ContactReport::penetrating_count() const {
  int n = 0;
  for (const auto& c : contacts) n += c.signed_separation < 0.0 ? 1 : 0;
  return n;
}

ConvexShape make_convex_shape(const TriMesh& hull) {
  ConvexShape s;
  s.vertices = hull.vertices;
  s.triangles = hull.triangles;
  Vec3 lo = hull.vertices.front();
  Vec3 hi = lo;
  for (const auto& v : hull.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  s.center = 0.5 * (lo + hi);
  for (const auto& v : hull.vertices) s.radius = std::max(s.radius, (v - s.center).norm());

  std::vector<Vec3> tri_normal;
  for (const auto& t : hull.triangles) {
    tri_normal.push_back(
        (hull.vertices[t[1]] - hull.vertices[t[0]]).cross(hull.vertices[t[2]] - hull.vertices[t[0]]).normalized());
  }
  for (const auto& n : tri_normal) {
    const bool dup = std::any_of(s.face_normals.begin(), s.face_normals.end(),
                                 [&](const Vec3& m) { return n.dot(m) > 1.0 - 1e-9; });
    if (!dup) s.face_normals.push_back(n);
  }
  std::map<std::pair<int, int>, int> directed;
  for (size_t i = 0; i < hull.triangles.size(); ++i) {
    const auto& t = hull.triangles[i];
    for (int k = 0; k < 3; ++k) directed[{t[k], t[(k + 1) % 3]}] = static_cast<int>(i);
  }
  for (const auto& [edge, face] : directed) {
    if (edge.first > edge.second) continue;
    s.all_edges.push_back(edge);
    const auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end()) continue;
    const Vec3& n1 = tri_normal[face];
    const Vec3& n2 = tri_normal[rev->second];
    if (n1.dot(n2) > 1.0 - 1e-9) continue;  // diagonal inside a flat face
    s.edges.push_back({edge.first, edge.second, n1, n2});
  }
  return s;
}

namespace {

struct Interval {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  int lo_index = -1;
  int hi_index = -1;
};

Interval project(const std::vector<Vec3>& pts, const Vec3& axis) {
  Interval r;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double d = pts[i].dot(axis);
    if (d < r.lo) r.lo = d, r.lo_index = i;
    if (d > r.hi) r.hi = d, r.hi_index = i;
  }
  return r;
}

// Arcs (a,b) and (c,d) on the Gauss map intersect iff the edges build a face
// of the Minkowski difference; only those cross products can be the minimum.
bool minkowski_face(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 bxa = b.cross(a);
  const Vec3 dxc = d.cross(c);
  const double cba = c.dot(bxa);
  const double dba = d.dot(bxa);
  const double adc = a.dot(dxc);
  const double bdc = b.dot(dxc);
  return cba * dba < 0.0 && adc * bdc < 0.0 && cba * bdc > 0.0;
}

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

std::pair<Vec3, Vec3> closest_between_segments(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1;
  const Vec3 d2 = q2 - p2;
  const Vec3 r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= 1e-300 && e <= 1e-300) return {p1, p2};
  if (a <= 1e-300) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-300) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return {p1 + d1 * s, p2 + d2 * t};
}

// Exact distance between disjoint convex polytopes via closest features.
ShapeContact closest_features(const ConvexShape& a, const std::vector<Vec3>& va, const ConvexShape& b,
                              const std::vector<Vec3>& vb) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 pa = Vec3::Zero();
  Vec3 pb = Vec3::Zero();
  const auto consider = [&](const Vec3& x, const Vec3& y) {
    const double d = (y - x).squaredNorm();
    if (d < best) best = d, pa = x, pb = y;
  };
  for (const auto& p : va) {
    for (const auto& t : b.triangles) consider(p, closest_on_triangle(p, vb[t[0]], vb[t[1]], vb[t[2]]));
  }
  for (const auto& p : vb) {
    for (const auto& t : a.triangles) consider(closest_on_triangle(p, va[t[0]], va[t[1]], va[t[2]]), p);
  }
  for (const auto& ea : a.all_edges) {
    for (const auto& eb : b.all_edges) {
      const auto [x, y] = closest_between_segments(va[ea.first], va[ea.second], vb[eb.first], vb[eb.second]);
      consider(x, y);
    }
  }
  ShapeContact c;
  c.signed_separation = std::sqrt(best);
  c.point = 0.5 * (pa + pb);
  const Vec3 d = pb - pa;
  c.normal = d.norm() > 0.0 ? Vec3(d.normalized()) : Vec3::UnitZ();
  return c;
}

std::vector<Vec3> world_vertices(const ConvexShape& s, const Transform& pose) {
  std::vector<Vec3> out;
  out.reserve(s.vertices.size());
  for (const auto& v : s.vertices) out.push_back(pose * v);
  return out;
}

}  // namespace

std::optional<ShapeContact> shape_contact(const ConvexShape& a, const Transform& pose_a, const ConvexShape& b,
                                          const Transform& pose_b, double margin) {
  const Vec3 ca = pose_a * a.center;
  const Vec3 cb = pose_b * b.center;
  if ((cb - ca).norm() > a.radius + b.radius + margin) return std::nullopt;

  const std::vector<Vec3> va = world_vertices(a, pose_a);
  const std::vector<Vec3> vb = world_vertices(b, pose_b);

  // Largest signed gap over candidate axes, axis oriented from a to b.
  double best_sep = -std::numeric_limits<double>::infinity();
  Vec3 best_axis = Vec3::UnitZ();
  const auto test_axis = [&](const Vec3& axis) {
    const Interval ia = project(va, axis);
    const Interval ib = project(vb, axis);
    const double forward = ib.lo - ia.hi;   // b beyond a along +axis
    const double backward = ia.lo - ib.hi;  // b beyond a along -axis
    if (forward > best_sep) best_sep = forward, best_axis = axis;
    if (backward > best_sep) best_sep = backward, best_axis = -axis;
  };
  for (const auto& n : a.face_normals) test_axis(pose_a.linear() * n);
  for (const auto& n : b.face_normals) test_axis(pose_b.linear() * n);
  for (const auto& ea : a.edges) {
    const Vec3 a1 = pose_a.linear() * ea.n1;
    const Vec3 a2 = pose_a.linear() * ea.n2;
    const Vec3 da = va[ea.b] - va[ea.a];
    for (const auto& eb : b.edges) {
      const Vec3 b1 = pose_b.linear() * eb.n1;
      const Vec3 b2 = pose_b.linear() * eb.n2;
      if (!minkowski_face(a1, a2, -b1, -b2)) continue;
      const Vec3 axis = da.cross(vb[eb.b] - vb[eb.a]);
      const double len = axis.norm();
      if (len < 1e-12 * std::max(1.0, da.squaredNorm())) continue;
      test_axis(axis / len);
    }
  }

  if (best_sep > 0.0) {
    if (best_sep > margin) return std::nullopt;  // the gap bounds the distance from below
    ShapeContact c = closest_features(a, va, b, vb);
    if (c.signed_separation > margin) return std::nullopt;
    return c;
  }
  const Interval ia = project(va, best_axis);
  const Interval ib = project(vb, best_axis);
  ShapeContact c;
  c.normal = best_axis;
  c.signed_separation = best_sep == 0.0 ? 0.0 : best_sep;
  c.point = 0.5 * (va[ia.hi_index] + vb[ib.lo_index]);
  return c;
}

// ---------------------------------------------------------------------------

CollisionModel::CollisionModel(const AssetModel& model, CollisionOptions options)
    : model_(model), options_(options) {
  for (const auto& link : model_.links) {
    const auto& refs = link.collision_meshes.empty() ? link.visual_meshes : link.collision_meshes;
    std::vector<ConvexShape> shapes;
    for (const auto& ref : refs) shapes.push_back(make_convex_shape(convex_hull(load_mesh_ref(model_, ref))));
    if (!shapes.empty()) hulls_.emplace(link.name, std::move(shapes));
  }
  const KinematicTree tree(model_);
  std::vector<LinkPair> all;
  for (size_t i = 0; i < model_.links.size(); ++i) {
    if (!hulls_.count(model_.links[i].name)) continue;
    for (size_t j = i + 1; j < model_.links.size(); ++j) {
      if (!hulls_.count(model_.links[j].name)) continue;
      all.emplace_back(model_.links[i].name, model_.links[j].name);
    }
  }
  JointConfig rest;
  for (const auto& name : active_joint_names(model_)) rest.values[name] = 0.0;
  rest = project_to_limits(rest, model_);
  const auto poses = forward_kinematics(model_, rest);
  for (const auto& pair : all) {
    const bool adjacent = tree.adjacent(tree.link_index(pair.first), tree.link_index(pair.second));
    if (adjacent && options_.skip_resting_adjacent_overlap && pair_depth(poses, pair, nullptr) > 1e-9) {
      excluded_.push_back(pair);
    } else {
      pairs_.push_back(pair);
    }
  }
}

const std::vector<ConvexShape>& CollisionModel::hulls(const std::string& link) const {
  static const std::vector<ConvexShape> kNone;
  const auto it = hulls_.find(link);
  return it == hulls_.end() ? kNone : it->second;
}

double CollisionModel::pair_depth(const std::map<std::string, Transform>& poses, const LinkPair& pair,
                                  std::optional<ShapeContact>* best) const {
  const auto& ha = hulls_.at(pair.first);
  const auto& hb = hulls_.at(pair.second);
  const Transform& ta = poses.at(pair.first);
  const Transform& tb = poses.at(pair.second);
  std::optional<ShapeContact> deepest;
  for (const auto& sa : ha) {
    for (const auto& sb : hb) {
      auto c = shape_contact(sa, ta, sb, tb, options_.margin);
      if (c && (!deepest || c->signed_separation < deepest->signed_separation)) deepest = c;
    }
  }
  if (best) *best = deepest;
  return deepest ? std::max(0.0, -deepest->signed_separation) : 0.0;
}

ContactReport CollisionModel::contacts(const JointConfig& q, const std::optional<Plane>& ground,
                                       const Transform& base_pose) const {
  const auto poses = forward_kinematics(model_, q, base_pose);
  ContactReport report;
  for (const auto& pair : pairs_) {
    std::optional<ShapeContact> c;
    const double depth = pair_depth(poses, pair, &c);
    if (!c) continue;
    report.contacts.push_back({pair, c->point, c->normal, c->signed_separation});
    report.per_pair_penetration[pair] = depth;
  }
  if (ground) {
    const Vec3 n = ground->normal.normalized();
    for (const auto& link : model_.links) {
      const auto it = hulls_.find(link.name);
      if (it == hulls_.end()) continue;
      const Transform& pose = poses.at(link.name);
      double lowest = std::numeric_limits<double>::infinity();
      Vec3 point = Vec3::Zero();
      for (const auto& shape : it->second) {
        for (const auto& v : shape.vertices) {
          const Vec3 w = pose * v;
          const double d = n.dot(w) - ground->offset;
          if (d < lowest) lowest = d, point = w;
        }
      }
      if (lowest > options_.margin) continue;
      const LinkPair pair{link.name, kGround};
      const double sep = lowest == 0.0 ? 0.0 : lowest;
      report.contacts.push_back({pair, point, -n, sep});
      report.per_pair_penetration[pair] = std::max(0.0, -sep);
    }
  }
  for (const auto& [pair, depth] : report.per_pair_penetration) report.total += depth;
  return report;
}

double CollisionModel::penetration(const JointConfig& q) const {
  const auto poses = forward_kinematics(model_, q);
  double total = 0.0;
  for (const auto& pair : pairs_) total += pair_depth(poses, pair, nullptr);
  return total;
}

double CollisionModel::pair_penetration(const JointConfig& q, const LinkPair& pair) const {
  if (!hulls_.count(pair.first) || !hulls_.count(pair.second)) return 0.0;
  return pair_depth(forward_kinematics(model_, q), pair, nullptr);
}

ContactReport compute_contacts(const AssetModel& model, const JointConfig& q, const std::optional<Plane>& ground) {
  return CollisionModel(model).contacts(q, ground);
}

double penetration_score(const ContactReport& report) {
  double total = 0.0;
  for (const auto& c : report.contacts) total += std::max(0.0, -c.signed_separation);
  return total;
}

std::vector<std::string> localize_focus_joints(const AssetModel& model, const ContactReport& report, std::size_t cap) {
  const KinematicTree tree(model);
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& [pair, depth] : report.ranked_pairs()) {
    const int a = tree.link_index(pair.first);
    if (a < 0) continue;
    std::vector<int> path;
    if (pair.second == kGround) {
      path = tree.root_path(a);
    } else {
      const int b = tree.link_index(pair.second);
      if (b < 0) continue;
      path = tree.path_between(a, b);
    }
    for (int ji : path) {
      const auto& j = model.joints[ji];
      if (j.active() && seen.insert(j.name).second) out.push_back(j.name);
    }
  }
  if (out.size() > cap) out.resize(cap);
  return out;
}

std::vector<std::string> direct_colliding_joints(const AssetModel& model, const ContactReport& report) {
  std::vector<std::string> out;
  for (const auto& [pair, depth] : report.ranked_pairs()) {
    for (const auto& j : model.joints) {
      const bool direct = (j.parent == pair.first && j.child == pair.second) ||
                          (j.parent == pair.second && j.child == pair.first);
      if (direct && j.active() && std::find(out.begin(), out.end(), j.name) == out.end()) out.push_back(j.name);
    }
  }
  return out;
}

std::string severity_band(double penetration_sum) {
  if (penetration_sum < 0.01) return "minor";
  if (penetration_sum < 0.05) return "moderate";
  return "significant";
}

}  // namespace artready
