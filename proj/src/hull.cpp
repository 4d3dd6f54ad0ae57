// Incremental 3D convex hull. Each point not inside the current hull removes
// the faces it can see and is stitched to the horizon. Points are visited in
// index order so the output is deterministic.

#include <algorithm>
#include <cmath>
#include <map>

#include "artready/error.hpp"
#include "artready/mesh.hpp"

namespace artready {

namespace {

struct Face {
  std::array<int, 3> v;
  Vec3 normal;
  double offset;  // normal . x = offset on the plane
  bool alive = true;
};

Face make_face(const std::vector<Vec3>& pts, int a, int b, int c) {
  Face f{{a, b, c}, Vec3::Zero(), 0.0};
  f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double n = f.normal.norm();
  if (n > 0.0) f.normal /= n;
  f.offset = f.normal.dot(pts[a]);
  return f;
}

}  // namespace

TriMesh convex_hull(const std::vector<Vec3>& pts) {
  if (pts.size() < 4) throw Error(ErrorKind::PlanarDegeneracy, "hull needs at least 4 points");
  Vec3 lo = pts[0];
  Vec3 hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = (hi - lo).norm();
  const double eps = std::max(diag, 1e-300) * 1e-12;

  // Initial simplex from extreme points.
  int i0 = 0;
  for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
    if (pts[i].x() < pts[i0].x()) i0 = i;
  }
  int i1 = -1;
  double best = -1.0;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double d = (pts[i] - pts[i0]).squaredNorm();
    if (d > best) best = d, i1 = i;
  }
  if (std::sqrt(best) <= eps) throw Error(ErrorKind::PlanarDegeneracy, "all points coincide");
  const Vec3 dir = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  best = -1.0;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const Vec3 r = pts[i] - pts[i0];
    const double d = (r - r.dot(dir) * dir).squaredNorm();
    if (d > best) best = d, i2 = i;
  }
  if (std::sqrt(best) <= eps) throw Error(ErrorKind::PlanarDegeneracy, "all points are collinear");
  const Vec3 n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = -1.0;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double d = std::abs(n.dot(pts[i] - pts[i0]));
    if (d > best) best = d, i3 = i;
  }
  if (best <= eps * 10.0) throw Error(ErrorKind::PlanarDegeneracy, "all points are coplanar");

  std::vector<Face> faces;
  if (n.dot(pts[i3] - pts[i0]) < 0.0) {
    faces = {make_face(pts, i0, i1, i2), make_face(pts, i0, i3, i1), make_face(pts, i1, i3, i2),
             make_face(pts, i2, i3, i0)};
  } else {
    faces = {make_face(pts, i0, i2, i1), make_face(pts, i0, i1, i3), make_face(pts, i1, i2, i3),
             make_face(pts, i2, i0, i3)};
  }

  std::map<std::pair<int, int>, int> edge_face;
  const auto index_face = [&](int fi) {
    const auto& f = faces[fi];
    for (int k = 0; k < 3; ++k) edge_face[{f.v[k], f.v[(k + 1) % 3]}] = fi;
  };
  for (int fi = 0; fi < 4; ++fi) index_face(fi);

  std::vector<int> visible;
  std::vector<std::pair<int, int>> horizon;
  for (int p = 0; p < static_cast<int>(pts.size()); ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    visible.clear();
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
      if (faces[fi].alive && faces[fi].normal.dot(pts[p]) - faces[fi].offset > eps) visible.push_back(fi);
    }
    if (visible.empty()) continue;
    horizon.clear();
    for (int fi : visible) faces[fi].alive = false;
    for (int fi : visible) {
      const auto& f = faces[fi];
      for (int k = 0; k < 3; ++k) {
        const int a = f.v[k];
        const int b = f.v[(k + 1) % 3];
        const auto it = edge_face.find({b, a});
        if (it != edge_face.end() && faces[it->second].alive) horizon.emplace_back(a, b);
      }
    }
    for (int fi : visible) {
      const auto& f = faces[fi];
      for (int k = 0; k < 3; ++k) edge_face.erase({f.v[k], f.v[(k + 1) % 3]});
    }
    for (const auto& [a, b] : horizon) {
      faces.push_back(make_face(pts, a, b, p));
      index_face(static_cast<int>(faces.size()) - 1);
    }
  }

  TriMesh out;
  std::map<int, int> remap;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    std::array<int, 3> t{};
    for (int k = 0; k < 3; ++k) {
      auto [it, inserted] = remap.emplace(f.v[k], static_cast<int>(out.vertices.size()));
      if (inserted) out.vertices.push_back(pts[f.v[k]]);
      t[k] = it->second;
    }
    out.triangles.push_back(t);
  }
  return out;
}

TriMesh convex_hull(const TriMesh& mesh) { return convex_hull(mesh.vertices); }

}  // namespace artready
