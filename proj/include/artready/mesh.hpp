#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "artready/asset_model.hpp"
#include "artready/geometry.hpp"

namespace artready {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

enum class VolumeSource { Exact, BboxEstimate };

std::string_view to_string(VolumeSource source);

struct MeshAnalysis {
  double volume = 0.0;
  double surface_area = 0.0;
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Zero();
  Vec3 center_of_mass = Vec3::Zero();
  bool watertight = false;
  VolumeSource volume_source = VolumeSource::BboxEstimate;

  Vec3 extents() const { return bbox_max - bbox_min; }
};

inline constexpr double kWeldTolerance = 1e-9;
inline constexpr double kDegenerateArea = 1e-12;

/// OBJ (v/f records, polygons fan-triangulated) or STL (ASCII or binary),
/// chosen by extension. The result is cleaned.
TriMesh load_mesh(const std::filesystem::path& path);
TriMesh parse_obj(std::string_view text);
TriMesh parse_stl(std::string_view bytes);

/// Welds vertices closer than `weld` and drops triangles with area below
/// `min_area` or repeated indices. Vertex order follows first use.
TriMesh clean_mesh(const TriMesh& mesh, double weld = kWeldTolerance, double min_area = kDegenerateArea);

MeshAnalysis analyze_mesh(const TriMesh& mesh);

/// Applies per-axis scale first, then the rigid transform.
TriMesh transform_mesh(const TriMesh& mesh, const Transform& pose, const Triple& scale = {1.0, 1.0, 1.0});
TriMesh merge_meshes(const std::vector<TriMesh>& meshes);

/// Convex hull as a consistently outward-oriented triangle mesh holding
/// only hull vertices. Throws PlanarDegeneracy for coplanar input.
TriMesh convex_hull(const TriMesh& mesh);
TriMesh convex_hull(const std::vector<Vec3>& points);

/// One mesh reference, scaled and placed in its link frame.
TriMesh load_mesh_ref(const AssetModel& model, const MeshRef& ref);

/// Geometry used for a link's statistics: collision meshes when present,
/// visual meshes otherwise; expressed in the link frame. Empty when the
/// link has no geometry.
TriMesh link_geometry(const AssetModel& model, const LinkSpec& link);

/// Per-link statistics for every link that carries geometry.
std::map<std::string, MeshAnalysis> analyze_links(const AssetModel& model);

}  // namespace artready
