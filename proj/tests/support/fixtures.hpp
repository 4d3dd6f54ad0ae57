#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "artready/asset_model.hpp"

namespace fixtures {

using artready::Vec3;

/// Axis-aligned box given by its full size and center.
struct Box {
  Vec3 size;
  Vec3 center = Vec3::Zero();
};

std::string box_obj(const Box& box);
std::string box_stl_ascii(const Box& box);

struct LinkDef {
  std::string name;
  std::vector<Box> boxes;  // one collision mesh each
  /// Solid-box inertials at this density; none when 0.
  double density = 0.0;
};

struct JointDef {
  std::string name;
  artready::JointType type = artready::JointType::Revolute;
  std::string parent;
  std::string child;
  Vec3 xyz = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();
  double lower = 0.0;
  double upper = 0.0;
  std::optional<artready::JointDynamics> dynamics;
};

struct AssetDef {
  std::string name;
  std::vector<LinkDef> links;
  std::vector<JointDef> joints;
  std::optional<std::map<std::string, double>> initial_state;
  std::vector<std::string> semantics;  // "link kind label" lines
  std::string guidance;
};

/// Writes meshes, URDF and semantics under dir/name; returns the URDF path.
std::filesystem::path write_asset(const AssetDef& def, const std::filesystem::path& dir);
/// Model built in memory; mesh files are written under dir so hulls resolve.
artready::AssetModel build_model(const AssetDef& def, const std::filesystem::path& dir);

std::filesystem::path semantics_path(const AssetDef& def, const std::filesystem::path& dir);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

/// Box with a lid hinged on its back top edge; q > 0 opens the lid.
AssetDef hinged_box(double density, double damping, double stiffness, double lid_q = 0.0);
/// Flap on a vertical torsional spring with no damping or friction, released away from rest.
AssetDef stiff_hinge(double stiffness, double q0);
/// Ten articulated assets whose documented state penetrates but can be cleared.
std::vector<AssetDef> resolvable_suite();
/// Geometry that collides in every configuration of its only joint.
AssetDef impossible_asset();
/// Random tree of 2-6 solid boxes with damped revolute, prismatic or
/// continuous joints (no stiffness).
AssetDef random_passive_asset(unsigned seed);
/// Eleven-link cabinet with five handled drawers, two pushed into the back panel.
AssetDef large_cabinet();

}  // namespace fixtures
