#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "artready/asset_model.hpp"

namespace artready {

using ordered_json = nlohmann::ordered_json;

struct LinkOverlay {
  std::optional<double> mass;
  std::optional<Inertia> inertia;
  std::optional<Triple> center_of_mass;
  /// Advisory or unrecognized members (material_override, _action, ...).
  ordered_json extra = ordered_json::object();
  bool operator==(const LinkOverlay&) const = default;
};

struct JointOverlay {
  std::optional<double> damping;
  std::optional<double> friction;
  std::optional<double> stiffness;
  /// Final limits fixed by validation (already scaled for prismatic joints).
  std::optional<JointLimits> limits;
  ordered_json extra = ordered_json::object();
  bool operator==(const JointOverlay&) const = default;
};

/// Structured edit set: global scale, per-link inertials, per-joint passive
/// dynamics, and an optional initial state.
struct Overlay {
  double uniform_scale_factor = 1.0;
  std::optional<ordered_json> material_properties;
  ordered_json global_extra = ordered_json::object();
  std::map<std::string, LinkOverlay> links;
  std::map<std::string, JointOverlay> joints;
  std::optional<std::map<std::string, double>> initial_joint_positions;
  ordered_json initial_extra = ordered_json::object();
  std::vector<std::string> validation_notes;
  /// Set by validate_overlay so a second pass does not rescale.
  bool validated = false;

  bool operator==(const Overlay&) const = default;
};

/// Parses the overlay wire format. Angular values given with a degree hint
/// ({"value": 30, "unit": "deg"} or "30deg") are converted to radians.
/// Throws Error(SchemaInvalid) naming the offending field path.
Overlay overlay_from_json(const ordered_json& doc);
ordered_json overlay_to_json(const Overlay& overlay);

double estimate_link_mass(double volume, double density, double scale, double hollow);

struct BoxShape {
  double w = 0.0;  // x
  double h = 0.0;  // y
  double d = 0.0;  // z
};

struct CylinderShape {
  double r = 0.0;
  double h = 0.0;  // along z
};

Inertia shape_inertia(double mass, const BoxShape& box);
Inertia shape_inertia(double mass, const CylinderShape& cylinder);

struct InertiaCheck {
  bool spd_ok = false;
  bool triangle_ok = false;
  bool offdiag_dropped = false;
  std::array<double, 3> principal_moments{};  // ascending
};

/// Symmetrizes within 1e-9 (else Error(Asymmetric)) and tests positive
/// definiteness, the principal-moment triangle inequality, and the
/// |I_ab| <= sqrt(I_aa I_bb) bound on each product of inertia.
InertiaCheck check_inertia(const Mat3& tensor);
inline InertiaCheck check_inertia(const Inertia& inertia) { return check_inertia(inertia.matrix()); }

/// Relative slack used for the triangle inequality.
inline constexpr double kTriangleSlack = 1e-9;

inline constexpr double kMinimalMass = 1e-3;
inline constexpr double kMinimalInertia = 1e-6;
inline constexpr double kLimitSlack = 1e-6;

struct OverlayValidation {
  Overlay overlay;
  std::vector<std::string> diagnostics;
};

/// Mechanical validation: fills missing links and joint triplets, repairs
/// inertias, scales prismatic quantities by s, widens limits so the initial
/// state is feasible. Negative or non-finite values are rejected with
/// Error(OverlayReject) carrying the field path.
OverlayValidation validate_overlay(const Overlay& overlay, const AssetModel& model);

/// Revised model. Throws Error(UnknownReference) for names the model lacks.
AssetModel apply_overlay(const AssetModel& model, const Overlay& overlay);

/// Default passive triplet for a joint type (revolute-like vs prismatic).
JointDynamics default_passive_dynamics(JointType type);

}  // namespace artready
