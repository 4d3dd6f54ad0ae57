#include "artready/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

namespace {

[[noreturn]] void schema_error(const std::string& message, const std::string& path) {
  throw Error(ErrorKind::SchemaInvalid, message, path);
}

double number_at(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) schema_error("expected a number", path);
  return v.get<double>();
}

// Bare numbers are radians; degree hints are converted.
double angle_at(const ordered_json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_object() && v.contains("value")) {
    const double x = number_at(v.at("value"), path + ".value");
    const std::string unit = v.contains("unit") && v.at("unit").is_string() ? to_lower(v.at("unit").get<std::string>()) : "";
    if (unit == "deg" || unit == "degree" || unit == "degrees") return x * std::numbers::pi / 180.0;
    if (unit.empty() || unit == "rad" || unit == "radian" || unit == "radians" || unit == "m") return x;
    schema_error("unknown unit '" + unit + "'", path + ".unit");
  }
  if (v.is_string()) {
    std::string s = trim(v.get<std::string>());
    double factor = 1.0;
    for (const std::string_view suffix : {"degrees", "degree", "deg", "\xC2\xB0"}) {
      if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        s = trim(s.substr(0, s.size() - suffix.size()));
        factor = std::numbers::pi / 180.0;
        break;
      }
    }
    if (factor == 1.0) {
      for (const std::string_view suffix : {"rad", "m"}) {
        if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
          s = trim(s.substr(0, s.size() - suffix.size()));
          break;
        }
      }
    }
    if (const auto d = parse_number(s)) return *d * factor;
  }
  schema_error("expected a joint position", path);
}

Triple triple_at(const ordered_json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) schema_error("expected an array of 3 numbers", path);
  return {number_at(v[0], path + "[0]"), number_at(v[1], path + "[1]"), number_at(v[2], path + "[2]")};
}

const ordered_json& object_at(const ordered_json& doc, const std::string& key, const std::string& path) {
  const auto& v = doc.at(key);
  if (!v.is_object()) schema_error("expected an object", path);
  return v;
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

[[noreturn]] void reject(const std::string& message, const std::string& path) {
  throw Error(ErrorKind::OverlayReject, message, path);
}

}  // namespace

Overlay overlay_from_json(const ordered_json& doc) {
  if (!doc.is_object()) schema_error("overlay must be a JSON object", "$");
  Overlay o;
  if (!doc.contains("global_modifications")) schema_error("missing global_modifications", "global_modifications");
  const auto& global = object_at(doc, "global_modifications", "global_modifications");
  if (!global.contains("uniform_scale_factor"))
    schema_error("missing uniform_scale_factor", "global_modifications.uniform_scale_factor");
  for (const auto& [key, value] : global.items()) {
    const std::string path = "global_modifications." + key;
    if (key == "uniform_scale_factor") {
      o.uniform_scale_factor = number_at(value, path);
    } else if (key == "material_properties") {
      if (!value.is_object()) schema_error("expected an object", path);
      o.material_properties = value;
    } else {
      o.global_extra[key] = value;
    }
  }

  if (doc.contains("link_modifications")) {
    for (const auto& [name, entry] : object_at(doc, "link_modifications", "link_modifications").items()) {
      const std::string base = "link_modifications." + name;
      if (!entry.is_object()) schema_error("expected an object", base);
      LinkOverlay lo;
      for (const auto& [key, value] : entry.items()) {
        const std::string path = base + "." + key;
        if (key == "mass") {
          lo.mass = number_at(value, path);
        } else if (key == "inertia") {
          if (!value.is_object()) schema_error("expected an object", path);
          Inertia in;
          const auto get = [&](const char* k) {
            return value.contains(k) ? number_at(value.at(k), path + "." + k) : 0.0;
          };
          for (const char* k : {"ixx", "iyy", "izz"}) {
            if (!value.contains(k)) schema_error("missing diagonal moment", path + "." + k);
          }
          in.ixx = get("ixx");
          in.iyy = get("iyy");
          in.izz = get("izz");
          in.ixy = get("ixy");
          in.ixz = get("ixz");
          in.iyz = get("iyz");
          lo.inertia = in;
        } else if (key == "center_of_mass") {
          lo.center_of_mass = triple_at(value, path);
        } else {
          lo.extra[key] = value;
        }
      }
      o.links.emplace(name, std::move(lo));
    }
  }

  if (doc.contains("joint_modifications")) {
    for (const auto& [name, entry] : object_at(doc, "joint_modifications", "joint_modifications").items()) {
      const std::string base = "joint_modifications." + name;
      if (!entry.is_object()) schema_error("expected an object", base);
      JointOverlay jo;
      for (const auto& [key, value] : entry.items()) {
        const std::string path = base + "." + key;
        if (key == "damping") {
          jo.damping = number_at(value, path);
        } else if (key == "friction") {
          jo.friction = number_at(value, path);
        } else if (key == "stiffness") {
          jo.stiffness = number_at(value, path);
        } else if (key == "_limits") {
          if (!value.is_array() || value.size() != 2) schema_error("expected [lower, upper]", path);
          jo.limits = JointLimits{number_at(value[0], path + "[0]"), number_at(value[1], path + "[1]")};
        } else {
          jo.extra[key] = value;
        }
      }
      o.joints.emplace(name, std::move(jo));
    }
  }

  if (doc.contains("initial_joint_positions") && !doc.at("initial_joint_positions").is_null()) {
    std::map<std::string, double> state;
    for (const auto& [name, value] : object_at(doc, "initial_joint_positions", "initial_joint_positions").items()) {
      if (!name.empty() && name[0] == '_') {
        o.initial_extra[name] = value;
        continue;
      }
      state[name] = angle_at(value, "initial_joint_positions." + name);
    }
    o.initial_joint_positions = std::move(state);
  }

  if (doc.contains("validation_notes")) {
    const auto& notes = doc.at("validation_notes");
    if (!notes.is_array()) schema_error("expected an array of strings", "validation_notes");
    for (size_t i = 0; i < notes.size(); ++i) {
      if (!notes[i].is_string()) schema_error("expected a string", "validation_notes[" + std::to_string(i) + "]");
      o.validation_notes.push_back(notes[i].get<std::string>());
    }
  }
  if (doc.contains("_validated")) o.validated = doc.at("_validated").is_boolean() && doc.at("_validated").get<bool>();
  return o;
}

ordered_json overlay_to_json(const Overlay& o) {
  ordered_json doc = ordered_json::object();
  ordered_json global = ordered_json::object();
  global["uniform_scale_factor"] = o.uniform_scale_factor;
  if (o.material_properties) global["material_properties"] = *o.material_properties;
  for (const auto& [k, v] : o.global_extra.items()) global[k] = v;
  doc["global_modifications"] = global;

  ordered_json links = ordered_json::object();
  for (const auto& [name, lo] : o.links) {
    ordered_json e = ordered_json::object();
    if (lo.mass) e["mass"] = *lo.mass;
    if (lo.inertia) {
      const auto& i = *lo.inertia;
      e["inertia"] = {{"ixx", i.ixx}, {"iyy", i.iyy}, {"izz", i.izz}, {"ixy", i.ixy}, {"ixz", i.ixz}, {"iyz", i.iyz}};
    }
    if (lo.center_of_mass) e["center_of_mass"] = *lo.center_of_mass;
    for (const auto& [k, v] : lo.extra.items()) e[k] = v;
    links[name] = e;
  }
  doc["link_modifications"] = links;

  ordered_json joints = ordered_json::object();
  for (const auto& [name, jo] : o.joints) {
    ordered_json e = ordered_json::object();
    if (jo.damping) e["damping"] = *jo.damping;
    if (jo.friction) e["friction"] = *jo.friction;
    if (jo.stiffness) e["stiffness"] = *jo.stiffness;
    if (jo.limits) e["_limits"] = {jo.limits->lower, jo.limits->upper};
    for (const auto& [k, v] : jo.extra.items()) e[k] = v;
    joints[name] = e;
  }
  doc["joint_modifications"] = joints;

  if (o.initial_joint_positions) {
    ordered_json s = ordered_json::object();
    for (const auto& [name, v] : *o.initial_joint_positions) s[name] = v;
    for (const auto& [k, v] : o.initial_extra.items()) s[k] = v;
    doc["initial_joint_positions"] = s;
  }
  doc["validation_notes"] = o.validation_notes;
  if (o.validated) doc["_validated"] = true;
  return doc;
}

// ---------------------------------------------------------------------------

double estimate_link_mass(double volume, double density, double scale, double hollow) {
  if (!(volume > 0.0) || !(density > 0.0) || !(scale > 0.0) || !(hollow > 0.0) || hollow > 1.0 ||
      !std::isfinite(volume * density * scale))
    throw Error(ErrorKind::InvalidArgument, "mass estimate needs positive volume, density, scale and hollow in (0, 1]");
  return volume * density * (scale * scale * scale) * hollow;
}

Inertia shape_inertia(double mass, const BoxShape& b) {
  if (!(mass > 0.0) || !(b.w > 0.0) || !(b.h > 0.0) || !(b.d > 0.0))
    throw Error(ErrorKind::InvalidArgument, "box inertia needs positive mass and dimensions");
  const double k = mass / 12.0;
  return Inertia::diagonal(k * (b.h * b.h + b.d * b.d), k * (b.w * b.w + b.d * b.d), k * (b.w * b.w + b.h * b.h));
}

Inertia shape_inertia(double mass, const CylinderShape& c) {
  if (!(mass > 0.0) || !(c.r > 0.0) || !(c.h >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "cylinder inertia needs positive mass and radius");
  const double side = mass * (3.0 * c.r * c.r + c.h * c.h) / 12.0;
  return Inertia::diagonal(side, side, 0.5 * mass * c.r * c.r);
}

InertiaCheck check_inertia(const Mat3& tensor) {
  if (!tensor.allFinite()) throw Error(ErrorKind::InvalidArgument, "inertia tensor has non-finite entries");
  if ((tensor - tensor.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw Error(ErrorKind::Asymmetric, "inertia tensor is not symmetric within 1e-9");
  const Mat3 sym = 0.5 * (tensor + tensor.transpose());
  const Eigen::SelfAdjointEigenSolver<Mat3> es(sym, Eigen::EigenvaluesOnly);
  const Vec3 ev = es.eigenvalues();  // ascending
  InertiaCheck out;
  out.principal_moments = {ev[0], ev[1], ev[2]};
  out.spd_ok = ev[0] > 0.0;
  out.triangle_ok = ev[0] + ev[1] >= ev[2] - kTriangleSlack * std::abs(ev[2]);
  for (const auto& [a, b] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
    const double bound = sym(a, a) >= 0.0 && sym(b, b) >= 0.0 ? std::sqrt(sym(a, a) * sym(b, b)) : 0.0;
    if (std::abs(sym(a, b)) > bound) out.offdiag_dropped = true;
  }
  return out;
}

JointDynamics default_passive_dynamics(JointType type) {
  if (type == JointType::Prismatic) return {1.5, 0.5, 0.0};
  return {0.15, 0.01, 0.0};
}

namespace {

Inertia repair_inertia(Inertia in, const std::string& path, std::vector<std::string>& diags) {
  for (double* d : {&in.ixx, &in.iyy, &in.izz}) {
    if (!(*d > 0.0)) {
      diags.push_back(path + ": non-positive diagonal moment raised to " + format_number(kMinimalInertia));
      *d = kMinimalInertia;
    }
  }
  const auto bound = [&](double& off, double a, double b, const char* name) {
    if (std::abs(off) > std::sqrt(a * b)) {
      diags.push_back(path + ": product " + name + " violates |I_ab| <= sqrt(I_aa I_bb); set to 0");
      off = 0.0;
    }
  };
  bound(in.ixy, in.ixx, in.iyy, "ixy");
  bound(in.ixz, in.ixx, in.izz, "ixz");
  bound(in.iyz, in.iyy, in.izz, "iyz");
  InertiaCheck c = check_inertia(in);
  if (!c.spd_ok) {
    diags.push_back(path + ": tensor not positive definite; products of inertia removed");
    in.ixy = in.ixz = in.iyz = 0.0;
    c = check_inertia(in);
  }
  if (!c.triangle_ok) diags.push_back(path + ": principal moments violate the triangle inequality");
  return in;
}

}  // namespace

OverlayValidation validate_overlay(const Overlay& input, const AssetModel& model) {
  OverlayValidation result;
  Overlay& o = result.overlay;
  o = input;
  auto& diags = result.diagnostics;

  const double s = o.uniform_scale_factor;
  if (!std::isfinite(s) || s <= 0.0) reject("uniform scale factor must be positive", "global_modifications.uniform_scale_factor");

  // Hard rejects first so no partial repair happens on bad input.
  for (const auto& [name, lo] : o.links) {
    const std::string base = "link_modifications." + name;
    if (lo.mass && !(std::isfinite(*lo.mass) && *lo.mass > 0.0)) reject("mass must be positive", base + ".mass");
    if (lo.inertia) {
      const auto& i = *lo.inertia;
      for (double v : {i.ixx, i.iyy, i.izz, i.ixy, i.ixz, i.iyz}) {
        if (!std::isfinite(v)) reject("inertia entries must be finite", base + ".inertia");
      }
    }
    if (lo.center_of_mass) {
      for (double v : *lo.center_of_mass) {
        if (!std::isfinite(v)) reject("center of mass must be finite", base + ".center_of_mass");
      }
    }
  }
  for (const auto& [name, jo] : o.joints) {
    const std::string base = "joint_modifications." + name;
    if (jo.damping && !finite_nonneg(*jo.damping)) reject("damping must be finite and >= 0", base + ".damping");
    if (jo.friction && !finite_nonneg(*jo.friction)) reject("friction must be finite and >= 0", base + ".friction");
    if (jo.stiffness && !finite_nonneg(*jo.stiffness)) reject("stiffness must be finite and >= 0", base + ".stiffness");
  }
  if (o.initial_joint_positions) {
    for (const auto& [name, v] : *o.initial_joint_positions) {
      if (!std::isfinite(v)) reject("initial position must be finite", "initial_joint_positions." + name);
    }
  }

  for (auto it = o.links.begin(); it != o.links.end();) {
    if (!model.find_link(it->first)) {
      diags.push_back("link_modifications." + it->first + ": unknown link dropped");
      it = o.links.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = o.joints.begin(); it != o.joints.end();) {
    const JointSpec* j = model.find_joint(it->first);
    if (!j || !j->active()) {
      diags.push_back("joint_modifications." + it->first + (j ? ": fixed joint entry dropped" : ": unknown joint dropped"));
      it = o.joints.erase(it);
    } else {
      ++it;
    }
  }
  if (o.initial_joint_positions) {
    auto& state = *o.initial_joint_positions;
    for (auto it = state.begin(); it != state.end();) {
      const JointSpec* j = model.find_joint(it->first);
      if (!j || !j->active()) {
        diags.push_back("initial_joint_positions." + it->first + ": not an active joint; dropped");
        it = state.erase(it);
      } else {
        ++it;
      }
    }
  }

  // Links: every link ends with mass and inertia.
  for (const auto& link : model.links) {
    const std::string base = "link_modifications." + link.name;
    auto [it, inserted] = o.links.try_emplace(link.name);
    LinkOverlay& lo = it->second;
    if (inserted) {
      lo.mass = kMinimalMass;
      lo.inertia = Inertia::diagonal(kMinimalInertia, kMinimalInertia, kMinimalInertia);
      diags.push_back(base + ": missing from overlay; assigned conservative minimal inertial values");
      continue;
    }
    if (!lo.mass) {
      lo.mass = kMinimalMass;
      diags.push_back(base + ".mass: missing; assigned " + format_number(kMinimalMass) + " kg");
    }
    if (!lo.inertia) {
      lo.inertia = Inertia::diagonal(kMinimalInertia, kMinimalInertia, kMinimalInertia);
      diags.push_back(base + ".inertia: missing; assigned diag(" + format_number(kMinimalInertia) + ")");
    } else {
      lo.inertia = repair_inertia(*lo.inertia, base + ".inertia", diags);
    }
  }

  // Joints: complete triplets, limits scaled once, initial state feasible.
  for (const auto& j : model.joints) {
    if (!j.active()) continue;
    const std::string base = "joint_modifications." + j.name;
    auto [it, inserted] = o.joints.try_emplace(j.name);
    JointOverlay& jo = it->second;
    const JointDynamics fallback = default_passive_dynamics(j.type);
    const JointDynamics declared = j.dynamics.value_or(JointDynamics{});
    if (inserted) diags.push_back(base + ": missing from overlay; passive defaults used");
    if (!jo.damping) {
      jo.damping = declared.damping.value_or(*fallback.damping);
      if (!inserted) diags.push_back(base + ".damping: missing; set to " + format_number(*jo.damping));
    }
    if (!jo.friction) {
      jo.friction = declared.friction.value_or(*fallback.friction);
      if (!inserted) diags.push_back(base + ".friction: missing; set to " + format_number(*jo.friction));
    }
    if (!jo.stiffness) {
      jo.stiffness = 0.0;
      if (!inserted) diags.push_back(base + ".stiffness: missing although mandatory; set to 0");
    }
    if (!o.validated && j.limits) {
      jo.limits = *j.limits;
      if (j.type == JointType::Prismatic && s != 1.0) {
        jo.limits->lower *= s;
        jo.limits->upper *= s;
        diags.push_back(base + ": prismatic limits scaled by " + format_number(s));
      }
    }
  }
  if (!o.validated && s != 1.0 && o.initial_joint_positions) {
    for (auto& [name, v] : *o.initial_joint_positions) {
      if (model.find_joint(name)->type == JointType::Prismatic) v *= s;
    }
  }

  for (const auto& j : model.joints) {
    if (!j.active() || !j.limits) continue;
    JointOverlay& jo = o.joints.at(j.name);
    if (!jo.limits) jo.limits = *j.limits;  // validated input lacking limits
    double target = 0.0;
    std::string source = "simulator default";
    if (o.initial_joint_positions && o.initial_joint_positions->count(j.name)) {
      target = o.initial_joint_positions->at(j.name);
      source = "initial position";
    } else if (model.documented_initial_state && model.documented_initial_state->count(j.name)) {
      target = model.documented_initial_state->at(j.name);
      if (j.type == JointType::Prismatic) target *= s;  // apply_overlay scales it the same way
      source = "documented state";
    }
    auto& lim = *jo.limits;
    if (target < lim.lower) {
      lim.lower = target - kLimitSlack;
      diags.push_back("joint_modifications." + j.name + ": lower limit widened to " + format_number(lim.lower) +
                      " to contain the " + source + " " + format_number(target));
    } else if (target > lim.upper) {
      lim.upper = target + kLimitSlack;
      diags.push_back("joint_modifications." + j.name + ": upper limit widened to " + format_number(lim.upper) +
                      " to contain the " + source + " " + format_number(target));
    }
  }

  o.validated = true;
  return result;
}

// ---------------------------------------------------------------------------

AssetModel apply_overlay(const AssetModel& model, const Overlay& o) {
  for (const auto& [name, lo] : o.links) {
    if (!model.find_link(name)) throw Error(ErrorKind::UnknownReference, "overlay names unknown link", name);
  }
  for (const auto& [name, jo] : o.joints) {
    if (!model.find_joint(name)) throw Error(ErrorKind::UnknownReference, "overlay names unknown joint", name);
  }
  if (o.initial_joint_positions) {
    for (const auto& [name, v] : *o.initial_joint_positions) {
      if (!model.find_joint(name)) throw Error(ErrorKind::UnknownReference, "initial state names unknown joint", name);
    }
  }
  const double s = o.uniform_scale_factor;
  if (!std::isfinite(s) || s <= 0.0) throw Error(ErrorKind::InvalidArgument, "scale factor must be positive");

  AssetModel out = model;
  const auto scale3 = [s](Triple& t) {
    for (double& v : t) v *= s;
  };
  for (auto& link : out.links) {
    for (auto* meshes : {&link.visual_meshes, &link.collision_meshes}) {
      for (auto& m : *meshes) {
        scale3(m.scale);
        scale3(m.origin.xyz);
      }
    }
    if (link.center_of_mass) scale3(*link.center_of_mass);
    const auto it = o.links.find(link.name);
    if (it == o.links.end()) continue;
    const LinkOverlay& lo = it->second;
    if (lo.mass) link.mass = *lo.mass;
    if (lo.inertia) {
      link.inertia = *lo.inertia;
      link.inertial_rpy = {0.0, 0.0, 0.0};  // overlay tensors are in link axes
      if (!link.center_of_mass) link.center_of_mass = Triple{0.0, 0.0, 0.0};
    }
    if (lo.center_of_mass) link.center_of_mass = *lo.center_of_mass;
  }
  for (auto& j : out.joints) {
    scale3(j.origin.xyz);
    const auto it = o.joints.find(j.name);
    if (j.type == JointType::Prismatic && j.limits && (it == o.joints.end() || !it->second.limits)) {
      j.limits->lower *= s;
      j.limits->upper *= s;
    }
    if (it == o.joints.end()) continue;
    const JointOverlay& jo = it->second;
    if (jo.limits && j.limits) j.limits = *jo.limits;
    if (jo.damping || jo.friction || jo.stiffness) {
      JointDynamics d = j.dynamics.value_or(JointDynamics{});
      if (jo.damping) d.damping = *jo.damping;
      if (jo.friction) d.friction = *jo.friction;
      if (jo.stiffness) d.stiffness = *jo.stiffness;
      j.dynamics = d;
    }
  }
  if (out.documented_initial_state && s != 1.0) {
    for (auto& [name, v] : *out.documented_initial_state) {
      const JointSpec* j = out.find_joint(name);
      if (j && j->type == JointType::Prismatic) v *= s;
    }
  }
  if (o.initial_joint_positions && !o.initial_joint_positions->empty()) {
    if (!out.documented_initial_state) out.documented_initial_state.emplace();
    for (const auto& [name, v] : *o.initial_joint_positions) (*out.documented_initial_state)[name] = v;
  }
  check_model(out);
  return out;
}

}  // namespace artready
