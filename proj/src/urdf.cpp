#include <cmath>
#include <map>

#include "artready/asset_model.hpp"
#include "artready/error.hpp"
#include "artready/text.hpp"
#include "model_check.hpp"
#include "xml.hpp"

namespace artready {

namespace {

constexpr std::string_view kStateTag = "artready:initial_state";
constexpr std::string_view kMetaTag = "artready:metadata";

double number_attr(const xml::Node& node, std::string_view key, double fallback) {
  const std::string* v = node.attribute(key);
  if (!v) return fallback;
  const auto d = parse_number(*v);
  if (!d) throw Error(ErrorKind::InvalidValue, "attribute '" + std::string(key) + "' is not a number", node.location());
  return *d;
}

std::optional<double> optional_number_attr(const xml::Node& node, std::string_view key) {
  if (!node.attribute(key)) return std::nullopt;
  return number_attr(node, key, 0.0);
}

template <size_t N>
std::array<double, N> vector_attr(const xml::Node& node, std::string_view key, std::array<double, N> fallback) {
  const std::string* v = node.attribute(key);
  if (!v) return fallback;
  const auto parts = split_ws(*v);
  if (parts.size() != N)
    throw Error(ErrorKind::InvalidValue,
                "attribute '" + std::string(key) + "' needs " + std::to_string(N) + " numbers", node.location());
  std::array<double, N> out{};
  for (size_t i = 0; i < N; ++i) {
    const auto d = parse_number(parts[i]);
    if (!d) throw Error(ErrorKind::InvalidValue, "attribute '" + std::string(key) + "' has a non-number", node.location());
    out[i] = *d;
  }
  return out;
}

Pose parse_origin(const xml::Node* node) {
  Pose p;
  if (!node) return p;
  p.xyz = vector_attr<3>(*node, "xyz", p.xyz);
  p.rpy = vector_attr<3>(*node, "rpy", p.rpy);
  return p;
}

const std::string& required_attr(const xml::Node& node, std::string_view key) {
  const std::string* v = node.attribute(key);
  if (!v) throw Error(ErrorKind::InvalidValue, "missing attribute '" + std::string(key) + "'", node.location());
  return *v;
}

// A visual/collision element is interpreted only when it is a plain mesh
// reference; anything richer stays opaque so it survives re-serialization.
std::optional<MeshRef> parse_mesh_element(const xml::Node& node, bool visual) {
  const xml::Node* geometry = node.child("geometry");
  if (!geometry || geometry->children.size() != 1 || geometry->children[0].name != "mesh") return std::nullopt;
  for (const auto& c : node.children) {
    if (c.name != "origin" && c.name != "geometry" && !(visual && c.name == "material")) return std::nullopt;
  }
  const xml::Node& mesh = geometry->children[0];
  MeshRef ref;
  ref.filename = required_attr(mesh, "filename");
  ref.scale = vector_attr<3>(mesh, "scale", ref.scale);
  ref.origin = parse_origin(node.child("origin"));
  if (const std::string* n = node.attribute("name")) ref.name = *n;
  if (const xml::Node* material = node.child("material")) {
    for (const auto& c : material->children) {
      if (c.name != "color") return std::nullopt;
    }
    if (const std::string* n = material->attribute("name")) ref.material = *n;
    if (const xml::Node* color = material->child("color")) ref.rgba = vector_attr<4>(*color, "rgba", {1, 1, 1, 1});
    if (material->attributes.size() > 1 || (material->attributes.size() == 1 && !material->attribute("name")))
      return std::nullopt;
  }
  if (mesh.attributes.size() > (mesh.attribute("scale") ? 2u : 1u)) return std::nullopt;
  return ref;
}

LinkSpec parse_link(const xml::Node& node) {
  LinkSpec link;
  link.name = required_attr(node, "name");
  for (const auto& c : node.children) {
    if (c.name == "inertial") {
      bool plain = true;
      for (const auto& ic : c.children) {
        if (ic.name != "origin" && ic.name != "mass" && ic.name != "inertia") plain = false;
      }
      if (!plain) {
        link.opaque.push_back(xml::to_string(c));
        continue;
      }
      if (const xml::Node* origin = c.child("origin")) {
        const Pose p = parse_origin(origin);
        link.center_of_mass = p.xyz;
        link.inertial_rpy = p.rpy;
      }
      if (const xml::Node* mass = c.child("mass")) link.mass = number_attr(*mass, "value", 0.0);
      if (const xml::Node* in = c.child("inertia")) {
        Inertia i;
        i.ixx = number_attr(*in, "ixx", 0.0);
        i.iyy = number_attr(*in, "iyy", 0.0);
        i.izz = number_attr(*in, "izz", 0.0);
        i.ixy = number_attr(*in, "ixy", 0.0);
        i.ixz = number_attr(*in, "ixz", 0.0);
        i.iyz = number_attr(*in, "iyz", 0.0);
        link.inertia = i;
      }
      if (link.mass && !(std::isfinite(*link.mass) && *link.mass > 0.0))
        throw Error(ErrorKind::InvalidValue, "mass must be positive", c.location());
    } else if (c.name == "visual" || c.name == "collision") {
      const bool visual = c.name == "visual";
      if (auto ref = parse_mesh_element(c, visual)) {
        (visual ? link.visual_meshes : link.collision_meshes).push_back(std::move(*ref));
      } else {
        link.opaque.push_back(xml::to_string(c));
      }
    } else {
      link.opaque.push_back(xml::to_string(c));
    }
  }
  return link;
}

JointSpec parse_joint(const xml::Node& node) {
  JointSpec joint;
  joint.name = required_attr(node, "name");
  const std::string& type = required_attr(node, "type");
  const auto jt = joint_type_from_string(type);
  if (!jt) throw Error(ErrorKind::InvalidValue, "unsupported joint type '" + type + "'", node.location());
  joint.type = *jt;
  for (const auto& c : node.children) {
    if (c.name == "parent") {
      joint.parent = required_attr(c, "link");
    } else if (c.name == "child") {
      joint.child = required_attr(c, "link");
    } else if (c.name == "origin") {
      joint.origin = parse_origin(&c);
    } else if (c.name == "axis") {
      joint.axis = vector_attr<3>(c, "xyz", joint.axis);
      const Vec3 a = to_vec(joint.axis);
      const double n = a.norm();
      if (n > 0.0 && std::isfinite(n) && std::abs(n - 1.0) > 1e-9) joint.axis = to_triple(a / n);
    } else if (c.name == "limit") {
      joint.effort = optional_number_attr(c, "effort");
      joint.velocity = optional_number_attr(c, "velocity");
      if (joint.type == JointType::Revolute || joint.type == JointType::Prismatic) {
        joint.limits = JointLimits{number_attr(c, "lower", 0.0), number_attr(c, "upper", 0.0)};
      }
    } else if (c.name == "dynamics") {
      JointDynamics d;
      d.damping = optional_number_attr(c, "damping");
      d.friction = optional_number_attr(c, "friction");
      d.stiffness = optional_number_attr(c, "stiffness");
      joint.dynamics = d;
    } else {
      joint.opaque.push_back(xml::to_string(c));
    }
  }
  if (joint.parent.empty()) throw Error(ErrorKind::InvalidValue, "joint has no parent", node.location());
  if (joint.child.empty()) throw Error(ErrorKind::InvalidValue, "joint has no child", node.location());
  return joint;
}

std::map<std::string, std::string> parse_key_values(std::string_view body, std::string_view tag) {
  std::map<std::string, std::string> out;
  const auto lines = split(body, '\n');
  bool first = true;
  for (const auto& raw : lines) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == tag) continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidValue, "expected key=value", std::string(tag));
    out.insert_or_assign(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

bool is_tagged(std::string_view comment, std::string_view tag) { return trim(comment).rfind(tag, 0) == 0; }

// ---------------------------------------------------------------------------

std::string join(const Triple& t) {
  return format_number(t[0]) + " " + format_number(t[1]) + " " + format_number(t[2]);
}

void write_origin(std::string& out, const Pose& p, const std::string& indent) {
  if (p == Pose{}) return;
  out += indent + "<origin xyz=\"" + join(p.xyz) + "\" rpy=\"" + join(p.rpy) + "\"/>\n";
}

void write_opaque(std::string& out, const std::string& raw, const std::string& indent) {
  for (const auto& line : split(raw, '\n')) out += indent + line + "\n";
}

void write_mesh(std::string& out, const MeshRef& m, std::string_view tag, const std::string& indent) {
  out += indent + "<" + std::string(tag);
  if (!m.name.empty()) out += " name=\"" + xml::escape(m.name) + "\"";
  out += ">\n";
  write_origin(out, m.origin, indent + "  ");
  out += indent + "  <geometry>\n";
  out += indent + "    <mesh filename=\"" + xml::escape(m.filename) + "\"";
  if (m.scale != Triple{1.0, 1.0, 1.0}) out += " scale=\"" + join(m.scale) + "\"";
  out += "/>\n";
  out += indent + "  </geometry>\n";
  if (m.rgba || !m.material.empty()) {
    out += indent + "  <material";
    if (!m.material.empty()) out += " name=\"" + xml::escape(m.material) + "\"";
    if (m.rgba) {
      const auto& c = *m.rgba;
      out += ">\n" + indent + "    <color rgba=\"" + format_number(c[0]) + " " + format_number(c[1]) + " " +
             format_number(c[2]) + " " + format_number(c[3]) + "\"/>\n" + indent + "  </material>\n";
    } else {
      out += "/>\n";
    }
  }
  out += indent + "</" + std::string(tag) + ">\n";
}

std::string key_value_comment(std::string_view tag, const std::map<std::string, std::string>& entries) {
  std::string out = "  <!-- " + std::string(tag) + "\n";
  for (const auto& [k, v] : entries) out += "  " + k + "=" + v + "\n";
  out += "  -->\n";
  return out;
}

}  // namespace

AssetModel parse_urdf(std::string_view text, std::filesystem::path base_dir) {
  const xml::Document doc = xml::parse(text);
  const xml::Node& robot = doc.root;
  if (robot.name != "robot")
    throw Error(ErrorKind::MalformedXml, "root element must be <robot>", robot.location());

  AssetModel model;
  model.base_dir = std::move(base_dir);
  if (const std::string* n = robot.attribute("name")) model.name = *n;

  std::map<std::string, std::string> link_loc;
  std::map<std::string, std::string> joint_loc;
  for (const auto& c : robot.children) {
    if (c.name == "link") {
      model.links.push_back(parse_link(c));
      link_loc.emplace(model.links.back().name, c.location());
    } else if (c.name == "joint") {
      model.joints.push_back(parse_joint(c));
      joint_loc.emplace(model.joints.back().name, c.location());
    } else {
      model.opaque.push_back(xml::to_string(c));
    }
  }

  for (const auto& comment : doc.root_comments) {
    if (is_tagged(comment, kStateTag)) {
      std::map<std::string, double> state;
      for (const auto& [k, v] : parse_key_values(comment, kStateTag)) {
        const auto d = parse_number(v);
        if (!d) throw Error(ErrorKind::InvalidValue, "documented state value is not a number", k);
        state.emplace(k, *d);
      }
      model.documented_initial_state = std::move(state);
    } else if (is_tagged(comment, kMetaTag)) {
      model.metadata = parse_key_values(comment, kMetaTag);
    }
  }

  const detail::Locator where = [&](std::string_view kind, std::string_view name) {
    const auto& table = kind == "joint" ? joint_loc : link_loc;
    const auto it = table.find(std::string(name));
    std::string loc = detail::default_locator(kind, name);
    if (it != table.end()) loc += " " + it->second;
    return loc;
  };
  detail::check_model(model, where);
  model.root = model.links[KinematicTree(model).root()].name;
  return model;
}

AssetModel load_urdf(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const Error&) {
    throw Error(ErrorKind::Io, "cannot read URDF", path.string());
  }
  return parse_urdf(text, path.parent_path());
}

std::string write_urdf(const AssetModel& model) {
  try {
    check_model(model);
  } catch (const Error& e) {
    throw Error(ErrorKind::Serialization, std::string("refusing to serialize invalid model: ") + e.what(),
                e.location());
  }
  std::string out = "<?xml version=\"1.0\"?>\n";
  out += "<robot name=\"" + xml::escape(model.name) + "\">\n";
  if (!model.metadata.empty()) out += key_value_comment(kMetaTag, model.metadata);
  if (model.documented_initial_state) {
    std::map<std::string, std::string> entries;
    for (const auto& [k, v] : *model.documented_initial_state) entries.emplace(k, format_number(v));
    out += key_value_comment(kStateTag, entries);
  }

  for (const auto& link : model.links) {
    out += "  <link name=\"" + xml::escape(link.name) + "\">\n";
    if (link.mass || link.inertia || link.center_of_mass) {
      out += "    <inertial>\n";
      // Always explicit, even at zero, so the optional survives a round-trip.
      if (link.center_of_mass) {
        out += "      <origin xyz=\"" + join(*link.center_of_mass) + "\" rpy=\"" + join(link.inertial_rpy) + "\"/>\n";
      }
      if (link.mass) out += "      <mass value=\"" + format_number(*link.mass) + "\"/>\n";
      if (link.inertia) {
        const auto& i = *link.inertia;
        out += "      <inertia ixx=\"" + format_number(i.ixx) + "\" ixy=\"" + format_number(i.ixy) + "\" ixz=\"" +
               format_number(i.ixz) + "\" iyy=\"" + format_number(i.iyy) + "\" iyz=\"" + format_number(i.iyz) +
               "\" izz=\"" + format_number(i.izz) + "\"/>\n";
      }
      out += "    </inertial>\n";
    }
    for (const auto& m : link.visual_meshes) write_mesh(out, m, "visual", "    ");
    for (const auto& m : link.collision_meshes) write_mesh(out, m, "collision", "    ");
    for (const auto& raw : link.opaque) write_opaque(out, raw, "    ");
    out += "  </link>\n";
  }

  for (const auto& j : model.joints) {
    out += "  <joint name=\"" + xml::escape(j.name) + "\" type=\"" + std::string(to_string(j.type)) + "\">\n";
    out += "    <parent link=\"" + xml::escape(j.parent) + "\"/>\n";
    out += "    <child link=\"" + xml::escape(j.child) + "\"/>\n";
    write_origin(out, j.origin, "    ");
    if (j.active() || j.axis != Triple{1.0, 0.0, 0.0}) out += "    <axis xyz=\"" + join(j.axis) + "\"/>\n";
    if (j.limits || j.effort || j.velocity) {
      out += "    <limit";
      if (j.limits) {
        out += " lower=\"" + format_number(j.limits->lower) + "\" upper=\"" + format_number(j.limits->upper) + "\"";
      }
      if (j.effort) out += " effort=\"" + format_number(*j.effort) + "\"";
      if (j.velocity) out += " velocity=\"" + format_number(*j.velocity) + "\"";
      out += "/>\n";
    }
    if (j.dynamics) {
      out += "    <dynamics";
      if (j.dynamics->damping) out += " damping=\"" + format_number(*j.dynamics->damping) + "\"";
      if (j.dynamics->friction) out += " friction=\"" + format_number(*j.dynamics->friction) + "\"";
      if (j.dynamics->stiffness) out += " stiffness=\"" + format_number(*j.dynamics->stiffness) + "\"";
      out += "/>\n";
    }
    for (const auto& raw : j.opaque) write_opaque(out, raw, "    ");
    out += "  </joint>\n";
  }

  for (const auto& raw : model.opaque) write_opaque(out, raw, "  ");
  out += "</robot>\n";
  return out;
}

}  // namespace artready
