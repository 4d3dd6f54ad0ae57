#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <random>
#include <sstream>

#include "artready/text.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using artready::format_number;
using artready::JointType;

namespace {

std::array<Vec3, 8> corners(const Box& b) {
  const Vec3 h = b.size / 2.0;
  std::array<Vec3, 8> c;
  for (int i = 0; i < 8; ++i) {
    c[i] = b.center + Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  }
  return c;
}

// Outward-facing quads over the corner indexing above.
constexpr int kQuads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};

std::string num(double v) { return format_number(v); }

artready::Triple triple(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

std::string box_obj(const Box& box) {
  std::ostringstream out;
  for (const auto& c : corners(box)) out << "v " << num(c.x()) << ' ' << num(c.y()) << ' ' << num(c.z()) << '\n';
  for (const auto& q : kQuads) out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
  return out.str();
}

std::string box_stl_ascii(const Box& box) {
  const auto c = corners(box);
  std::ostringstream out;
  out << "solid box\n";
  for (const auto& q : kQuads) {
    for (const auto& tri : {std::array<int, 3>{q[0], q[1], q[2]}, std::array<int, 3>{q[0], q[2], q[3]}}) {
      const Vec3 n = (c[tri[1]] - c[tri[0]]).cross(c[tri[2]] - c[tri[0]]).normalized();
      out << " facet normal " << num(n.x()) << ' ' << num(n.y()) << ' ' << num(n.z()) << "\n  outer loop\n";
      for (int i : tri) out << "   vertex " << num(c[i].x()) << ' ' << num(c[i].y()) << ' ' << num(c[i].z()) << '\n';
      out << "  endloop\n endfacet\n";
    }
  }
  out << "endsolid box\n";
  return out.str();
}

fs::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("artready_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

artready::AssetModel build_model(const AssetDef& def, const fs::path& dir) {
  const fs::path root = dir / def.name;
  fs::create_directories(root / "meshes");
  artready::AssetModel m;
  m.name = def.name;
  m.base_dir = root;
  for (const auto& ld : def.links) {
    artready::LinkSpec link;
    link.name = ld.name;
    double mass = 0.0;
    Vec3 moment = Vec3::Zero();
    Vec3 com = Vec3::Zero();
    for (std::size_t i = 0; i < ld.boxes.size(); ++i) {
      const auto& b = ld.boxes[i];
      const std::string file = "meshes/" + ld.name + "_" + std::to_string(i) + ".obj";
      artready::write_file((root / file).string(), box_obj(b));
      artready::MeshRef ref;
      ref.filename = file;
      link.visual_meshes.push_back(ref);
      link.collision_meshes.push_back(ref);
      const double bm = ld.density * b.size.prod();
      mass += bm;
      com += bm * b.center;
    }
    if (ld.density > 0.0 && mass > 0.0) {
      com /= mass;
      // Parallel-axis sum of solid boxes about the combined COM (diagonal part).
      for (const auto& b : ld.boxes) {
        const double bm = ld.density * b.size.prod();
        const Vec3 s2 = b.size.cwiseProduct(b.size);
        const Vec3 r = b.center - com;
        moment.x() += bm * (s2.y() + s2.z()) / 12.0 + bm * (r.y() * r.y() + r.z() * r.z());
        moment.y() += bm * (s2.x() + s2.z()) / 12.0 + bm * (r.x() * r.x() + r.z() * r.z());
        moment.z() += bm * (s2.x() + s2.y()) / 12.0 + bm * (r.x() * r.x() + r.y() * r.y());
      }
      link.mass = mass;
      link.inertia = artready::Inertia::diagonal(moment.x(), moment.y(), moment.z());
      link.center_of_mass = triple(com);
    }
    m.links.push_back(std::move(link));
  }
  for (const auto& jd : def.joints) {
    artready::JointSpec j;
    j.name = jd.name;
    j.type = jd.type;
    j.parent = jd.parent;
    j.child = jd.child;
    j.origin.xyz = triple(jd.xyz);
    j.axis = triple(jd.axis.normalized());
    if (jd.type == JointType::Revolute || jd.type == JointType::Prismatic) {
      j.limits = artready::JointLimits{jd.lower, jd.upper};
    }
    j.dynamics = jd.dynamics;
    m.joints.push_back(std::move(j));
  }
  m.documented_initial_state = def.initial_state;
  artready::check_model(m);
  m.root = m.links[artready::KinematicTree(m).root()].name;
  return m;
}

fs::path write_asset(const AssetDef& def, const fs::path& dir) {
  const auto model = build_model(def, dir);
  const fs::path urdf = dir / def.name / (def.name + ".urdf");
  artready::write_file(urdf.string(), artready::write_urdf(model));
  std::string sem;
  for (const auto& line : def.semantics) sem += line + "\n";
  artready::write_file(semantics_path(def, dir).string(), sem);
  return urdf;
}

fs::path semantics_path(const AssetDef& def, const fs::path& dir) { return dir / def.name / "semantics.txt"; }

namespace {

JointDef hinge(std::string name, std::string parent, std::string child, Vec3 xyz, Vec3 axis, double lo, double hi) {
  JointDef j;
  j.name = std::move(name);
  j.parent = std::move(parent);
  j.child = std::move(child);
  j.xyz = xyz;
  j.axis = axis;
  j.lower = lo;
  j.upper = hi;
  return j;
}

JointDef slider(std::string name, std::string parent, std::string child, Vec3 xyz, Vec3 axis, double lo, double hi) {
  auto j = hinge(std::move(name), std::move(parent), std::move(child), xyz, axis, lo, hi);
  j.type = JointType::Prismatic;
  return j;
}

// Box of size (w, d, h) standing on z = 0 with a lid of thickness t hinged
// on the back top edge; lid q > 0 opens.
AssetDef lid_asset(std::string name, double w, double d, double h, double t, double lo, double hi) {
  AssetDef a;
  a.name = std::move(name);
  a.links = {{"base", {{Vec3(w, d, h), Vec3(0, 0, h / 2)}}}, {"lid", {{Vec3(w, d, t), Vec3(0, -d / 2, t / 2)}}}};
  a.joints = {hinge("lid_hinge", "base", "lid", Vec3(0, d / 2, h), -Vec3::UnitX(), lo, hi)};
  a.semantics = {"base free body", "lid hinge lid"};
  return a;
}

// Cabinet shell of interior (w, d, h) built from five panels of thickness p;
// the open side faces -y.
std::vector<Box> shell(double w, double d, double h, double p) {
  const double W = w + 2 * p;
  return {{Vec3(W, d + p, p), Vec3(0, p / 2, p / 2)},
          {Vec3(W, d + p, p), Vec3(0, p / 2, h + 1.5 * p)},
          {Vec3(p, d + p, h), Vec3(-(w + p) / 2, p / 2, p + h / 2)},
          {Vec3(p, d + p, h), Vec3((w + p) / 2, p / 2, p + h / 2)},
          {Vec3(w, p, h), Vec3(0, d / 2 + p / 2, p + h / 2)}};
}

}  // namespace

AssetDef hinged_box(double density, double damping, double stiffness, double lid_q) {
  auto a = lid_asset("hinged_box", 0.3, 0.2, 0.1, 0.02, 0.0, 1.9);
  for (auto& l : a.links) l.density = density;
  a.joints[0].dynamics = artready::JointDynamics{damping, 0.01, stiffness};
  if (lid_q != 0.0) a.initial_state = std::map<std::string, double>{{"lid_hinge", lid_q}};
  return a;
}

AssetDef stiff_hinge(double stiffness, double q0) {
  AssetDef a;
  a.name = "stiff_hinge";
  a.links = {{"base", {{Vec3(0.3, 0.3, 0.1), Vec3(0, 0, 0.05)}}, 500.0},
             {"flap", {{Vec3(0.2, 0.02, 0.08), Vec3(0.1, 0, 0)}}, 500.0}};
  auto j = hinge("flap_hinge", "base", "flap", Vec3(0.16, 0, 0.05), Vec3::UnitZ(), -1.5, 1.5);
  j.dynamics = artready::JointDynamics{0.0, 0.0, stiffness};
  a.joints = {j};
  a.initial_state = std::map<std::string, double>{{"flap_hinge", q0}};
  a.semantics = {"base free body", "flap hinge flap"};
  return a;
}

AssetDef large_cabinet() {
  AssetDef a;
  a.name = "large_cabinet";
  const double w = 0.46, d = 0.38, p = 0.02, dh = 0.1, gap = 0.01;
  const int n = 5;
  const double h = n * (dh + gap);
  a.links.push_back({"body", shell(w, d, h, p)});
  a.semantics.push_back("body free cabinet_body");
  for (int i = 0; i < n; ++i) {
    const std::string id = std::to_string(i + 1);
    const double zc = p + gap / 2 + dh / 2 + i * (dh + gap);
    a.links.push_back({"drawer_" + id, {{Vec3(w - 0.02, d - 0.02, dh), Vec3(0, 0, 0)}}});
    a.links.push_back({"handle_" + id, {{Vec3(0.1, 0.02, 0.02), Vec3(0, -d / 2, 0)}}});
    // At q = 0 the drawer back sits 2 cm in front of the back panel.
    a.joints.push_back(slider("drawer_" + id + "_slide", "body", "drawer_" + id, Vec3(0, -0.01, zc), -Vec3::UnitY(),
                              -0.05, 0.3));
    JointDef fixed;
    fixed.name = "handle_" + id + "_mount";
    fixed.type = JointType::Fixed;
    fixed.parent = "drawer_" + id;
    fixed.child = "handle_" + id;
    a.joints.push_back(fixed);
    a.semantics.push_back("drawer_" + id + " slider drawer");
    a.semantics.push_back("handle_" + id + " fixed handle");
  }
  a.initial_state = std::map<std::string, double>{{"drawer_2_slide", -0.04}, {"drawer_4_slide", -0.03}};
  return a;
}

std::vector<AssetDef> resolvable_suite() {
  std::vector<AssetDef> suite;

  auto box = lid_asset("lid_box", 0.3, 0.2, 0.1, 0.02, -0.4, 1.9);
  box.initial_state = std::map<std::string, double>{{"lid_hinge", -0.25}};
  suite.push_back(box);

  auto chest = lid_asset("deep_chest", 0.4, 0.3, 0.15, 0.03, -0.5, 2.0);
  chest.initial_state = std::map<std::string, double>{{"lid_hinge", -0.35}};
  suite.push_back(chest);

  auto laptop = lid_asset("laptop", 0.32, 0.22, 0.02, 0.008, -0.2, 2.4);
  laptop.links[1].name = "screen";
  laptop.joints[0] = hinge("screen_hinge", "base", "screen", Vec3(0, 0.11, 0.02), -Vec3::UnitX(), -0.2, 2.4);
  laptop.semantics = {"base free keyboard_base", "screen hinge screen"};
  laptop.initial_state = std::map<std::string, double>{{"screen_hinge", -0.15}};
  suite.push_back(laptop);

  AssetDef drawer;
  drawer.name = "drawer";
  drawer.links = {{"cabinet", shell(0.36, 0.38, 0.26, 0.02)}, {"drawer", {{Vec3(0.34, 0.36, 0.2), Vec3::Zero()}}}};
  drawer.joints = {slider("drawer_slide", "cabinet", "drawer", Vec3(0, 0, 0.15), -Vec3::UnitY(), -0.06, 0.3)};
  drawer.initial_state = std::map<std::string, double>{{"drawer_slide", -0.04}};
  drawer.semantics = {"cabinet free cabinet", "drawer slider drawer"};
  suite.push_back(drawer);

  AssetDef twin;
  twin.name = "twin_lids";
  twin.links = {{"base", {{Vec3(0.4, 0.2, 0.1), Vec3(0, 0, 0.05)}}},
                {"lid_a", {{Vec3(0.198, 0.2, 0.02), Vec3(0, -0.1, 0.01)}}},
                {"lid_b", {{Vec3(0.198, 0.2, 0.02), Vec3(0, -0.1, 0.01)}}}};
  twin.joints = {hinge("lid_a_hinge", "base", "lid_a", Vec3(-0.1, 0.1, 0.1), -Vec3::UnitX(), -0.4, 1.9),
                 hinge("lid_b_hinge", "base", "lid_b", Vec3(0.1, 0.1, 0.1), -Vec3::UnitX(), -0.4, 1.9)};
  twin.initial_state = std::map<std::string, double>{{"lid_a_hinge", -0.2}, {"lid_b_hinge", -0.1}};
  twin.semantics = {"base free box", "lid_a hinge lid", "lid_b hinge lid"};
  suite.push_back(twin);

  AssetDef arm;
  arm.name = "lamp_arm";
  arm.links = {{"base", {{Vec3(0.6, 0.6, 0.05), Vec3(0, 0, 0.025)}}},
               {"post", {{Vec3(0.04, 0.04, 0.2), Vec3(0, 0, 0.1)}}},
               {"arm", {{Vec3(0.04, 0.25, 0.04), Vec3(0, 0.125, 0)}}}};
  arm.joints = {hinge("post_swivel", "base", "post", Vec3(0, 0, 0.05), Vec3::UnitZ(), -3.0, 3.0),
                hinge("arm_pitch", "post", "arm", Vec3(0, 0, 0.2), Vec3::UnitX(), -1.2, 1.2)};
  arm.initial_state = std::map<std::string, double>{{"post_swivel", 0.5}, {"arm_pitch", -1.1}};
  arm.semantics = {"base free lamp_base", "post hinge post", "arm hinge arm"};
  suite.push_back(arm);

  AssetDef toilet;
  toilet.name = "toilet";
  toilet.links = {{"bowl", {{Vec3(0.4, 0.5, 0.35), Vec3(0, 0, 0.175)}}},
                  {"seat", {{Vec3(0.36, 0.44, 0.02), Vec3(0, -0.22, 0.01)}}},
                  {"cover", {{Vec3(0.36, 0.44, 0.02), Vec3(0, -0.22, 0.01)}}}};
  toilet.joints = {hinge("seat_hinge", "bowl", "seat", Vec3(0, 0.22, 0.35), -Vec3::UnitX(), 0.0, 1.6),
                   hinge("cover_hinge", "bowl", "cover", Vec3(0, 0.22, 0.37), -Vec3::UnitX(), 0.0, 1.6)};
  toilet.initial_state = std::map<std::string, double>{{"seat_hinge", 0.3}, {"cover_hinge", 0.1}};
  toilet.semantics = {"bowl free bowl", "seat hinge seat", "cover hinge lid"};
  suite.push_back(toilet);

  AssetDef oven;
  oven.name = "microwave";
  oven.links = {{"body", {{Vec3(0.5, 0.35, 0.3), Vec3(0, 0, 0.15)}}},
                {"door", {{Vec3(0.5, 0.02, 0.3), Vec3(0.25, -0.01, 0.15)}}}};
  oven.joints = {hinge("door_hinge", "body", "door", Vec3(-0.25, -0.175, 0), -Vec3::UnitZ(), -0.3, 1.8)};
  oven.initial_state = std::map<std::string, double>{{"door_hinge", -0.2}};
  oven.semantics = {"body free body", "door hinge door"};
  suite.push_back(oven);

  AssetDef slide;
  slide.name = "sliding_lid";
  slide.links = {{"base", {{Vec3(0.3, 0.3, 0.1), Vec3(0, 0, 0.05)}, {Vec3(0.02, 0.3, 0.03), Vec3(0.16, 0, 0.115)}}},
                 {"lid", {{Vec3(0.28, 0.3, 0.02), Vec3(0, 0, 0.01)}}}};
  slide.joints = {slider("lid_slide", "base", "lid", Vec3(-0.01, 0, 0.1), Vec3::UnitX(), -0.15, 0.05)};
  slide.initial_state = std::map<std::string, double>{{"lid_slide", 0.04}};
  slide.semantics = {"base free tray", "lid slider lid"};
  suite.push_back(slide);

  suite.push_back(large_cabinet());
  return suite;
}

AssetDef random_passive_asset(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  AssetDef a;
  a.name = "random_" + std::to_string(seed);
  const int n = 2 + static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) {
    const Vec3 size(range(0.03, 0.3), range(0.03, 0.3), range(0.03, 0.3));
    a.links.push_back({"l" + std::to_string(i), {{size, Vec3(range(-0.05, 0.05), range(-0.05, 0.05), 0)}},
                       range(200.0, 2000.0)});
    if (i == 0) continue;
    Vec3 axis(range(-1, 1), range(-1, 1), range(-1, 1));
    if (axis.norm() < 0.1) axis = Vec3::UnitZ();
    const int parent = static_cast<int>(rng() % i);
    const int kind = static_cast<int>(rng() % 3);
    JointDef j = kind == 1 ? slider("j" + std::to_string(i), a.links[parent].name, a.links[i].name, Vec3::Zero(),
                                    axis.normalized(), -0.2, 0.2)
                           : hinge("j" + std::to_string(i), a.links[parent].name, a.links[i].name, Vec3::Zero(),
                                   axis.normalized(), -1.5, 1.5);
    if (kind == 2) j.type = JointType::Continuous;
    j.xyz = Vec3(range(-0.2, 0.2), range(-0.2, 0.2), range(-0.2, 0.2));
    j.dynamics = artready::JointDynamics{range(0.01, 1.0), range(0.0, 0.05), 0.0};
    a.joints.push_back(j);
  }
  return a;
}

AssetDef impossible_asset() {
  AssetDef a;
  a.name = "impossible";
  a.links = {{"base", {{Vec3(0.3, 0.3, 0.05), Vec3(0, 0, 0.025)}}},
             {"wheel", {{Vec3(0.2, 0.2, 0.02), Vec3::Zero()}}},
             {"post", {{Vec3(0.02, 0.02, 0.3), Vec3(0, 0, 0.15)}}}};
  a.joints = {hinge("wheel_spin", "base", "wheel", Vec3(0, 0, 0.15), Vec3::UnitZ(), -3.14, 3.14)};
  JointDef fixed;
  fixed.name = "post_mount";
  fixed.type = JointType::Fixed;
  fixed.parent = "base";
  fixed.child = "post";
  fixed.xyz = Vec3(0, 0, 0.05);
  a.joints.push_back(fixed);
  a.initial_state = std::map<std::string, double>{{"wheel_spin", 0.3}};
  a.semantics = {"base free base", "wheel hinge wheel", "post fixed post"};
  return a;
}

}  // namespace fixtures
