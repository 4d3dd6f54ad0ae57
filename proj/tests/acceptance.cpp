// Acceptance run: one PASS/FAIL line per criterion, thresholds pinned below.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "artready/collision.hpp"
#include "artready/dynamics.hpp"
#include "artready/error.hpp"
#include "artready/overlay.hpp"
#include "artready/protocol.hpp"
#include "artready/refine.hpp"
#include "artready/tables.hpp"
#include "artready/text.hpp"
#include "fixtures.hpp"

using namespace artready;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Criterion 1
constexpr double kSrccTol = 0.01;
constexpr double kAverageTol = 0.01;
constexpr double kSrccSeconds = 1.0;
// Criterion 2
constexpr double kAlignmentTol = 0.005;
// Criterion 3
constexpr int kBoxPairs = 200;
constexpr double kPenetrationTol = 1e-6;
// Criterion 4
constexpr int kTensors = 1000;
// Criterion 5
constexpr double kTauPos = 1e-3;
constexpr double kTauOri = 1e-2;
constexpr int kMinReversals = 3;
constexpr double kMinAmplitude = 0.05;
// Criterion 6
constexpr double kRefineTol = 0.002;
constexpr int kMaxIterations = 20;
constexpr double kMaxMedianQueries = 8.0;
// Criterion 8
constexpr double kDynamicsRelTol = 0.02;
constexpr int kRandomAssets = 100;
// Criterion 9
constexpr double kRefineSeconds = 10.0;
constexpr std::size_t kMaxLinks = 12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string data(const std::string& rel) { return std::string(ARTREADY_DATA_DIR) + "/" + rel; }

struct Command {
  int status = -1;
  std::string out;
  double seconds = 0.0;
};

Command run_cli(const std::string& args) {
  Command c;
  const auto start = Clock::now();
  FILE* pipe = popen((std::string("'") + ARTREADY_CLI + "' " + args + " 2>&1").c_str(), "r");
  if (!pipe) return c;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) c.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return c;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  }
  return out;
}

Outcome srcc_reproduction() {
  const std::map<std::string, std::pair<double, double>> expected = {
      {"pi0_ours", {0.52, 32.73}}, {"pi05_ours", {0.68, 45.45}}, {"gr00t_ours", {0.34, 20.00}}};
  const auto c = run_cli("srcc --format json '" + data("vla/pi0_ours.csv") + "' '" + data("vla/pi05_ours.csv") +
                         "' '" + data("vla/gr00t_ours.csv") + "'");
  if (c.status != 0) return {false, "cli exit " + std::to_string(c.status)};
  const auto doc = nlohmann::json::parse(c.out);
  bool ok = c.seconds < kSrccSeconds;
  std::string detail;
  for (const auto& t : doc.at("tables")) {
    const auto& [coef, avg] = expected.at(t.at("table").get<std::string>());
    const double r = t.at("srcc").get<double>(), m = t.at("sim_mean").get<double>();
    ok = ok && std::abs(r - coef) <= kSrccTol && std::abs(m - avg) <= kAverageTol;
    detail += t.at("table").get<std::string>() + " " + fmt(r) + "/" + fmt(m, 2) + "; ";
  }
  return {ok && doc.at("tables").size() == 3, detail + "cli " + fmt(c.seconds, 3) + " s"};
}

Outcome alignment_reproduction() {
  const std::map<std::string, double> expected = {
      {"ours", 0.97}, {"vlm_ivw", 0.82}, {"direct", 0.86}, {"claude_code", 0.53}, {"ours_no_semantics", 0.89}};
  const auto table = parse_alignment_table(read_file(data("scores/prompt_alignment.csv")));
  bool ok = table.size() == expected.size();
  std::string detail;
  for (const auto& [method, scores] : table) {
    const double m = prompt_alignment_mean(scores);
    const auto e = expected.find(method);
    ok = ok && e != expected.end() && std::abs(m - e->second) <= kAlignmentTol;
    detail += (detail.empty() ? "" : "; ") + method + " " + fmt(m);
  }
  return {ok, detail};
}

AssetModel box_pair(const fixtures::Box& a, const fixtures::Box& b, const fs::path& dir) {
  fixtures::AssetDef def;
  def.name = "pair";
  def.links = {{"root", {}}, {"a", {a}}, {"b", {b}}};
  for (const char* child : {"a", "b"}) {
    fixtures::JointDef j;
    j.name = std::string("mount_") + child;
    j.type = JointType::Fixed;
    j.parent = "root";
    j.child = child;
    def.joints.push_back(j);
  }
  return fixtures::build_model(def, dir);
}

// Shorter of the two separating pushes on the best axis; zero when disjoint.
double aabb_depth(const fixtures::Box& a, const fixtures::Box& b) {
  double depth = 1e300;
  for (int k = 0; k < 3; ++k) {
    const double a_lo = a.center[k] - a.size[k] / 2, a_hi = a.center[k] + a.size[k] / 2;
    const double b_lo = b.center[k] - b.size[k] / 2, b_hi = b.center[k] + b.size[k] / 2;
    depth = std::min(depth, std::min(a_hi - b_lo, b_hi - a_lo));
  }
  return std::max(0.0, depth);
}

Outcome penetration_oracle() {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> size(0.05, 0.5), offset(-0.4, 0.4), angle(-3.0, 3.0);
  const auto dir = fixtures::scratch_dir("accept_boxes");
  double worst = 0.0, worst_motion = 0.0;
  bool nonneg = true;
  int overlapping = 0;
  for (int i = 0; i < kBoxPairs; ++i) {
    const fixtures::Box a{Vec3(size(rng), size(rng), size(rng)), Vec3(offset(rng), offset(rng), offset(rng))};
    const fixtures::Box b{Vec3(size(rng), size(rng), size(rng)), Vec3(offset(rng), offset(rng), offset(rng))};
    const CollisionModel cm(box_pair(a, b, dir / std::to_string(i)));
    const double phi = cm.penetration({});
    const double oracle = aabb_depth(a, b);
    overlapping += oracle > 0.0;
    nonneg = nonneg && phi >= 0.0;
    worst = std::max(worst, std::abs(phi - oracle));
    Transform t = Transform::Identity();
    t.rotate(Eigen::AngleAxisd(angle(rng), Vec3(offset(rng), offset(rng), 1.0).normalized()));
    t.pretranslate(Vec3(offset(rng), offset(rng), offset(rng)));
    worst_motion = std::max(worst_motion, std::abs(penetration_score(cm.contacts({}, std::nullopt, t)) - phi));
  }
  return {nonneg && worst <= kPenetrationTol && worst_motion <= kPenetrationTol,
          std::to_string(overlapping) + "/" + std::to_string(kBoxPairs) + " overlapping, max error " +
              fmt(worst * 1e9, 3) + " nm, rigid-motion drift " + fmt(worst_motion * 1e9, 3) + " nm"};
}

// Trigonometric roots of the characteristic cubic, ascending.
std::array<double, 3> cubic_eigenvalues(const Mat3& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  const double q = a.trace() / 3.0;
  if (p1 == 0.0) {
    std::array<double, 3> d{a(0, 0), a(1, 1), a(2, 2)};
    std::sort(d.begin(), d.end());
    return d;
  }
  const double p2 = std::pow(a(0, 0) - q, 2) + std::pow(a(1, 1) - q, 2) + std::pow(a(2, 2) - q, 2) + 2 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const double r = std::clamp(((a - q * Mat3::Identity()) / p).determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2 * p * std::cos(phi);
  const double e3 = q + 2 * p * std::cos(phi + 2 * M_PI / 3);
  return {e3, 3 * q - e1 - e3, e1};
}

Outcome inertia_feasibility() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.01, 2.0), len(1e-3, 2.0), mass(1e-3, 50.0);
  int compared = 0, disagreements = 0, shape_failures = 0;
  for (int i = 0; i < kTensors; ++i) {
    Mat3 m;
    if (i % 2 == 0) {
      m << u(rng), u(rng), u(rng), 0, u(rng), u(rng), 0, 0, u(rng);
      m(1, 0) = m(0, 1), m(2, 0) = m(0, 2), m(2, 1) = m(1, 2);
      m.diagonal().array() += 1.0;
    } else {
      const Mat3 r = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized().toRotationMatrix();
      m = r * Vec3(pos(rng), pos(rng), pos(rng)).asDiagonal() * r.transpose();
      m = 0.5 * (m + m.transpose());
    }
    const auto ev = cubic_eigenvalues(m);
    const double scale = std::abs(ev[2]) + 1.0;
    if (std::abs(ev[0]) < 1e-9 * scale || std::abs(ev[0] + ev[1] - ev[2]) < 1e-9 * scale) continue;
    ++compared;
    const bool spd = m(0, 0) > 0 && m.topLeftCorner<2, 2>().determinant() > 0 && m.determinant() > 0;
    const auto c = check_inertia(m);
    disagreements += c.spd_ok != spd || c.triangle_ok != (ev[0] + ev[1] >= ev[2]);

    const auto b = check_inertia(shape_inertia(mass(rng), BoxShape{len(rng), len(rng), len(rng)}));
    const auto y = check_inertia(shape_inertia(mass(rng), CylinderShape{len(rng), len(rng)}));
    shape_failures += !(b.spd_ok && b.triangle_ok) + !(y.spd_ok && y.triangle_ok);
  }
  return {disagreements == 0 && shape_failures == 0 && compared >= kTensors * 99 / 100,
          std::to_string(compared) + " compared, " + std::to_string(disagreements) + " disagreements, " +
              std::to_string(shape_failures) + " infeasible shape tensors"};
}

StabilityResult passive(const fixtures::AssetDef& def, const std::string& tag) {
  const auto model = fixtures::build_model(def, fixtures::scratch_dir(tag));
  JointConfig q0;
  if (def.initial_state) q0.values = *def.initial_state;
  const auto run = simulate_passive(model, q0);
  return stability_metrics(run.trajectory, run.reference, model);
}

Outcome stability_protocol() {
  const auto damped = passive(fixtures::hinged_box(500.0, 0.5, 0.0), "accept_damped");
  const auto spring = passive(fixtures::stiff_hinge(2.0, 0.5), "accept_spring");
  const bool damped_ok = damped.d_pos <= kTauPos && damped.d_ori <= kTauOri;
  bool flagged = false;
  std::string osc = "none";
  for (const auto& j : spring.joints) {
    osc = j.joint + " " + std::to_string(j.reversals) + " reversals, amplitude " + fmt(j.amplitude);
    flagged = flagged || (j.reversals >= kMinReversals && j.amplitude > kMinAmplitude);
  }
  flagged = flagged && !spring.oscillating_joints.empty();
  return {damped_ok && flagged, "damped D_pos " + fmt(damped.d_pos * 1e3, 4) + " mm, D_ori " +
                                    fmt(damped.d_ori, 5) + " rad; spring " + osc};
}

Outcome refinement_convergence() {
  const auto dir = fixtures::scratch_dir("accept_suite");
  std::vector<int> queries;
  int converged = 0, violations = 0, worst_iterations = 0;
  const auto suite = fixtures::resolvable_suite();
  for (const auto& def : suite) {
    const auto m = fixtures::build_model(def, dir);
    JointConfig q;
    if (m.documented_initial_state) q.values = *m.documented_initial_state;
    HeuristicStateProposer p;
    RefineConfig cfg;
    cfg.tolerance = kRefineTol;
    cfg.max_iterations = kMaxIterations;
    const auto r = refine_state(m, q, def.guidance, p, cfg);
    converged += r.trace.best_phi <= kRefineTol && r.trace.initial_phi > kRefineTol;
    worst_iterations = std::max(worst_iterations, r.trace.iterations_run);
    queries.push_back(r.trace.query_count);
    JointConfig current = r.trace.initial_q;
    double phi = r.trace.initial_phi;
    for (const auto& e : r.trace.iterations) {
      for (const auto& [joint, value] : current.values) {
        if (std::find(e.focus.begin(), e.focus.end(), joint) == e.focus.end() && e.q.get(joint) != value) ++violations;
      }
      if (e.accepted) {
        if (!(e.phi < phi)) ++violations;
        current = e.q;
        phi = e.phi;
      }
    }
  }
  std::sort(queries.begin(), queries.end());
  const std::size_t n = queries.size();
  const double median = n % 2 ? queries[n / 2] : 0.5 * (queries[n / 2 - 1] + queries[n / 2]);
  return {converged == static_cast<int>(n) && n == 10 && violations == 0 && median <= kMaxMedianQueries,
          std::to_string(converged) + "/" + std::to_string(n) + " converged, max iterations " +
              std::to_string(worst_iterations) + ", median queries " + fmt(median, 1) + ", trace violations " +
              std::to_string(violations)};
}

Outcome overlay_round_trip() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int assets = 0, mismatches = 0, not_idempotent = 0;
  for (const auto& def : fixtures::resolvable_suite()) {
    const auto model = fixtures::build_model(def, fixtures::scratch_dir("accept_rt"));
    Overlay o;
    o.uniform_scale_factor = 0.3 + u(rng);
    for (const auto& l : model.links) {
      const double m = 0.1 + u(rng);
      o.links[l.name].mass = m;
      o.links[l.name].inertia = shape_inertia(m, BoxShape{0.1 + u(rng), 0.1 + u(rng), 0.1 + u(rng)});
      o.links[l.name].center_of_mass = Triple{u(rng) / 10, -u(rng) / 10, 1.0 / 3.0};
    }
    std::map<std::string, double> state;
    for (const auto& j : model.joints) {
      if (!j.active()) continue;
      o.joints[j.name] = JointOverlay{u(rng), u(rng) / 7, u(rng) / 3};
      state[j.name] = j.limits ? j.limits->lower + u(rng) * (j.limits->upper - j.limits->lower) : u(rng);
    }
    o.initial_joint_positions = state;
    const auto v = validate_overlay(o, model);
    not_idempotent += !(validate_overlay(v.overlay, model).overlay == v.overlay);
    const auto revised = apply_overlay(model, v.overlay);
    const auto back = parse_urdf(write_urdf(revised), revised.base_dir);
    bool ok = back.same_declared_fields(revised) && back.documented_initial_state == v.overlay.initial_joint_positions;
    for (const auto& [name, lo] : v.overlay.links) {
      ok = ok && back.find_link(name)->mass == lo.mass && back.find_link(name)->inertia == lo.inertia;
    }
    for (const auto& [name, jo] : v.overlay.joints) {
      const auto& j = *back.find_joint(name);
      ok = ok && j.dynamics == JointDynamics{jo.damping, jo.friction, jo.stiffness};
      if (j.limits) ok = ok && *j.limits == *jo.limits;
    }
    mismatches += !ok;
    ++assets;
  }
  return {mismatches == 0 && not_idempotent == 0, std::to_string(assets) + " assets, " + std::to_string(mismatches) +
                                                      " mismatches, " + std::to_string(not_idempotent) +
                                                      " non-idempotent validations"};
}

DynState rest_state(const Simulator& sim) {
  DynState s;
  for (const auto& j : sim.dof_joints()) s.q.values[j] = 0.0, s.qdot[j] = 0.0;
  return s;
}

Outcome dynamics_sanity() {
  constexpr double dt = 1.0 / 240.0;
  // Ballistic drop over one second.
  fixtures::AssetDef block;
  block.name = "block";
  block.links = {{"block", {{Vec3(0.1, 0.1, 0.1), Vec3::Zero()}}, 1000.0}};
  DynamicsParams free_fall;
  free_fall.ground.reset();
  const Simulator drop_sim(fixtures::build_model(block, fixtures::scratch_dir("accept_drop")), free_fall);
  DynState s = rest_state(drop_sim);
  for (int i = 0; i < 240; ++i) s = drop_sim.step(s, dt);
  const double drop = -s.base_pose.translation().z();
  const double drop_err = std::abs(drop - 0.5 * 9.81) / (0.5 * 9.81);

  // Torsional pendulum: flap 0.2 x 0.02 x 0.08 at density 500, centred 0.1 m off the axis.
  const double k = 0.5;
  DynamicsParams pinned;
  pinned.fixed_base = true;
  pinned.ground.reset();
  const Simulator pend(fixtures::build_model(fixtures::stiff_hinge(k, 0.0), fixtures::scratch_dir("accept_pend")),
                       pinned);
  s = rest_state(pend);
  s.q.values["flap_hinge"] = 0.05;
  const double m = 500.0 * 0.2 * 0.02 * 0.08;
  const double inertia = m * (0.2 * 0.2 + 0.02 * 0.02) / 12.0 + m * 0.1 * 0.1;
  const double expected = 2.0 * M_PI * std::sqrt(inertia / k);
  std::vector<double> crossings;
  double prev = 0.05;
  for (int i = 1; i <= 2400 && crossings.size() < 6; ++i) {
    s = pend.step(s, dt);
    const double q = s.q.get("flap_hinge");
    if (prev > 0.0 && q <= 0.0) crossings.push_back((i - 1 + prev / (prev - q)) * dt);
    prev = q;
  }
  const double period =
      crossings.size() >= 2 ? (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1) : 0.0;
  const double period_err = std::abs(period - expected) / expected;

  // Dissipativity on random damped assets without contact.
  const auto dir = fixtures::scratch_dir("accept_dissipative");
  int increases = 0;
  for (unsigned seed = 1; seed <= kRandomAssets; ++seed) {
    DynamicsParams params;
    params.ground.reset();
    const Simulator sim(fixtures::build_model(fixtures::random_passive_asset(seed), dir), params);
    DynState d = rest_state(sim);
    std::mt19937 rng(seed);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 6; ++i) d.base_twist[i] = n01(rng);
    for (auto& [j, v] : d.qdot) v = 2.0 * n01(rng);
    double e = sim.energy(d);
    for (int i = 0; i < 240; ++i) {
      d = sim.step(d, dt);
      const double e2 = sim.energy(d);
      increases += e2 > e + 1e-12 * std::max(1.0, std::abs(e));
      e = e2;
    }
  }
  return {drop_err <= kDynamicsRelTol && period_err <= kDynamicsRelTol && increases == 0,
          "drop error " + fmt(drop_err * 100, 3) + "%, period " + fmt(period, 4) + " s vs " + fmt(expected, 4) +
              " s, energy increases " + std::to_string(increases) + " over " + std::to_string(kRandomAssets) +
              " assets"};
}

fs::path write_manifest(const std::vector<fixtures::AssetDef>& defs, const fs::path& dir) {
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  for (const auto& def : defs) {
    fixtures::write_asset(def, dir);
    manifest.push_back({{"id", def.name},
                        {"urdf", def.name + "/" + def.name + ".urdf"},
                        {"semantics", def.name + "/semantics.txt"},
                        {"guidance", def.guidance}});
  }
  write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  return dir / "manifest.json";
}

Outcome end_to_end_runtime() {
  const auto def = fixtures::large_cabinet();
  const auto dir = fixtures::scratch_dir("accept_runtime");
  const auto manifest = write_manifest({def}, dir / "in");
  const auto c = run_cli("refine --manifest '" + manifest.string() + "' --out '" + (dir / "out").string() + "'");
  const auto report_path = dir / "out" / def.name / "report.json";
  if (c.status == 2 || c.status < 0 || !fs::exists(report_path)) return {false, "refine did not complete: " + c.out};
  const auto report = nlohmann::json::parse(read_file(report_path.string()));
  return {c.seconds < kRefineSeconds && def.links.size() <= kMaxLinks,
          std::to_string(def.links.size()) + " links in " + fmt(c.seconds, 2) + " s, classified " +
              report.at("classification").get<std::string>()};
}

Outcome determinism() {
  auto defs = fixtures::resolvable_suite();
  defs.push_back(fixtures::impossible_asset());
  const auto dir = fixtures::scratch_dir("accept_determinism");
  const auto manifest = write_manifest(defs, dir / "in");
  std::vector<std::map<std::string, std::string>> trees;
  for (const auto& [run, workers] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 4}, {"c", 1}, {"d", 4}}) {
    const auto out = dir / run;
    const auto c = run_cli("refine --seed 7 --workers " + std::to_string(workers) + " --manifest '" +
                           manifest.string() + "' --out '" + out.string() + "'");
    if (c.status != 0 && c.status != 1) return {false, "refine exited " + std::to_string(c.status)};
    trees.push_back(tree_contents(out));
  }
  bool same = true;
  for (const auto& t : trees) same = same && t == trees.front();
  return {same && !trees.front().empty(), std::to_string(trees.front().size()) +
                                              " files compared across 4 runs (workers 1, 4, 1, 4)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"SRCC reproduction", srcc_reproduction},
      {"prompt-alignment reproduction", alignment_reproduction},
      {"penetration oracle", penetration_oracle},
      {"inertia feasibility", inertia_feasibility},
      {"stability protocol", stability_protocol},
      {"refinement convergence", refinement_convergence},
      {"overlay round-trip", overlay_round_trip},
      {"dynamics sanity", dynamics_sanity},
      {"end-to-end runtime", end_to_end_runtime},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << " " << criteria[i].first << ": " << (o.pass ? "PASS" : "FAIL") << " ("
              << o.detail << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
