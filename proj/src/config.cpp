#include "artready/config.hpp"

#include <cmath>
#include <set>
#include <variant>

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "focus_cap binds as a 64-bit count");
using Target = std::variant<double*, int*, bool*, std::string*, std::uint64_t*>;

struct Binding {
  std::string key;
  Target target;
};

std::vector<Binding> bindings(RunConfig& c) {
  auto& p = c.pipeline;
  auto& d = p.passive.params;
  std::vector<Binding> b = {
      {"stability.tau_pos", &p.thresholds.tau_pos},
      {"stability.tau_ori", &p.thresholds.tau_ori},
      {"stability.amp_revolute", &p.thresholds.amp_revolute},
      {"stability.amp_prismatic", &p.thresholds.amp_prismatic},
      {"dynamics.dt", &p.passive.dt},
      {"dynamics.t_set", &p.passive.t_set},
      {"dynamics.t_test", &p.passive.t_test},
      {"dynamics.clearance", &p.passive.clearance},
      {"dynamics.gravity", &d.gravity},
      {"dynamics.ground_stiffness", &d.ground_stiffness},
      {"dynamics.ground_friction", &d.ground_friction},
      {"dynamics.friction_velocity_scale", &d.friction_velocity_scale},
      {"dynamics.energy_guard", &d.energy_guard},
      {"refine.tolerance", &p.refine.tolerance},
      {"refine.max_iterations", &p.refine.max_iterations},
      {"refine.perturbation_scale", &p.refine.perturbation_scale},
      {"refine.perturbation_count", &p.refine.perturbation_count},
      {"refine.grid_points_per_joint", &p.refine.grid_points_per_joint},
      {"refine.focus_cap", &p.refine.focus_cap},
      {"refine.requery_on_reject", &p.refine.requery_on_reject},
      {"refine.seed", &p.refine.seed},
      {"proposer.endpoint", &p.endpoint},
      {"proposer.model", &p.remote_model},
      {"proposer.rate_limit", &p.rate_limit},
      {"heuristic.gripper_limit", &p.heuristic.gripper_limit},
      {"heuristic.solid_fill_ratio", &p.heuristic.solid_fill_ratio},
      {"heuristic.hollow_solid", &p.heuristic.hollow_solid},
      {"heuristic.hollow_shell", &p.heuristic.hollow_shell},
      {"heuristic.revolute_spring", &p.heuristic.revolute_spring},
      {"heuristic.prismatic_spring", &p.heuristic.prismatic_spring},
      {"reward.w_reach", &c.reward.w_reach},
      {"reward.w_reach_xy", &c.reward.w_reach_xy},
      {"reward.w_joint", &c.reward.w_joint},
      {"reward.sigma_reach", &c.reward.sigma_reach},
      {"reward.sigma_reach_xy", &c.reward.sigma_reach_xy},
      {"reward.delta", &c.reward.delta},
      {"reward.alpha", &c.reward.alpha},
      {"reward.lambda_grip", &c.reward.lambda_grip},
      {"reward.lambda_down", &c.reward.lambda_down},
      {"reward.lambda_xy", &c.reward.lambda_xy},
      {"reward.dt", &c.reward.dt},
      {"run.workers", &c.workers},
  };
  for (auto& [category, size] : p.heuristic.category_target_size) {
    b.push_back({"heuristic.target_size." + category, &size});
  }
  return b;
}

std::string unquote(const std::string& v, const std::string& where) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') throw Error(ErrorKind::Config, "expected a quoted string", where);
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) ++i;
    out += v[i];
  }
  return out;
}

double number(const std::string& v, const std::string& where) {
  const auto n = parse_number(v);
  if (!n) throw Error(ErrorKind::Config, "expected a number, got '" + v + "'", where);
  return *n;
}

long long integer(const std::string& v, const std::string& where) {
  const double n = number(v, where);
  if (n != std::floor(n) || n < 0) throw Error(ErrorKind::Config, "expected a non-negative integer", where);
  return static_cast<long long>(n);
}

/// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

RunConfig parse_config(std::string_view text, RunConfig c) {
  std::string section;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::Config, "unterminated section header", where);
      section = trim(line.substr(1, line.size() - 2));
      bool known = section == "proposer" || section == "heuristic.target_size";
      for (const auto& b : bindings(c)) known = known || b.key.rfind(section + ".", 0) == 0;
      if (!known) throw Error(ErrorKind::Config, "unknown section '" + section + "'", where);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "expected key = value", where);
    const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "proposer.kind") {
      const auto kind = proposer_kind_from_string(unquote(value, where));
      if (!kind) throw Error(ErrorKind::Config, "proposer.kind must be \"heuristic\" or \"remote\"", where);
      c.pipeline.proposer = *kind;
      continue;
    }
    if (key.rfind("heuristic.target_size.", 0) == 0) {
      c.pipeline.heuristic.category_target_size[key.substr(22)] = number(value, where);
      continue;
    }
    bool found = false;
    for (auto& b : bindings(c)) {
      if (b.key != key) continue;
      found = true;
      std::visit(
          [&](auto* target) {
            using T = std::remove_pointer_t<decltype(target)>;
            if constexpr (std::is_same_v<T, double>) *target = number(value, where);
            else if constexpr (std::is_same_v<T, std::string>) *target = unquote(value, where);
            else if constexpr (std::is_same_v<T, bool>) {
              if (value != "true" && value != "false") throw Error(ErrorKind::Config, "expected true or false", where);
              *target = value == "true";
            } else {
              *target = static_cast<T>(integer(value, where));
            }
          },
          b.target);
    }
    if (!found) throw Error(ErrorKind::Config, "unknown key '" + key + "'", where);
  }
  check_refine_config(c.pipeline.refine);
  if (!(c.pipeline.passive.dt > 0.0) || c.pipeline.passive.t_set < 0.0 || !(c.pipeline.passive.t_test > 0.0)) {
    throw Error(ErrorKind::Config, "dynamics times must be positive");
  }
  if (c.workers < 1) throw Error(ErrorKind::Config, "run.workers must be at least 1");
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  return parse_config(read_file(path.string()), std::move(base));
}

std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string out;
  std::string section;
  const auto header = [&](const std::string& key) {
    const std::string s = key.substr(0, key.rfind('.'));
    if (s != section) {
      out += (out.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    return key.substr(key.rfind('.') + 1);
  };
  for (auto& b : bindings(copy)) {
    const std::string name = header(b.key);
    if (b.key == "proposer.endpoint") out += "kind = \"" + std::string(to_string(cfg.pipeline.proposer)) + "\"\n";
    std::visit(
        [&](auto* v) {
          using T = std::remove_pointer_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) out += name + " = " + format_number(*v) + "\n";
          else if constexpr (std::is_same_v<T, std::string>) out += name + " = \"" + *v + "\"\n";
          else if constexpr (std::is_same_v<T, bool>) out += name + " = " + (*v ? "true" : "false") + "\n";
          else out += name + " = " + std::to_string(*v) + "\n";
        },
        b.target);
  }
  return out;
}

std::vector<AssetJob> load_manifest(const std::filesystem::path& path) {
  const auto doc = ordered_json::parse(read_file(path.string()), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) throw Error(ErrorKind::Config, "manifest must be a JSON array", path.string());
  const auto base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<AssetJob> jobs;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    const std::string where = "manifest[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("urdf") || !e["urdf"].is_string()) {
      throw Error(ErrorKind::Config, "entry needs a urdf path", where);
    }
    AssetJob job;
    job.urdf = resolve(e["urdf"].get<std::string>());
    job.id = e.value("id", job.urdf.stem().string());
    if (e.contains("semantics") && e["semantics"].is_string()) job.semantics = resolve(e["semantics"].get<std::string>());
    job.guidance = e.value("guidance", "");
    if (e.contains("reference_scale") && e["reference_scale"].is_number()) {
      job.reference_scale = e["reference_scale"].get<double>();
    }
    if (e.contains("reference_state") && e["reference_state"].is_object()) {
      job.reference_state = e["reference_state"].get<std::map<std::string, double>>();
    }
    if (e.contains("prompt_alignment") && e["prompt_alignment"].is_number()) {
      job.prompt_alignment = e["prompt_alignment"].get<double>();
    }
    jobs.push_back(std::move(job));
  }
  std::set<std::string> ids;
  for (const auto& j : jobs) {
    if (!ids.insert(j.id).second) throw Error(ErrorKind::Config, "duplicate asset id '" + j.id + "'", path.string());
  }
  return jobs;
}

}  // namespace artready
