#include "artready/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

namespace {

ordered_json config_json(const JointConfig& q) {
  ordered_json o = ordered_json::object();
  for (const auto& [k, v] : q.values) o[k] = v;
  return o;
}

template <typename T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

ordered_json stability_to_json(const StabilityResult& s) {
  ordered_json o;
  o["d_pos"] = s.d_pos;
  o["d_ori"] = s.d_ori;
  o["pos_pass"] = s.pos_pass;
  o["ori_pass"] = s.ori_pass;
  o["orientation_metric"] = "geodesic";
  o["passed"] = s.passed();
  ordered_json joints = ordered_json::array();
  for (const auto& j : s.joints) {
    const bool osc = std::any_of(s.oscillating_joints.begin(), s.oscillating_joints.end(),
                                 [&](const OscillationEntry& e) { return e.joint == j.joint; });
    joints.push_back({{"joint", j.joint}, {"amplitude", j.amplitude}, {"reversals", j.reversals}, {"oscillating", osc}});
  }
  o["joints"] = std::move(joints);
  ordered_json osc = ordered_json::array();
  for (const auto& j : s.oscillating_joints) osc.push_back(j.joint);
  o["oscillating_joints"] = std::move(osc);
  return o;
}

ordered_json trace_to_json(const RefineTrace& t) {
  ordered_json o;
  o["initial_q"] = config_json(t.initial_q);
  o["initial_phi"] = t.initial_phi;
  o["best_q"] = config_json(t.best_q);
  o["best_phi"] = t.best_phi;
  o["converged"] = t.converged;
  o["iterations_run"] = t.iterations_run;
  o["query_count"] = t.query_count;
  o["proposer_failure"] = opt(t.proposer_failure);
  ordered_json entries = ordered_json::array();
  for (const auto& e : t.iterations) {
    entries.push_back({{"iteration", e.iteration},
                       {"source", to_string(e.source)},
                       {"accepted", e.accepted},
                       {"phi", e.phi},
                       {"focus", e.focus},
                       {"q", config_json(e.q)}});
  }
  o["iterations"] = std::move(entries);
  return o;
}

ordered_json report_to_json(const ReadinessReport& r) {
  ordered_json o;
  o["schema_version"] = kReportSchemaVersion;
  o["asset_id"] = r.asset_id;
  o["classification"] = to_string(r.classification);
  o["failure_detail"] = r.failure_detail;
  o["scale"] = {{"factor", opt(r.scale_factor)}, {"delta_scale", opt(r.delta_scale)}};
  ordered_json dj = ordered_json::object();
  for (const auto& [k, v] : r.delta_joint) dj[k] = v;
  o["joint_state"] = {{"requested", config_json(r.q_requested)},
                      {"final", config_json(r.q0)},
                      {"valid", r.joint_config_valid},
                      {"delta_joint", std::move(dj)}};
  o["prompt_alignment"] = opt(r.prompt_alignment);
  o["penetration"] = {{"initial", opt(r.initial_penetration)}, {"final", opt(r.penetration)}};
  o["stability"] = r.stability ? stability_to_json(*r.stability) : ordered_json(nullptr);
  o["simulation_error"] = opt(r.simulation_error);
  o["refinement"] = r.trace ? trace_to_json(*r.trace) : ordered_json(nullptr);
  o["overlay_diagnostics"] = r.overlay_diagnostics;
  return o;
}

namespace {

std::string csv_number(const ordered_json& v) { return v.is_number() ? format_number(v.get<double>()) : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

const ordered_json& member(const ordered_json& o, const char* key) {
  static const ordered_json null_value;
  return o.is_object() && o.contains(key) ? o[key] : null_value;
}

}  // namespace

std::string summary_csv(const std::vector<ordered_json>& reports) {
  std::ostringstream out;
  out << "asset_id,classification,initial_penetration,penetration,d_pos,d_ori,oscillating_joints,query_count,"
         "iterations\n";
  for (const auto& r : reports) {
    const auto& stab = member(r, "stability");
    const auto& ref = member(r, "refinement");
    std::string osc;
    for (const auto& j : member(stab, "oscillating_joints")) osc += (osc.empty() ? "" : ";") + j.get<std::string>();
    out << csv_field(member(r, "asset_id").get<std::string>()) << ','
        << member(r, "classification").get<std::string>() << ','
        << csv_number(member(member(r, "penetration"), "initial")) << ','
        << csv_number(member(member(r, "penetration"), "final")) << ',' << csv_number(member(stab, "d_pos")) << ','
        << csv_number(member(stab, "d_ori")) << ',' << csv_field(osc) << ','
        << csv_number(member(ref, "query_count")) << ',' << csv_number(member(ref, "iterations_run")) << '\n';
  }
  return out.str();
}

FailureDistribution failure_distribution(const std::vector<ordered_json>& reports) {
  if (reports.empty()) throw Error(ErrorKind::InvalidArgument, "no reports to aggregate");
  FailureDistribution d;
  for (auto c : {FailureClass::Pass, FailureClass::InvalidJointConfig, FailureClass::EstimationFailure,
                 FailureClass::PenetrationFailure, FailureClass::Instability}) {
    d.counts[std::string(to_string(c))] = 0;
  }
  std::vector<double> queries;
  for (const auto& r : reports) {
    ++d.total;
    ++d.counts[member(r, "classification").get<std::string>()];
    const auto& q = member(member(r, "refinement"), "query_count");
    if (q.is_number()) queries.push_back(q.get<double>());
  }
  d.assets_with_queries = static_cast<int>(queries.size());
  if (!queries.empty()) {
    double sum = 0.0;
    for (double q : queries) sum += q;
    d.query_mean = sum / queries.size();
    if (queries.size() > 1) {
      double ss = 0.0;
      for (double q : queries) ss += (q - d.query_mean) * (q - d.query_mean);
      d.query_sd = std::sqrt(ss / (queries.size() - 1));
    }
  }
  return d;
}

ordered_json to_json(const FailureDistribution& d) {
  ordered_json classes = ordered_json::object();
  for (const auto& [name, n] : d.counts) {
    classes[name] = {{"count", n}, {"percent", 100.0 * n / d.total}};
  }
  return {{"total", d.total},
          {"classes", std::move(classes)},
          {"queries", {{"mean", d.query_mean}, {"sd", d.query_sd}, {"assets", d.assets_with_queries}}}};
}

std::string to_text(const FailureDistribution& d) {
  std::string out = "assets: " + std::to_string(d.total) + "\n";
  for (const auto& [name, n] : d.counts) {
    out += "  " + name + ": " + std::to_string(n) + " (" + format_fixed(100.0 * n / d.total, 1) + "%)\n";
  }
  out += "queries per asset: " + format_fixed(d.query_mean, 2) + " +/- " + format_fixed(d.query_sd, 2) + "\n";
  return out;
}

std::vector<ordered_json> load_reports(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory", dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ordered_json> out;
  for (const auto& f : files) {
    auto doc = ordered_json::parse(read_file(f.string()), nullptr, false);
    if (doc.is_object() && doc.contains("schema_version") && doc.contains("classification")) {
      out.push_back(std::move(doc));
    }
  }
  return out;
}

}  // namespace artready
