// artready command-line entry point. Exit codes: 0 success, 1 protocol
// failure (some asset did not pass), 2 usage or I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "artready/config.hpp"
#include "artready/error.hpp"
#include "artready/mesh.hpp"
#include "artready/render.hpp"
#include "artready/report.hpp"
#include "artready/tables.hpp"
#include "artready/text.hpp"

namespace fs = std::filesystem;
using namespace artready;

namespace {

constexpr int kOk = 0;
constexpr int kProtocolFailure = 1;
constexpr int kUsage = 2;

struct Options {
  std::string format = "text";
  std::string config;
  std::string manifest;
  std::string out;
  int workers = 0;
  std::string proposer;
  std::string endpoint;
  std::optional<std::uint64_t> seed;
  std::string semantics;
  std::string id;
  std::vector<std::string> inputs;
  std::vector<std::string> views{"front", "back", "left", "right", "perspective"};
  int size = 256;
  std::string spread = "se";
};

void print_json(const ordered_json& doc) { std::cout << doc.dump(2) << '\n'; }

RunConfig effective_config(const Options& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  if (o.workers > 0) cfg.workers = o.workers;
  if (!o.proposer.empty()) {
    const auto kind = proposer_kind_from_string(o.proposer);
    if (!kind) throw Error(ErrorKind::Config, "--proposer must be heuristic or remote");
    cfg.pipeline.proposer = *kind;
  }
  if (!o.endpoint.empty()) cfg.pipeline.endpoint = o.endpoint;
  if (o.seed) cfg.pipeline.refine.seed = *o.seed;
  if (cfg.pipeline.proposer == ProposerKind::Remote && cfg.pipeline.endpoint.empty()) {
    throw Error(ErrorKind::Config, "the remote proposer needs --endpoint");
  }
  return cfg;
}

ordered_json vec(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

int cmd_analyze(const Options& o) {
  const AssetModel model = load_urdf(o.inputs.at(0));
  const SemanticMap semantics = o.semantics.empty() ? SemanticMap{} : load_semantics(o.semantics);
  const auto analyses = analyze_links(model);
  if (o.format == "json") {
    ordered_json doc;
    doc["asset"] = model.name;
    ordered_json links = ordered_json::array();
    for (const auto& link : model.links) {
      ordered_json e;
      e["link"] = link.name;
      const auto it = analyses.find(link.name);
      e["has_geometry"] = it != analyses.end();
      if (it != analyses.end()) {
        const MeshAnalysis& a = it->second;
        e["volume"] = a.volume;
        e["volume_source"] = to_string(a.volume_source);
        e["surface_area"] = a.surface_area;
        e["bbox_min"] = vec(a.bbox_min);
        e["bbox_max"] = vec(a.bbox_max);
        e["center_of_mass"] = vec(a.center_of_mass);
        e["watertight"] = a.watertight;
      }
      if (const auto s = semantics.entries.find(link.name); s != semantics.entries.end()) {
        e["semantic_label"] = s->second.semantic_label;
        e["joint_kind"] = s->second.joint_kind;
      }
      links.push_back(std::move(e));
    }
    doc["links"] = std::move(links);
    ordered_json joints = ordered_json::array();
    for (const auto& j : model.joints) {
      ordered_json e{{"joint", j.name}, {"type", to_string(j.type)}, {"parent", j.parent}, {"child", j.child}};
      if (j.limits) e["limits"] = ordered_json::array({j.limits->lower, j.limits->upper});
      joints.push_back(std::move(e));
    }
    doc["joints"] = std::move(joints);
    doc["semantic_warnings"] = semantics.warnings;
    doc["orphan_semantics"] = orphan_semantics(semantics, model);
    print_json(doc);
    return kOk;
  }
  std::printf("asset %s: %zu links, %zu joints\n", model.name.c_str(), model.links.size(), model.joints.size());
  std::printf("%-20s %14s %14s %-26s %-10s %s\n", "link", "volume_m3", "area_m2", "extents_m", "watertight", "source");
  for (const auto& link : model.links) {
    const auto it = analyses.find(link.name);
    if (it == analyses.end()) {
      std::printf("%-20s %14s\n", link.name.c_str(), "(no geometry)");
      continue;
    }
    const MeshAnalysis& a = it->second;
    const Vec3 e = a.extents();
    const std::string ext = format_fixed(e.x(), 4) + "x" + format_fixed(e.y(), 4) + "x" + format_fixed(e.z(), 4);
    std::printf("%-20s %14.8f %14.8f %-26s %-10s %s\n", link.name.c_str(), a.volume, a.surface_area, ext.c_str(),
                a.watertight ? "yes" : "no", std::string(to_string(a.volume_source)).c_str());
  }
  for (const auto& w : semantics.warnings) std::printf("warning: %s\n", w.c_str());
  return kOk;
}

/// Mesh references rewritten relative to the directory the URDF is written to.
AssetModel relocate_meshes(AssetModel model, const fs::path& dir) {
  const auto fix = [&](MeshRef& m) {
    if (m.filename.rfind("package://", 0) == 0) return;
    const fs::path abs = fs::absolute(model.resolve(m.filename));
    m.filename = fs::relative(abs, fs::absolute(dir)).generic_string();
  };
  for (auto& link : model.links) {
    for (auto& m : link.visual_meshes) fix(m);
    for (auto& m : link.collision_meshes) fix(m);
  }
  model.base_dir = dir;
  return model;
}

int cmd_refine(const Options& o) {
  if (o.manifest.empty() || o.out.empty()) throw CLI::ValidationError("refine needs --manifest and --out");
  const RunConfig cfg = effective_config(o);
  const auto jobs = load_manifest(o.manifest);
  RateLimiter::global().set_rate(cfg.pipeline.rate_limit);
  const auto results = run_batch(jobs, cfg.pipeline, cfg.workers);

  const fs::path out(o.out);
  fs::create_directories(out);
  std::vector<ordered_json> docs;
  bool all_pass = true;
  for (const auto& r : results) {
    const fs::path dir = out / r.report.asset_id;
    fs::create_directories(dir);
    if (r.revised) {
      write_file((dir / (r.report.asset_id + ".urdf")).string(), write_urdf(relocate_meshes(*r.revised, dir)));
    }
    docs.push_back(report_to_json(r.report));
    write_file((dir / "report.json").string(), docs.back().dump(2) + "\n");
    all_pass = all_pass && r.report.classification == FailureClass::Pass;
  }
  write_file((out / "summary.csv").string(), summary_csv(docs));

  const FailureDistribution dist = failure_distribution(docs);
  if (o.format == "json") {
    print_json({{"assets", docs.size()}, {"distribution", to_json(dist)}, {"summary_csv", (out / "summary.csv").string()}});
  } else {
    for (const auto& d : docs) {
      std::printf("%-24s %s\n", d["asset_id"].get<std::string>().c_str(), d["classification"].get<std::string>().c_str());
    }
    std::cout << to_text(dist);
  }
  return all_pass ? kOk : kProtocolFailure;
}

int cmd_evaluate(const Options& o) {
  const RunConfig cfg = effective_config(o);
  const AssetModel model = load_urdf(o.inputs.at(0));
  const ReadinessReport r = evaluate_asset(model, o.id, cfg.pipeline);
  const ordered_json doc = report_to_json(r);
  if (!o.out.empty()) write_file(o.out, doc.dump(2) + "\n");
  if (o.format == "json") {
    print_json(doc);
  } else {
    std::printf("asset: %s\nclassification: %s\n", r.asset_id.c_str(), std::string(to_string(r.classification)).c_str());
    if (!r.failure_detail.empty()) std::printf("detail: %s\n", r.failure_detail.c_str());
    if (r.penetration) std::printf("penetration: %.6f m\n", *r.penetration);
    if (r.stability) {
      std::printf("D_pos: %.3e m (%s)\nD_ori: %.3e rad (%s)\n", r.stability->d_pos, r.stability->pos_pass ? "pass" : "fail",
                  r.stability->d_ori, r.stability->ori_pass ? "pass" : "fail");
      for (const auto& j : r.stability->oscillating_joints) {
        std::printf("oscillating: %s amplitude %.4f reversals %d\n", j.joint.c_str(), j.amplitude, j.reversals);
      }
    }
  }
  return r.classification == FailureClass::Pass ? kOk : kProtocolFailure;
}

int cmd_srcc(const Options& o) {
  ordered_json rows = ordered_json::array();
  for (const auto& path : o.inputs) {
    const TaskRates t = load_rate_table(path);
    const SrccResult c = srcc(t.sim, t.real);
    double sim = 0.0, real = 0.0;
    for (std::size_t i = 0; i < t.sim.size(); ++i) sim += t.sim[i], real += t.real[i];
    const double n = static_cast<double>(t.sim.size());
    rows.push_back({{"table", fs::path(path).stem().string()},
                    {"tasks", t.sim.size()},
                    {"sim_mean", sim / n},
                    {"real_mean", real / n},
                    {"srcc", c.defined ? ordered_json(c.value) : ordered_json(nullptr)}});
  }
  if (o.format == "json") {
    print_json({{"tables", rows}});
    return kOk;
  }
  std::printf("%-20s %6s %10s %10s %8s\n", "table", "tasks", "sim_mean", "real_mean", "srcc");
  for (const auto& r : rows) {
    const std::string c = r["srcc"].is_null() ? "N/A" : format_fixed(r["srcc"].get<double>(), 4);
    std::printf("%-20s %6d %10.4f %10.4f %8s\n", r["table"].get<std::string>().c_str(), r["tasks"].get<int>(),
                r["sim_mean"].get<double>(), r["real_mean"].get<double>(), c.c_str());
  }
  return kOk;
}

int cmd_alignment(const Options& o) {
  const auto methods = parse_alignment_table(read_file(o.inputs.at(0)));
  ordered_json rows = ordered_json::array();
  for (const auto& [method, scores] : methods) {
    rows.push_back({{"method", method}, {"objects", scores.size()}, {"mean", prompt_alignment_mean(scores)}});
  }
  if (o.format == "json") {
    print_json({{"methods", rows}});
  } else {
    for (const auto& r : rows) {
      std::printf("%-20s %3d objects  mean %.4f\n", r["method"].get<std::string>().c_str(), r["objects"].get<int>(),
                  r["mean"].get<double>());
    }
  }
  return kOk;
}

int cmd_realism(const Options& o) {
  if (o.spread != "se" && o.spread != "task-sd") throw CLI::ValidationError("--spread must be se or task-sd");
  const RealismSpread spread = o.spread == "se" ? RealismSpread::StandardError : RealismSpread::TaskSd;
  ordered_json rows = ordered_json::array();
  for (const auto& [method, tasks] : parse_realism_table(read_file(o.inputs.at(0)))) {
    const RealismResult r = realism_mean_from_summaries(tasks, spread);
    rows.push_back({{"method", method}, {"tasks", tasks.size()}, {"mean", r.mean}, {"uncertainty", r.standard_error}});
  }
  if (o.format == "json") {
    print_json({{"spread", o.spread}, {"methods", rows}});
  } else {
    for (const auto& r : rows) {
      std::printf("%-12s %3d tasks  %.4f +/- %.4f\n", r["method"].get<std::string>().c_str(), r["tasks"].get<int>(),
                  r["mean"].get<double>(), r["uncertainty"].get<double>());
    }
  }
  return kOk;
}

int cmd_report(const Options& o) {
  const auto docs = load_reports(o.inputs.at(0));
  if (docs.empty()) throw Error(ErrorKind::Io, "no reports found", o.inputs.at(0));
  const std::string csv = summary_csv(docs);
  const FailureDistribution dist = failure_distribution(docs);
  if (!o.out.empty()) write_file(o.out, csv);
  if (o.format == "json") {
    print_json({{"assets", docs.size()}, {"distribution", to_json(dist)}});
  } else {
    if (o.out.empty()) std::cout << csv << '\n';
    std::cout << to_text(dist);
  }
  return kOk;
}

int cmd_render(const Options& o) {
  if (o.out.empty()) throw CLI::ValidationError("render needs --out");
  const AssetModel model = load_urdf(o.inputs.at(0));
  std::vector<View> views;
  for (const auto& name : o.views) {
    const auto v = view_from_string(name);
    if (!v) throw CLI::ValidationError("unknown view '" + name + "'");
    views.push_back(*v);
  }
  JointConfig q;
  if (model.documented_initial_state) q.values = *model.documented_initial_state;
  RenderOptions ro;
  ro.width = ro.height = o.size;
  const auto images = render_views(model, project_to_limits(q, model), views, ro);
  fs::create_directories(o.out);
  ordered_json files = ordered_json::array();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const fs::path p = fs::path(o.out) / (std::string(to_string(views[i])) + ".png");
    write_png(images[i], p);
    files.push_back({{"view", to_string(views[i])}, {"path", p.string()}, {"lit_pixels", images[i].lit_pixels()}});
    if (o.format != "json") std::printf("%s (%zu lit pixels)\n", p.string().c_str(), images[i].lit_pixels());
  }
  if (o.format == "json") print_json({{"asset", model.name}, {"size", o.size}, {"images", files}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interaction-readiness toolkit for articulated simulation assets"};
  app.require_subcommand(1);
  Options o;

  const auto format = [&](CLI::App* c) {
    c->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  };
  const auto run_flags = [&](CLI::App* c) {
    c->add_option("--config", o.config, "TOML-like run configuration")->check(CLI::ExistingFile);
    c->add_option("--workers", o.workers, "Parallel asset workers")->check(CLI::PositiveNumber);
    c->add_option("--proposer", o.proposer, "heuristic or remote");
    c->add_option("--endpoint", o.endpoint, "Chat-completion endpoint for the remote proposer");
    c->add_option("--seed", o.seed, "Seed for fallback perturbations");
  };

  auto* analyze = app.add_subcommand("analyze", "Per-link mesh statistics");
  analyze->add_option("urdf", o.inputs, "URDF file")->required()->expected(1);
  analyze->add_option("--semantics", o.semantics, "Semantics file");
  format(analyze);

  auto* refine = app.add_subcommand("refine", "Run the full pipeline over a manifest");
  refine->add_option("--manifest", o.manifest, "JSON manifest")->required();
  refine->add_option("--out", o.out, "Output directory")->required();
  run_flags(refine);
  format(refine);

  auto* evaluate = app.add_subcommand("evaluate", "Measure an asset as-is");
  evaluate->add_option("urdf", o.inputs, "URDF file")->required()->expected(1);
  evaluate->add_option("--out", o.out, "Write the report JSON here");
  evaluate->add_option("--id", o.id, "Asset id for the report");
  run_flags(evaluate);
  format(evaluate);

  auto* srcc_cmd = app.add_subcommand("srcc", "Sim-to-real correlation from per-task rate tables");
  srcc_cmd->add_option("tables", o.inputs, "CSV files (task,sim_rate,real_rate)")->required();
  format(srcc_cmd);

  auto* alignment = app.add_subcommand("alignment", "Mean prompt alignment per method");
  alignment->add_option("table", o.inputs, "CSV (object,<method>...)")->required()->expected(1);
  format(alignment);

  auto* realism = app.add_subcommand("realism", "Realism mean across tasks per method");
  realism->add_option("table", o.inputs, "CSV (task,method,mean,sd,n)")->required()->expected(1);
  realism->add_option("--spread", o.spread, "se (sd/sqrt(n)) or task-sd");
  format(realism);

  auto* report = app.add_subcommand("report", "Aggregate a directory of reports");
  report->add_option("dir", o.inputs, "Report directory")->required()->expected(1);
  report->add_option("--out", o.out, "Write the summary CSV here");
  format(report);

  auto* render = app.add_subcommand("render", "Write canonical-view PNGs");
  render->add_option("urdf", o.inputs, "URDF file")->required()->expected(1);
  render->add_option("--out", o.out, "Output directory")->required();
  render->add_option("--views", o.views, "Views to render");
  render->add_option("--size", o.size, "Image side in pixels")->check(CLI::PositiveNumber);
  format(render);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*analyze) return cmd_analyze(o);
    if (*refine) return cmd_refine(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*srcc_cmd) return cmd_srcc(o);
    if (*alignment) return cmd_alignment(o);
    if (*realism) return cmd_realism(o);
    if (*report) return cmd_report(o);
    if (*render) return cmd_render(o);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
