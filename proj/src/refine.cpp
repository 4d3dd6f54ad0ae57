#include "artready/refine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

void check_refine_config(const RefineConfig& c) {
  if (!(c.tolerance > 0.0) || c.max_iterations <= 0 || !(c.perturbation_scale > 0.0) || c.perturbation_count <= 0 ||
      c.grid_points_per_joint <= 1 || c.focus_cap == 0 || c.requery_on_reject < 0) {
    throw Error(ErrorKind::InvalidArgument, "refinement settings must be positive");
  }
}

std::string_view to_string(ProposalSource s) {
  switch (s) {
    case ProposalSource::Proposer: return "proposer";
    case ProposalSource::Perturbation: return "perturbation";
    case ProposalSource::Grid: return "grid";
  }
  return "proposer";
}

std::uint64_t fallback_seed(std::string_view asset_id, std::uint64_t seed, int iteration) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : asset_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(iteration) * 0xbf58476d1ce4e5b9ULL;
  return h;
}

namespace {

double range_of(const JointSpec& j) {
  if (j.type == JointType::Continuous || !j.limits) return 2.0 * M_PI;
  return j.limits->upper - j.limits->lower;
}

/// Every active joint present, then projected.
JointConfig complete(const JointConfig& q, const AssetModel& model) {
  JointConfig full = q;
  for (const auto& j : model.joints) {
    if (j.active()) full.values.try_emplace(j.name, 0.0);
  }
  return project_to_limits(full, model);
}

}  // namespace

std::optional<JointConfig> fallback_search(const CollisionModel& collision, const JointConfig& q_best,
                                           const std::vector<std::string>& focus, const RefineConfig& cfg,
                                           std::uint64_t seed, std::vector<TraceEntry>* log, int iteration) {
  const AssetModel& model = collision.model();
  std::vector<const JointSpec*> joints;
  for (const auto& name : focus) {
    if (const JointSpec* j = model.find_joint(name); j && j->active()) joints.push_back(j);
  }
  if (joints.empty()) return std::nullopt;
  const double phi_best = collision.penetration(q_best);

  const auto record = [&](const JointConfig& q, double phi, ProposalSource src, bool accepted) {
    if (log) log->push_back({iteration, q, phi, src, accepted, focus});
  };

  std::mt19937_64 rng(seed);
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1p-53 * 2.0 - 1.0; };
  for (int k = 0; k < cfg.perturbation_count; ++k) {
    JointConfig q = q_best;
    for (const JointSpec* j : joints) {
      q.values[j->name] = q_best.get(j->name) + unit() * cfg.perturbation_scale * range_of(*j);
    }
    q = project_to_limits(q, model);
    const double phi = collision.penetration(q);
    record(q, phi, ProposalSource::Perturbation, phi < phi_best);
    if (phi < phi_best) return q;
  }

  const int n = cfg.grid_points_per_joint;
  for (const JointSpec* j : joints) {
    std::optional<JointConfig> best;
    double best_phi = phi_best;
    std::size_t best_entry = 0;
    for (int k = 0; k < n; ++k) {
      JointConfig q = q_best;
      if (j->type == JointType::Continuous || !j->limits) {
        q.values[j->name] = -M_PI + 2.0 * M_PI * k / n;
      } else {
        q.values[j->name] = j->limits->lower + (j->limits->upper - j->limits->lower) * k / (n - 1);
      }
      q = project_to_limits(q, model);
      const double phi = collision.penetration(q);
      record(q, phi, ProposalSource::Grid, false);
      if (phi < best_phi) {
        best_phi = phi;
        best = q;
        if (log) best_entry = log->size() - 1;
      }
    }
    if (best) {
      if (log) (*log)[best_entry].accepted = true;
      return best;
    }
  }
  return std::nullopt;
}

RefineResult refine_state(const CollisionModel& collision, const JointConfig& q_init, const std::string& hint,
                          StateProposer& proposer, const RefineConfig& cfg, const SemanticMap* semantics) {
  check_refine_config(cfg);
  const AssetModel& model = collision.model();
  RefineTrace tr;
  JointConfig q = complete(q_init, model);
  double phi = collision.penetration(q);
  tr.initial_q = q;
  tr.initial_phi = phi;
  const int queries_before = proposer.query_count();

  std::set<LinkPair> initial_pairs;
  for (const auto& [pair, depth] : collision.contacts(q).ranked_pairs()) initial_pairs.insert(pair);

  for (int it = 0; it < cfg.max_iterations && phi > cfg.tolerance; ++it) {
    tr.iterations_run = it + 1;
    RefinementContext ctx;
    ctx.model = &model;
    ctx.collision = &collision;
    ctx.semantics = semantics;
    ctx.q = q;
    ctx.target = tr.initial_q;
    ctx.penetration = phi;
    ctx.report = collision.contacts(q);
    ctx.focus_joints = localize_focus_joints(model, ctx.report, cfg.focus_cap);
    ctx.direct_colliding_joints = direct_colliding_joints(model, ctx.report);
    std::set<LinkPair> now;
    for (const auto& [pair, depth] : ctx.report.ranked_pairs()) now.insert(pair);
    for (const auto& p : initial_pairs) {
      if (!now.count(p)) ctx.resolved_pairs.push_back(p);
    }
    ctx.hint = hint;
    ctx.tolerance = cfg.tolerance;
    const std::set<std::string> focus(ctx.focus_joints.begin(), ctx.focus_joints.end());

    bool improved = false;
    for (int attempt = 0; attempt <= cfg.requery_on_reject && !improved; ++attempt) {
      ctx.attempt = attempt;
      StateUpdate u;
      try {
        u = proposer.propose(ctx);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoProposal) tr.proposer_failure = e.what();
        break;
      }
      if (u.approved || u.joint_deltas.empty()) break;
      JointConfig cand = q;
      for (const auto& [joint, delta] : u.joint_deltas) {
        if (focus.count(joint)) cand.values[joint] = q.get(joint) + delta;  // others stay frozen
      }
      cand = project_to_limits(cand, model);
      const double cand_phi = collision.penetration(cand);
      const bool accepted = cand_phi < phi;
      tr.iterations.push_back({it, cand, cand_phi, ProposalSource::Proposer, accepted, ctx.focus_joints});
      if (accepted) {
        q = std::move(cand);
        phi = cand_phi;
        improved = true;
      } else {
        ctx.rejection_note = "penetration " + format_fixed(cand_phi, 6) + " m is not below " + format_fixed(phi, 6) + " m";
      }
    }
    if (!improved) {
      if (auto found = fallback_search(collision, q, ctx.focus_joints, cfg, fallback_seed(model.name, cfg.seed, it),
                                       &tr.iterations, it)) {
        q = std::move(*found);
        phi = collision.penetration(q);
      }
    }
  }
  tr.converged = phi <= cfg.tolerance;
  tr.best_q = q;
  tr.best_phi = phi;
  tr.query_count = proposer.query_count() - queries_before;
  return {q, std::move(tr)};
}

RefineResult refine_state(const AssetModel& model, const JointConfig& q_init, const std::string& hint,
                          StateProposer& proposer, const RefineConfig& cfg, const SemanticMap* semantics) {
  const CollisionModel collision(model);
  return refine_state(collision, q_init, hint, proposer, cfg, semantics);
}

// ---------------------------------------------------------------------------

std::string_view to_string(ProposerKind k) { return k == ProposerKind::Remote ? "remote" : "heuristic"; }

std::optional<ProposerKind> proposer_kind_from_string(std::string_view text) {
  if (text == "heuristic") return ProposerKind::Heuristic;
  if (text == "remote") return ProposerKind::Remote;
  return std::nullopt;
}

namespace {

/// Largest per-joint move made by projection; unknown or fixed joints count as invalid.
bool joint_config_feasible(const JointConfig& q, const AssetModel& model, std::string* why) {
  const JointConfig p = project_to_limits(q, model);
  for (const auto& [name, value] : q.values) {
    const JointSpec* j = model.find_joint(name);
    if (!j || !j->active()) {
      *why = "initial state names " + name + ", which is not an active joint";
      return false;
    }
    if (!std::isfinite(value)) {
      *why = "initial state for " + name + " is not finite";
      return false;
    }
    double moved = std::abs(p.get(name) - value);
    if (j->type == JointType::Continuous) moved = std::abs(wrap_angle(p.get(name) - value));
    if (moved > 1e-6) {
      *why = "initial state for " + name + " lies outside its limits";
      return false;
    }
  }
  return true;
}

/// Penetration, passive simulation, stability metrics and classification.
void measure(const AssetModel& model, const CollisionModel& collision, ReadinessReport& r, const PipelineConfig& cfg) {
  r.penetration = collision.penetration(r.q0);
  ClassificationInputs in;
  in.joint_config_valid = r.joint_config_valid;
  in.penetration = *r.penetration;
  in.penetration_tolerance = cfg.refine.tolerance;
  try {
    const PassiveRun run = simulate_passive(model, r.q0, cfg.passive);
    r.stability = stability_metrics(run.trajectory, run.reference, model, cfg.thresholds);
    in.stability = r.stability;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MissingInertial) {
      in.overlay_valid = false;
      r.failure_detail = e.what();
    } else if (e.kind() == ErrorKind::Instability) {
      in.simulation_blew_up = true;
      r.simulation_error = e.what();
    } else {
      throw;
    }
  }
  r.classification = classify_failure(in);
  if (!r.failure_detail.empty()) return;
  switch (r.classification) {
    case FailureClass::Pass: break;
    case FailureClass::PenetrationFailure:
      r.failure_detail = "penetration " + format_fixed(*r.penetration, 6) + " m exceeds tolerance";
      break;
    case FailureClass::Instability:
      if (r.simulation_error) {
        r.failure_detail = *r.simulation_error;
      } else if (r.stability) {
        r.failure_detail = !r.stability->pos_pass   ? "root position drift"
                           : !r.stability->ori_pass ? "root orientation drift"
                                                    : "joint oscillation";
      }
      break;
    default: break;
  }
}

std::unique_ptr<StateProposer> make_state_proposer(const PipelineConfig& cfg,
                                                   std::shared_ptr<RemoteClient>* client_out) {
  if (cfg.proposer == ProposerKind::Heuristic) return std::make_unique<HeuristicStateProposer>();
  if (cfg.endpoint.empty()) throw Error(ErrorKind::Config, "remote proposer needs an endpoint");
  auto transport = cfg.transport ? cfg.transport : std::make_shared<HttpTransport>();
  RemoteConfig rc;
  rc.endpoint = cfg.endpoint;
  rc.model = cfg.remote_model;
  auto client = std::make_shared<RemoteClient>(transport, rc);
  *client_out = client;
  return std::make_unique<RemoteStateProposer>(client);
}

}  // namespace

PipelineResult refine_asset(const AssetJob& job, const PipelineConfig& cfg) {
  const AssetModel model = load_urdf(job.urdf);
  const SemanticMap semantics = job.semantics.empty() ? SemanticMap{} : load_semantics(job.semantics);

  PipelineResult out;
  ReadinessReport& r = out.report;
  r.asset_id = job.id.empty() ? model.name : job.id;
  r.prompt_alignment = job.prompt_alignment;

  std::shared_ptr<RemoteClient> client;
  std::unique_ptr<StateProposer> proposer = make_state_proposer(cfg, &client);
  const auto estimation_failure = [&](const std::string& why) {
    r.classification = FailureClass::EstimationFailure;
    r.failure_detail = why;
    return out;
  };

  Overlay overlay;
  try {
    const ExtractedInfo info = extract_info(model, semantics, job.guidance);
    overlay = client ? propose_overlay_remote(info, *client) : propose_overlay(info, cfg.heuristic);
  } catch (const Error& e) {
    return estimation_failure(std::string("overlay proposal failed: ") + e.what());
  }

  AssetModel revised;
  try {
    OverlayValidation v = validate_overlay(overlay, model);
    r.overlay_diagnostics = std::move(v.diagnostics);
    revised = apply_overlay(model, v.overlay);
    r.scale_factor = v.overlay.uniform_scale_factor;
  } catch (const Error& e) {
    return estimation_failure(std::string("overlay rejected: ") + e.what() +
                              (e.location().empty() ? "" : " (" + e.location() + ")"));
  }
  if (job.reference_scale) r.delta_scale = scale_deviation(*r.scale_factor, *job.reference_scale);

  if (revised.documented_initial_state) r.q_requested.values = *revised.documented_initial_state;
  std::string why;
  r.joint_config_valid = joint_config_feasible(r.q_requested, revised, &why);
  if (!r.joint_config_valid) r.failure_detail = why;

  const CollisionModel collision(revised);
  RefineResult refined = refine_state(collision, r.q_requested, job.guidance, *proposer, cfg.refine, &semantics);
  r.initial_penetration = refined.trace.initial_phi;
  r.q0 = refined.q_final;
  const std::optional<std::string> proposer_failure = refined.trace.proposer_failure;
  r.trace = std::move(refined.trace);
  if (job.reference_state) {
    for (const auto& [joint, value] : *job.reference_state) r.delta_joint[joint] = joint_deviation(r.q0.get(joint), value);
  }

  revised.documented_initial_state = r.q0.values;
  const std::string invalid_detail = r.failure_detail;
  measure(revised, collision, r, cfg);
  if (!r.joint_config_valid) {
    r.classification = FailureClass::InvalidJointConfig;
    r.failure_detail = invalid_detail;
  }
  if (proposer_failure && r.classification == FailureClass::PenetrationFailure) {
    // The loop kept its best configuration but the proposer itself broke down.
    r.classification = FailureClass::EstimationFailure;
    r.failure_detail = "state proposer failed: " + *proposer_failure;
  }
  out.revised = std::move(revised);
  return out;
}

ReadinessReport evaluate_asset(const AssetModel& model, const std::string& asset_id, const PipelineConfig& cfg) {
  ReadinessReport r;
  r.asset_id = asset_id.empty() ? model.name : asset_id;
  if (model.documented_initial_state) r.q_requested.values = *model.documented_initial_state;
  std::string why;
  r.joint_config_valid = joint_config_feasible(r.q_requested, model, &why);
  r.q0 = complete(r.q_requested, model);
  const CollisionModel collision(model);
  measure(model, collision, r, cfg);
  if (!r.joint_config_valid && r.classification != FailureClass::EstimationFailure) {
    r.classification = FailureClass::InvalidJointConfig;
    r.failure_detail = why;
  }
  return r;
}

std::vector<PipelineResult> run_batch(const std::vector<AssetJob>& jobs, const PipelineConfig& cfg, int workers) {
  std::vector<std::optional<PipelineResult>> slots(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        slots[i] = refine_asset(jobs[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<PipelineResult> out;
  out.reserve(jobs.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  std::stable_sort(out.begin(), out.end(),
                   [](const PipelineResult& a, const PipelineResult& b) { return a.report.asset_id < b.report.asset_id; });
  return out;
}

}  // namespace artready
