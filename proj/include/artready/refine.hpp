#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artready/collision.hpp"
#include "artready/dynamics.hpp"
#include "artready/proposer.hpp"
#include "artready/protocol.hpp"

namespace artready {

struct RefineConfig {
  double tolerance = 0.002;           // m
  int max_iterations = 20;
  double perturbation_scale = 0.02;   // fraction of joint range
  int perturbation_count = 8;
  int grid_points_per_joint = 7;
  std::size_t focus_cap = 8;
  /// Extra proposer requests after a rejected proposal before falling back.
  int requery_on_reject = 1;
  std::uint64_t seed = 0;
};

/// Throws Error(InvalidArgument) when a field is not positive.
void check_refine_config(const RefineConfig& cfg);

enum class ProposalSource { Proposer, Perturbation, Grid };

std::string_view to_string(ProposalSource s);

struct TraceEntry {
  int iteration = 0;
  JointConfig q;
  double phi = 0.0;
  ProposalSource source = ProposalSource::Proposer;
  bool accepted = false;
  /// Joints this candidate was allowed to move.
  std::vector<std::string> focus;
};

struct RefineTrace {
  JointConfig initial_q;
  double initial_phi = 0.0;
  std::vector<TraceEntry> iterations;
  JointConfig best_q;
  double best_phi = 0.0;
  int query_count = 0;
  int iterations_run = 0;
  bool converged = false;
  /// Set when the proposer failed hard (transport, retries, schema).
  std::optional<std::string> proposer_failure;
};

struct RefineResult {
  JointConfig q_final;
  RefineTrace trace;
};

/// FNV-1a over the asset id mixed with the run seed and iteration.
std::uint64_t fallback_seed(std::string_view asset_id, std::uint64_t seed, int iteration);

/// Random focus-joint perturbations of q_best, then a per-joint grid sweep.
/// Returns the first configuration strictly better than q_best. Every
/// evaluated candidate is appended to `log` when given.
std::optional<JointConfig> fallback_search(const CollisionModel& collision, const JointConfig& q_best,
                                           const std::vector<std::string>& focus, const RefineConfig& cfg,
                                           std::uint64_t seed, std::vector<TraceEntry>* log = nullptr,
                                           int iteration = 0);

/// Closed-loop joint-state refinement against self-penetration.
RefineResult refine_state(const CollisionModel& collision, const JointConfig& q_init, const std::string& hint,
                          StateProposer& proposer, const RefineConfig& cfg, const SemanticMap* semantics = nullptr);
RefineResult refine_state(const AssetModel& model, const JointConfig& q_init, const std::string& hint,
                          StateProposer& proposer, const RefineConfig& cfg, const SemanticMap* semantics = nullptr);

// ---------------------------------------------------------------------------
// End-to-end pipeline

enum class ProposerKind { Heuristic, Remote };

std::string_view to_string(ProposerKind k);
std::optional<ProposerKind> proposer_kind_from_string(std::string_view text);

struct PipelineConfig {
  RefineConfig refine;
  PassiveSettings passive;
  StabilityThresholds thresholds;
  HeuristicConfig heuristic;
  ProposerKind proposer = ProposerKind::Heuristic;
  std::string endpoint;
  std::string remote_model = "default";
  double rate_limit = 0.0;  // requests per second across all sessions, 0 = none
  /// Transport for remote sessions; an HttpTransport when null.
  std::shared_ptr<Transport> transport;
};

/// One manifest row.
struct AssetJob {
  std::string id;
  std::filesystem::path urdf;
  std::filesystem::path semantics;  // optional
  std::string guidance;
  std::optional<double> reference_scale;
  std::optional<std::map<std::string, double>> reference_state;
  std::optional<double> prompt_alignment;
};

struct ReadinessReport {
  std::string asset_id;
  FailureClass classification = FailureClass::Pass;
  std::string failure_detail;
  std::optional<double> scale_factor;
  std::optional<double> delta_scale;
  std::map<std::string, double> delta_joint;
  std::optional<double> prompt_alignment;
  JointConfig q_requested;
  JointConfig q0;
  bool joint_config_valid = true;
  std::optional<double> initial_penetration;
  std::optional<double> penetration;
  std::optional<StabilityResult> stability;
  std::optional<std::string> simulation_error;
  std::optional<RefineTrace> trace;
  std::vector<std::string> overlay_diagnostics;
};

struct PipelineResult {
  std::optional<AssetModel> revised;
  ReadinessReport report;
};

/// Parse, extract, propose, validate and apply, refine, simulate, classify.
/// Input files that do not parse raise Error; every later stage failure is
/// folded into the report.
PipelineResult refine_asset(const AssetJob& job, const PipelineConfig& cfg);

/// Protocol measurement of an asset as-is (no overlay, no refinement).
ReadinessReport evaluate_asset(const AssetModel& model, const std::string& asset_id, const PipelineConfig& cfg);

/// Runs jobs on up to `workers` threads; results come back sorted by asset id.
/// A job whose inputs fail to parse is rethrown after all workers finish.
std::vector<PipelineResult> run_batch(const std::vector<AssetJob>& jobs, const PipelineConfig& cfg, int workers);

}  // namespace artready
