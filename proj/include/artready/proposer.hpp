#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "artready/collision.hpp"
#include "artready/mesh.hpp"
#include "artready/overlay.hpp"
#include "artready/render.hpp"

namespace artready {

/// Everything a proposer may look at: model, semantics, per-link geometry
/// statistics, optional renders and the user's guidance text.
struct ExtractedInfo {
  AssetModel model;
  SemanticMap semantics;
  std::map<std::string, MeshAnalysis> analyses;
  std::vector<std::pair<View, Image>> views;
  std::string guidance;
};

ExtractedInfo extract_info(const AssetModel& model, const SemanticMap& semantics, std::string guidance,
                           const std::vector<View>& views = {}, const RenderOptions& render = {});

/// Axis-aligned extents of the assembled asset at the zero configuration.
Vec3 assembled_extents(const AssetModel& model);

/// JSON document substituted for {object_info} in the overlay prompt.
ordered_json object_info_json(const ExtractedInfo& info);

enum class MaterialClass { Metal, Plastic, Rubber };

std::string_view to_string(MaterialClass c);

struct MaterialPrior {
  MaterialClass material = MaterialClass::Plastic;
  double density_lo = 0.0;
  double density_hi = 0.0;
  double default_density = 0.0;
};

MaterialPrior material_prior(MaterialClass c);
/// Keyword table over a free-text label; plastic when nothing matches.
MaterialClass material_from_label(std::string_view label);

struct HeuristicConfig {
  /// Largest-extent target per category; "handheld" is the fallback.
  std::map<std::string, double> category_target_size{{"handheld", 0.15}};
  double gripper_limit = 0.075;
  double solid_fill_ratio = 0.6;
  double hollow_solid = 0.9;
  double hollow_shell = 0.4;
  double revolute_spring = 0.5;    // N m/rad
  double prismatic_spring = 100.0; // N/m
};

/// Deterministic overlay built from the semantic keyword table, mesh
/// statistics and the passive defaults. Throws Error(InvalidArgument) when a
/// link with geometry has no analysis.
Overlay propose_overlay(const ExtractedInfo& info, const HeuristicConfig& config = {});

enum class UpdateAction { Approve, CollisionReduction, StateCorrection };

std::string_view to_string(UpdateAction a);

struct StateUpdate {
  bool approved = false;
  bool state_ok = true;
  UpdateAction action = UpdateAction::CollisionReduction;
  std::map<std::string, double> joint_deltas;
  std::string reason;
};

/// Parses the state-refinement reply shape ({approved, state_ok, action,
/// reason, joint_updates: [{joint, delta}]}). Throws Error(SchemaInvalid).
StateUpdate state_update_from_json(const ordered_json& doc);
ordered_json state_update_to_json(const StateUpdate& update);

/// What the refinement loop tells a state proposer each iteration.
struct RefinementContext {
  const AssetModel* model = nullptr;
  const CollisionModel* collision = nullptr;
  const SemanticMap* semantics = nullptr;
  JointConfig q;
  JointConfig target;
  double penetration = 0.0;
  ContactReport report;
  std::vector<std::string> focus_joints;
  std::vector<std::string> direct_colliding_joints;
  /// Pairs that penetrated at the initial state but no longer do.
  std::vector<LinkPair> resolved_pairs;
  std::string hint;
  double tolerance = 0.002;
  /// 0 on the first request of an iteration, 1 on the re-query after a rejection.
  int attempt = 0;
  std::string rejection_note;
};

class StateProposer {
 public:
  virtual ~StateProposer() = default;
  /// Throws Error(NoProposal) when it has nothing to offer.
  virtual StateUpdate propose(const RefinementContext& context) = 0;
  virtual int query_count() const = 0;
};

/// Probes each focus joint in both directions against the worst pair and
/// moves the single joint that lowers that pair's overlap most.
class HeuristicStateProposer : public StateProposer {
 public:
  StateUpdate propose(const RefinementContext& context) override;
  int query_count() const override { return queries_.load(); }

  /// Step as a fraction of the joint range for a penetration sum.
  static double step_fraction(double penetration);

 private:
  std::atomic<int> queries_{0};
};

// ---------------------------------------------------------------------------
// Prompt templates

enum class PromptId { OverlayGeneration, StateRefinement, UrdfExpertSystem, StateRefinerSystem };

/// Template text exactly as shipped in data/prompts.
std::string_view prompt_template(PromptId id);

/// Python str.format subset: {name}, {name:.Nf}, and {{ / }} escapes.
/// Throws Error(InvalidArgument) for a placeholder without a value.
std::string format_template(std::string_view text, const std::map<std::string, std::string>& values);

std::string overlay_prompt(const ExtractedInfo& info);
std::string state_prompt(const RefinementContext& context);

// ---------------------------------------------------------------------------
// Remote proposers

/// Spaces requests at least `min_interval` apart across every client that
/// shares it.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second = 0.0);
  void acquire();

  static RateLimiter& global();
  void set_rate(double requests_per_second);

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration min_interval_{};
  std::chrono::steady_clock::time_point next_{};
};

/// One POST of a JSON body; returns the response body. Throws Error(Transport).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string post(const std::string& url, const std::string& body,
                           const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

/// HTTP(S) transport backed by cpp-httplib.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(int timeout_seconds = 120);
  std::string post(const std::string& url, const std::string& body,
                   const std::vector<std::pair<std::string, std::string>>& headers) override;

 private:
  int timeout_seconds_;
};

/// Replies from a fixed list (the last reply repeats); records every request.
class StubTransport : public Transport {
 public:
  explicit StubTransport(std::vector<std::string> replies);
  std::string post(const std::string& url, const std::string& body,
                   const std::vector<std::pair<std::string, std::string>>& headers) override;
  const std::vector<std::string>& requests() const { return requests_; }

 private:
  std::vector<std::string> replies_;
  std::vector<std::string> requests_;
};

struct RemoteConfig {
  std::string endpoint;
  std::string model = "default";
  /// Read from ARTREADY_API_KEY when empty.
  std::string api_key;
  int max_retries = 2;
  RateLimiter* limiter = nullptr;  // global limiter when null
};

/// Chat-completion style client. The reply's first JSON object is handed to
/// a parser; parse failures are retried with the error appended.
class RemoteClient {
 public:
  RemoteClient(std::shared_ptr<Transport> transport, RemoteConfig config);

  /// Calls `parse` on the first JSON object of each reply until it succeeds.
  /// After 1 + max_retries failed replies throws Error(SchemaInvalid) when the
  /// last reply held JSON the parser rejected, Error(RetriesExhausted) when it
  /// held no JSON at all. Transport errors propagate immediately.
  void exchange(const std::string& system, const std::string& user, const std::vector<Image>& images,
                const std::function<void(const ordered_json&)>& parse);

  int query_count() const { return queries_; }

  /// Request body for one turn (exposed for inspection).
  ordered_json request_body(const std::string& system, const std::string& user,
                            const std::vector<Image>& images) const;

 private:
  std::shared_ptr<Transport> transport_;
  RemoteConfig config_;
  int queries_ = 0;
};

/// First balanced {...} substring that parses as JSON.
std::optional<ordered_json> extract_first_json_object(std::string_view text);

/// Reply text of a chat-completion response body (choices[0].message.content,
/// or the body itself when it is not such an envelope).
std::string reply_text(const std::string& body);

Overlay propose_overlay_remote(const ExtractedInfo& info, RemoteClient& client);

class RemoteStateProposer : public StateProposer {
 public:
  explicit RemoteStateProposer(std::shared_ptr<RemoteClient> client, RenderOptions render = {});
  StateUpdate propose(const RefinementContext& context) override;
  int query_count() const override { return client_->query_count(); }

 private:
  std::shared_ptr<RemoteClient> client_;
  RenderOptions render_;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

}  // namespace artready
