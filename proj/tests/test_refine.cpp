#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "artready/error.hpp"
#include "artready/refine.hpp"
#include "artready/report.hpp"
#include "fixtures.hpp"

using namespace artready;

namespace {

JointConfig documented(const AssetModel& m) {
  JointConfig q;
  if (m.documented_initial_state) q.values = *m.documented_initial_state;
  return q;
}

// Proposes a fixed function of the current state for every focus joint.
class ScriptedProposer : public StateProposer {
 public:
  explicit ScriptedProposer(std::function<double(double)> delta) : delta_(std::move(delta)) {}
  StateUpdate propose(const RefinementContext& ctx) override {
    ++queries_;
    StateUpdate u;
    if (ctx.penetration <= ctx.tolerance) {
      u.approved = true;
      return u;
    }
    for (const auto& j : ctx.focus_joints) u.joint_deltas[j] = delta_(ctx.q.get(j));
    return u;
  }
  int query_count() const override { return queries_; }

 private:
  std::function<double(double)> delta_;
  int queries_ = 0;
};

// Accepted candidates must strictly lower Φ, and each candidate may only
// differ from the state it started from on that iteration's focus joints.
void check_trace(const RefineTrace& tr, const std::string& name) {
  JointConfig current = tr.initial_q;
  double phi = tr.initial_phi;
  for (const auto& e : tr.iterations) {
    const std::set<std::string> focus(e.focus.begin(), e.focus.end());
    for (const auto& [joint, value] : current.values) {
      if (!focus.count(joint)) EXPECT_EQ(e.q.get(joint), value) << name << " moved frozen joint " << joint;
    }
    if (e.accepted) {
      EXPECT_LT(e.phi, phi) << name << " iteration " << e.iteration;
      current = e.q;
      phi = e.phi;
    }
  }
  EXPECT_EQ(phi, tr.best_phi) << name;
}

AssetModel hinged(const std::string& tag) {
  return fixtures::build_model(fixtures::hinged_box(0.0, 0.1, 0.0), fixtures::scratch_dir(tag));
}

AssetJob job_for(const fixtures::AssetDef& def, const std::filesystem::path& dir) {
  AssetJob job;
  job.id = def.name;
  job.urdf = fixtures::write_asset(def, dir);
  job.semantics = fixtures::semantics_path(def, dir);
  job.guidance = def.guidance;
  return job;
}

}  // namespace

TEST(Refine, ResolvableSuiteConverges) {
  const auto dir = fixtures::scratch_dir("suite");
  const auto suite = fixtures::resolvable_suite();
  ASSERT_EQ(suite.size(), 10u);
  std::vector<int> queries;
  for (const auto& def : suite) {
    const AssetModel m = fixtures::build_model(def, dir);
    HeuristicStateProposer p;
    const auto r = refine_state(m, documented(m), def.guidance, p, RefineConfig{});
    EXPECT_GT(r.trace.initial_phi, 0.002) << def.name;
    EXPECT_LE(r.trace.best_phi, 0.002) << def.name;
    EXPECT_LE(r.trace.iterations_run, 20) << def.name;
    EXPECT_TRUE(r.trace.converged) << def.name;
    check_trace(r.trace, def.name);
    queries.push_back(r.trace.query_count);
  }
  std::nth_element(queries.begin(), queries.begin() + 5, queries.end());
  const double upper = queries[5];
  const double lower = *std::max_element(queries.begin(), queries.begin() + 5);
  EXPECT_LE(0.5 * (lower + upper), 8.0);
}

TEST(Refine, CollisionFreeStartExitsEarly) {
  const auto m = hinged("free");
  JointConfig q;
  q.values["lid_hinge"] = 0.5;
  HeuristicStateProposer p;
  const auto r = refine_state(m, q, "", p, RefineConfig{});
  EXPECT_EQ(r.q_final, q);
  EXPECT_EQ(r.trace.query_count, 0);
  EXPECT_TRUE(r.trace.iterations.empty());
}

TEST(Refine, ScriptedAnalyticStepConverges) {
  // Below zero the lid sinks into the front wall; returning to zero clears it.
  const auto m = hinged("scripted");
  auto open = m;
  open.find_joint("lid_hinge")->limits = JointLimits{-0.5, 1.9};
  JointConfig q;
  q.values["lid_hinge"] = -0.3;
  ScriptedProposer p([](double x) { return -x; });
  const auto r = refine_state(open, q, "", p, RefineConfig{});
  EXPECT_GT(r.trace.initial_phi, 0.002);
  EXPECT_LE(r.trace.best_phi, 0.002);
  EXPECT_LE(r.trace.iterations_run, 3);
  check_trace(r.trace, "scripted");
}

TEST(Refine, AdversarialProposalsAreAllRejected) {
  const auto m = hinged("adversarial");
  auto open = m;
  open.find_joint("lid_hinge")->limits = JointLimits{-0.5, 1.9};
  JointConfig q;
  q.values["lid_hinge"] = -0.2;
  ScriptedProposer p([](double) { return -0.05; });
  RefineConfig cfg;
  cfg.max_iterations = 4;
  const auto r = refine_state(open, q, "", p, cfg);
  ASSERT_GT(r.trace.initial_phi, 0.002);
  int fallback = 0;
  for (const auto& e : r.trace.iterations) {
    if (e.source == ProposalSource::Proposer) EXPECT_FALSE(e.accepted);
    fallback += e.source != ProposalSource::Proposer;
  }
  EXPECT_GT(fallback, 0);
  EXPECT_LT(r.trace.best_phi, r.trace.initial_phi);
  check_trace(r.trace, "adversarial");
}

TEST(Fallback, FindsTheCollisionFreeSideOfAHinge) {
  auto m = hinged("band");
  m.find_joint("lid_hinge")->limits = JointLimits{-0.5, 1.9};
  const CollisionModel cm(m);
  JointConfig q;
  q.values["lid_hinge"] = -0.4;
  const auto found = fallback_search(cm, q, {"lid_hinge"}, RefineConfig{}, 1);
  ASSERT_TRUE(found);
  EXPECT_LT(cm.penetration(*found), cm.penetration(q));
  EXPECT_GT(found->get("lid_hinge"), -0.4);
}

TEST(Fallback, NothingBelowZero) {
  const auto m = hinged("min");
  const CollisionModel cm(m);
  JointConfig q;
  q.values["lid_hinge"] = 0.8;
  EXPECT_FALSE(fallback_search(cm, q, {"lid_hinge"}, RefineConfig{}, 1));
}

TEST(Fallback, SeedFixesTheSequence) {
  auto m = hinged("seed");
  m.find_joint("lid_hinge")->limits = JointLimits{-0.5, 1.9};
  const CollisionModel cm(m);
  JointConfig q;
  q.values["lid_hinge"] = -0.4;
  std::vector<TraceEntry> a, b;
  fallback_search(cm, q, {"lid_hinge"}, RefineConfig{}, 42, &a);
  fallback_search(cm, q, {"lid_hinge"}, RefineConfig{}, 42, &b);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].q, b[i].q);
  EXPECT_EQ(fallback_seed("x", 1, 0), fallback_seed("x", 1, 0));
  EXPECT_NE(fallback_seed("x", 1, 0), fallback_seed("x", 1, 1));
}

TEST(Refine, ConfigMustBePositive) {
  RefineConfig cfg;
  cfg.max_iterations = 0;
  EXPECT_THROW(check_refine_config(cfg), Error);
}

TEST(Pipeline, HingedBoxPasses) {
  const auto dir = fixtures::scratch_dir("pipe1");
  const auto res = refine_asset(job_for(fixtures::hinged_box(0.0, 0.1, 0.0), dir), PipelineConfig{});
  EXPECT_EQ(res.report.classification, FailureClass::Pass) << res.report.failure_detail;
  EXPECT_LE(*res.report.penetration, 0.002);
  EXPECT_TRUE(res.report.stability->passed());
  ASSERT_TRUE(res.revised);
}

TEST(Pipeline, ImpossibleGeometryIsPenetrationFailure) {
  const auto dir = fixtures::scratch_dir("pipe2");
  const auto res = refine_asset(job_for(fixtures::impossible_asset(), dir), PipelineConfig{});
  EXPECT_EQ(res.report.classification, FailureClass::PenetrationFailure);
  ASSERT_TRUE(res.report.trace);
  EXPECT_FALSE(res.report.trace->best_q.values.empty());
  EXPECT_GT(*res.report.penetration, 0.002);
}

TEST(Pipeline, BatchIsDeterministicAcrossWorkers) {
  const auto dir = fixtures::scratch_dir("pipe3");
  std::vector<AssetJob> jobs;
  for (const auto& def : fixtures::resolvable_suite()) jobs.push_back(job_for(def, dir));
  const auto dump = [](const std::vector<PipelineResult>& rs) {
    std::string out;
    for (const auto& r : rs) out += report_to_json(r.report).dump(2) + write_urdf(*r.revised);
    return out;
  };
  const auto one = dump(run_batch(jobs, PipelineConfig{}, 1));
  EXPECT_EQ(dump(run_batch(jobs, PipelineConfig{}, 4)), one);
  EXPECT_EQ(dump(run_batch(jobs, PipelineConfig{}, 1)), one);
}
