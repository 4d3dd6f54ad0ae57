#include <cmath>

#include <gtest/gtest.h>

#include "artready/error.hpp"
#include "artready/proposer.hpp"
#include "fixtures.hpp"

using namespace artready;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

ExtractedInfo info_for(const fixtures::AssetDef& def, const std::string& tag, std::string guidance = "") {
  const auto dir = fixtures::scratch_dir(tag);
  const auto model = fixtures::build_model(def, dir);
  SemanticMap sem;
  std::string lines;
  for (const auto& s : def.semantics) lines += s + "\n";
  if (!lines.empty()) sem = parse_semantics(lines);
  return extract_info(model, sem, std::move(guidance));
}

fixtures::AssetDef plastic_cube() {
  fixtures::AssetDef def;
  def.name = "cube";
  def.links = {{"cube", {{Vec3(0.1, 0.1, 0.1), Vec3::Zero()}}}};
  def.semantics = {"cube free toy block"};
  return def;
}

std::shared_ptr<StubTransport> stub(std::vector<std::string> replies) {
  return std::make_shared<StubTransport>(std::move(replies));
}

RemoteConfig remote_config() {
  RemoteConfig c;
  c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  c.api_key = "test-key";
  static RateLimiter unlimited;
  c.limiter = &unlimited;
  return c;
}

const char* kOverlayReply = R"({"global_modifications": {"uniform_scale_factor": 0.5},
  "link_modifications": {"cube": {"mass": 0.2, "inertia": {"ixx": 0.001, "iyy": 0.001, "izz": 0.001}}},
  "joint_modifications": {}})";

}  // namespace

TEST(Materials, KeywordTable) {
  EXPECT_EQ(material_from_label("brass hinge"), MaterialClass::Metal);
  EXPECT_EQ(material_from_label("rubber grip"), MaterialClass::Rubber);
  EXPECT_EQ(material_from_label("lid"), MaterialClass::Plastic);
  for (auto c : {MaterialClass::Metal, MaterialClass::Plastic, MaterialClass::Rubber}) {
    const auto p = material_prior(c);
    EXPECT_LE(p.density_lo, p.default_density);
    EXPECT_LE(p.default_density, p.density_hi);
  }
}

TEST(HeuristicOverlay, SolidPlasticLitreWeighsPoint936) {
  HeuristicConfig cfg;
  cfg.category_target_size["handheld"] = 0.1;
  cfg.gripper_limit = 0.1;
  const auto o = propose_overlay(info_for(plastic_cube(), "h1"), cfg);
  EXPECT_EQ(o.uniform_scale_factor, 1.0);
  EXPECT_NEAR(*o.links.at("cube").mass, 0.001 * 1040 * 0.9, 1e-12);
}

TEST(HeuristicOverlay, PassiveDefaultsWithoutGuidance) {
  const auto info = info_for(fixtures::resolvable_suite().at(0), "h2");
  const auto o = propose_overlay(info);
  for (const auto& j : info.model.joints) {
    if (!j.active()) continue;
    const auto& jo = o.joints.at(j.name);
    if (j.type == JointType::Prismatic) {
      EXPECT_EQ((std::array{*jo.damping, *jo.friction, *jo.stiffness}), (std::array{1.5, 0.5, 0.0})) << j.name;
    } else {
      EXPECT_EQ((std::array{*jo.damping, *jo.friction, *jo.stiffness}), (std::array{0.15, 0.01, 0.0})) << j.name;
    }
  }
}

TEST(HeuristicOverlay, SpringGuidanceAddsStiffness) {
  const auto o = propose_overlay(info_for(fixtures::hinged_box(0, 0, 0), "h3", "a lid with spring behavior in its joint"));
  const double k = *o.joints.at("lid_hinge").stiffness;
  EXPECT_GE(k, 0.05);
  EXPECT_LE(k, 2.0);
  const auto none = propose_overlay(info_for(fixtures::hinged_box(0, 0, 0), "h4", "no spring, just a lid"));
  EXPECT_EQ(*none.joints.at("lid_hinge").stiffness, 0.0);
}

TEST(HeuristicOverlay, GripperConstraintHoldsAndValidates) {
  auto suite = fixtures::resolvable_suite();
  suite.push_back(fixtures::large_cabinet());
  for (const auto& def : suite) {
    const auto info = info_for(def, "h5");
    const auto o = propose_overlay(info);
    Vec3 ext = assembled_extents(info.model) * o.uniform_scale_factor;
    std::sort(ext.data(), ext.data() + 3);
    EXPECT_LE(ext[1], 0.075) << def.name;
    EXPECT_NO_THROW(validate_overlay(o, info.model)) << def.name;
    EXPECT_EQ(propose_overlay(info), o) << def.name;
  }
}

TEST(StateUpdate, ParsesReplyShape) {
  const auto u = state_update_from_json(ordered_json::parse(R"({"approved": false, "state_ok": true,
    "action": "collision_reduction", "reason": "lid too low",
    "joint_updates": [{"joint": "lid_hinge", "delta": 0.1}]})"));
  EXPECT_FALSE(u.approved);
  EXPECT_EQ(u.joint_deltas.at("lid_hinge"), 0.1);
  EXPECT_EQ(state_update_from_json(state_update_to_json(u)).joint_deltas, u.joint_deltas);
  const auto a = state_update_from_json(ordered_json::parse(
      R"({"approved": true, "joint_updates": [{"joint": "x", "delta": 1}]})"));
  EXPECT_TRUE(a.joint_deltas.empty());
  EXPECT_EQ(kind_of([] { state_update_from_json(ordered_json::parse(R"({"approved": "yes"})")); }),
            ErrorKind::SchemaInvalid);
}

TEST(HeuristicState, StepFractions) {
  EXPECT_EQ(HeuristicStateProposer::step_fraction(0.05), 0.10);
  EXPECT_EQ(HeuristicStateProposer::step_fraction(0.005), 0.02);
  EXPECT_EQ(HeuristicStateProposer::step_fraction(0.015), 0.05);
}

TEST(HeuristicState, ApprovesWithinTolerance) {
  HeuristicStateProposer p;
  RefinementContext ctx;
  ctx.penetration = 0.0015;
  EXPECT_TRUE(p.propose(ctx).approved);
  EXPECT_EQ(p.query_count(), 1);
}

TEST(HeuristicState, NoFocusIsNoProposal) {
  HeuristicStateProposer p;
  RefinementContext ctx;
  ctx.penetration = 0.03;
  EXPECT_EQ(kind_of([&] { p.propose(ctx); }), ErrorKind::NoProposal);
}

TEST(HeuristicState, HingeStepIsTenPercentOfRange) {
  const auto model = fixtures::build_model(fixtures::hinged_box(0, 0.1, 0), fixtures::scratch_dir("hs"));
  const CollisionModel collision(model);
  RefinementContext ctx;
  ctx.model = &model;
  ctx.collision = &collision;
  ctx.q.values["lid_hinge"] = 0.5;
  ctx.penetration = 0.05;
  ctx.focus_joints = {"lid_hinge"};
  HeuristicStateProposer p;
  const auto u = p.propose(ctx);
  const auto& lim = *model.find_joint("lid_hinge")->limits;
  EXPECT_NEAR(std::abs(u.joint_deltas.at("lid_hinge")), 0.10 * (lim.upper - lim.lower), 1e-12);
}

TEST(Prompts, FormatTemplate) {
  EXPECT_EQ(format_template("a {x} {{y}} {z:.2f}", {{"x", "1"}, {"z", "0.126"}}), "a 1 {y} 0.13");
  // Exact binary halves round to even, as Python does.
  EXPECT_EQ(format_template("{z:.2f}", {{"z", "0.125"}}), "0.12");
  EXPECT_EQ(kind_of([] { format_template("{missing}", {}); }), ErrorKind::InvalidArgument);
  EXPECT_NE(prompt_template(PromptId::OverlayGeneration).find("{object_info}"), std::string_view::npos);
}

TEST(Remote, EchoedOverlayParsesInOneQuery) {
  const auto transport = stub({kOverlayReply});
  RemoteClient client(transport, remote_config());
  const auto o = propose_overlay_remote(info_for(plastic_cube(), "r1"), client);
  EXPECT_EQ(o, overlay_from_json(ordered_json::parse(kOverlayReply)));
  EXPECT_EQ(client.query_count(), 1);
  EXPECT_NE(transport->requests().at(0).find("image"), std::string::npos);
}

TEST(Remote, JsonEmbeddedInProseIsExtracted) {
  RemoteClient client(stub({std::string("Here you go:\n```json\n") + kOverlayReply + "\n```\nDone."}),
                      remote_config());
  EXPECT_EQ(propose_overlay_remote(info_for(plastic_cube(), "r2"), client).uniform_scale_factor, 0.5);
}

TEST(Remote, ProseOnlyExhaustsRetries) {
  RemoteClient client(stub({"I cannot help with that."}), remote_config());
  EXPECT_EQ(kind_of([&] { propose_overlay_remote(info_for(plastic_cube(), "r3"), client); }),
            ErrorKind::RetriesExhausted);
  EXPECT_EQ(client.query_count(), 3);
}

TEST(Remote, RejectedJsonIsSchemaInvalid) {
  const auto transport = stub({R"({"link_modifications": {}})"});
  RemoteClient client(transport, remote_config());
  EXPECT_EQ(kind_of([&] { propose_overlay_remote(info_for(plastic_cube(), "r4"), client); }),
            ErrorKind::SchemaInvalid);
  EXPECT_EQ(client.query_count(), 3);
  // Retries carry the parse error back to the model.
  EXPECT_NE(transport->requests().at(1).find("global_modifications"), std::string::npos);
}

TEST(Remote, RecoversOnSecondReply) {
  RemoteClient client(stub({"not json", kOverlayReply}), remote_config());
  EXPECT_NO_THROW(propose_overlay_remote(info_for(plastic_cube(), "r5"), client));
  EXPECT_EQ(client.query_count(), 2);
}

TEST(Remote, ChatEnvelopeAndExtraction) {
  EXPECT_EQ(reply_text(R"({"choices": [{"message": {"content": "hi"}}]})"), "hi");
  EXPECT_EQ(reply_text("plain"), "plain");
  EXPECT_EQ(extract_first_json_object("x {bad} {\"a\": {\"b\": 1}} y")->at("a").at("b"), 1);
  EXPECT_FALSE(extract_first_json_object("no braces"));
  EXPECT_EQ(base64_encode({'M', 'a', 'n'}), "TWFu");
  EXPECT_EQ(base64_encode({'M'}), "TQ==");
}

TEST(Remote, TransportErrorsPropagate) {
  RemoteConfig cfg = remote_config();
  cfg.endpoint = "http://127.0.0.1:1/unreachable";
  RemoteClient client(std::make_shared<HttpTransport>(2), cfg);
  EXPECT_EQ(kind_of([&] { propose_overlay_remote(info_for(plastic_cube(), "r6"), client); }), ErrorKind::Transport);
}
