#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "artready/dynamics.hpp"
#include "artready/error.hpp"
#include "fixtures.hpp"

using namespace artready;

namespace {

const double kDt = 1.0 / 240.0;

AssetModel single_box(const std::filesystem::path& dir, double density = 1000.0) {
  fixtures::AssetDef def;
  def.name = "block";
  def.links = {{"block", {{Vec3(0.1, 0.1, 0.1), Vec3::Zero()}}, density}};
  return fixtures::build_model(def, dir);
}

DynState zero_state(const Simulator& sim) {
  DynState s;
  for (const auto& j : sim.dof_joints()) s.q.values[j] = 0.0, s.qdot[j] = 0.0;
  return s;
}

}  // namespace

TEST(Dynamics, BallisticDropMatchesHalfGTSquared) {
  const auto model = single_box(fixtures::scratch_dir("ballistic"));
  DynamicsParams params;
  params.ground.reset();
  const Simulator sim(model, params);
  DynState s = zero_state(sim);
  const double z0 = s.base_pose.translation().z();
  for (int i = 0; i < 240; ++i) s = sim.step(s, kDt);
  const double drop = z0 - s.base_pose.translation().z();
  EXPECT_NEAR(drop, 0.5 * 9.81, 0.02 * 0.5 * 9.81);
}

TEST(Dynamics, RestingBlockStaysAtPenaltyEquilibrium) {
  const auto model = single_box(fixtures::scratch_dir("rest"));
  const Simulator sim(model);
  // Four bottom corners share the weight: k * depth * 4 = m g.
  const double mass = 1000.0 * 0.001;
  const double depth = mass * 9.81 / (4.0 * 1e4);
  DynState s = sim.place_on_ground(zero_state(sim), -depth);
  const DynState next = sim.step(s, kDt);
  EXPECT_LT((next.base_pose.translation() - s.base_pose.translation()).norm(), 1e-6);
}

TEST(Dynamics, OverdampedHingeVelocityDecaysMonotonically) {
  auto def = fixtures::stiff_hinge(0.0, 0.0);
  def.joints[0].dynamics = JointDynamics{5.0, 0.0, 0.0};
  const auto model = fixtures::build_model(def, fixtures::scratch_dir("overdamped"));
  DynamicsParams params;
  params.fixed_base = true;
  params.ground.reset();
  const Simulator sim(model, params);
  DynState s = zero_state(sim);
  s.qdot["flap_hinge"] = 1.0;
  double prev = 1.0;
  for (int i = 0; i < 200; ++i) {
    s = sim.step(s, kDt);
    const double qd = s.qdot["flap_hinge"];
    EXPECT_GE(qd, 0.0);
    EXPECT_LT(qd, prev);
    prev = qd;
  }
}

TEST(Dynamics, TorsionalPendulumPeriod) {
  const double k = 0.5;
  const auto model = fixtures::build_model(fixtures::stiff_hinge(k, 0.0), fixtures::scratch_dir("pendulum"));
  DynamicsParams params;
  params.fixed_base = true;
  params.ground.reset();
  const Simulator sim(model, params);
  DynState s = zero_state(sim);
  s.q.values["flap_hinge"] = 0.05;
  // Flap 0.2 x 0.02 x 0.08 at density 500, centred 0.1 m from the hinge axis.
  const double m = 500.0 * 0.2 * 0.02 * 0.08;
  const double inertia = m * (0.2 * 0.2 + 0.02 * 0.02) / 12.0 + m * 0.1 * 0.1;
  const double expected = 2.0 * M_PI * std::sqrt(inertia / k);

  std::vector<double> crossings;  // downward zero crossings, interpolated
  double prev = s.q.get("flap_hinge");
  for (int i = 1; i <= 2400 && crossings.size() < 6; ++i) {
    s = sim.step(s, kDt);
    const double q = s.q.get("flap_hinge");
    if (prev > 0.0 && q <= 0.0) crossings.push_back((i - 1 + prev / (prev - q)) * kDt);
    prev = q;
  }
  ASSERT_GE(crossings.size(), 3u);
  const double period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  EXPECT_NEAR(period, expected, 0.02 * expected);
}

TEST(Dynamics, EnergyNonIncreasingOnRandomDampedAssets) {
  const auto dir = fixtures::scratch_dir("dissipative");
  int increases = 0;
  double worst = 0.0;
  for (unsigned seed = 1; seed <= 100; ++seed) {
    const auto model = fixtures::build_model(fixtures::random_passive_asset(seed), dir);
    DynamicsParams params;
    params.ground.reset();
    const Simulator sim(model, params);
    DynState s = zero_state(sim);
    std::mt19937 rng(seed);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 6; ++i) s.base_twist[i] = n01(rng);
    for (auto& [j, v] : s.qdot) v = 2.0 * n01(rng);
    double e = sim.energy(s);
    for (int i = 0; i < 240; ++i) {
      s = sim.step(s, kDt);
      const double e2 = sim.energy(s);
      if (e2 > e + 1e-12 * std::max(1.0, std::abs(e))) ++increases, worst = std::max(worst, e2 - e);
      e = e2;
    }
  }
  EXPECT_EQ(increases, 0) << "worst increase " << worst;
}

TEST(Dynamics, SimulationIsBitDeterministic) {
  const auto model = fixtures::build_model(fixtures::hinged_box(500.0, 0.5, 0.0), fixtures::scratch_dir("det"));
  PassiveSettings settings;
  settings.t_set = 0.2;
  settings.t_test = 0.2;
  const auto a = simulate_passive(model, {}, settings);
  const auto b = simulate_passive(model, {}, settings);
  EXPECT_EQ(trajectory_csv(a.trajectory), trajectory_csv(b.trajectory));
  EXPECT_TRUE(a.reference == b.reference);
}

TEST(Dynamics, MissingInertialIsRejected) {
  auto def = fixtures::hinged_box(0.0, 0.1, 0.0);
  const auto model = fixtures::build_model(def, fixtures::scratch_dir("noinertial"));
  try {
    Simulator sim(model);
    FAIL() << "expected MissingInertial";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingInertial);
  }
}
