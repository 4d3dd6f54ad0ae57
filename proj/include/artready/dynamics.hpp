#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "artready/asset_model.hpp"
#include "artready/collision.hpp"

namespace artready {

using Twist = Eigen::Matrix<double, 6, 1>;

/// Base pose of the root link, its twist (world-frame linear velocity of the
/// root frame origin, then world angular velocity), and joint coordinates.
struct DynState {
  Transform base_pose = Transform::Identity();
  Twist base_twist = Twist::Zero();
  JointConfig q;
  std::map<std::string, double> qdot;

  bool operator==(const DynState& other) const;
};

struct Trajectory {
  std::vector<DynState> samples;
  double dt = 0.0;
};

struct DynamicsParams {
  double gravity = 9.81;
  /// Penalty stiffness per ground contact point (N/m); damping is critical
  /// for the total mass shared across the active points.
  double ground_stiffness = 1e4;
  double ground_friction = 0.5;
  /// Velocity scale of the tanh-smoothed Coulomb terms.
  double friction_velocity_scale = 0.01;
  std::optional<Plane> ground = Plane{};
  /// Pin the root link in place (used for analytic pendulum checks).
  bool fixed_base = false;
  /// Out of contact and with no joint springs, rescale velocities whenever
  /// the explicit velocity-product terms would raise the total energy.
  bool energy_guard = true;
};

/// Passive reduced-coordinate stepper: floating base plus one coordinate per
/// active joint, full joint-space mass matrix and velocity-product terms.
/// Damping, smoothed friction and ground contact are integrated implicitly,
/// joint stops by a kinetic-energy projection.
class Simulator {
 public:
  /// Throws Error(MissingInertial) when a link lacks mass or inertia.
  Simulator(const AssetModel& model, DynamicsParams params = {});
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const AssetModel& model() const { return model_; }
  const DynamicsParams& params() const { return params_; }
  const std::vector<std::string>& dof_joints() const { return dof_joints_; }

  DynState step(const DynState& state, double dt) const;

  /// Kinetic + gravitational + spring + ground-penalty energy.
  double energy(const DynState& state) const;
  double kinetic_energy(const DynState& state) const;

  /// Lowest collision-hull point over all links (world z along the ground normal).
  double lowest_point(const DynState& state) const;
  /// Shifts the base along the ground normal so the lowest point sits `clearance` above the ground.
  DynState place_on_ground(DynState state, double clearance) const;

  /// Joint-space mass matrix at the state's configuration.
  Eigen::MatrixXd mass_matrix(const DynState& state) const;

  struct Kinematics;  // per-step link frames and velocity terms (internal)

 private:
  Kinematics kinematics(const DynState& state) const;
  Eigen::VectorXd velocity_vector(const DynState& state) const;

  AssetModel model_;
  DynamicsParams params_;
  KinematicTree tree_;
  std::vector<std::string> dof_joints_;
  std::vector<int> joint_dof_;  // per joint index, -1 when fixed
  std::vector<std::vector<Vec3>> hull_points_;  // per link, link frame
  double total_mass_ = 0.0;
  bool has_springs_ = false;
};

DynState step_dynamics(const AssetModel& model, const DynState& state, double dt, const DynamicsParams& params = {});

struct PassiveSettings {
  double dt = 1.0 / 240.0;
  double t_set = 1.0;
  double t_test = 2.0;
  double clearance = 1e-3;
  DynamicsParams params;
};

struct PassiveRun {
  DynState reference;
  Trajectory trajectory;
};

/// Places the asset just above the ground, settles for t_set, records the
/// reference, then records every step of the t_test window.
/// Throws Error(Instability) on any non-finite coordinate.
PassiveRun simulate_passive(const AssetModel& model, const JointConfig& q0, const PassiveSettings& settings = {});

/// CSV with columns t, x, y, z, qw, qx, qy, qz, then one column per joint.
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace artready
