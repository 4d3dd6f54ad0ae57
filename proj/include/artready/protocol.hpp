#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artready/dynamics.hpp"

namespace artready {

struct StabilityThresholds {
  double tau_pos = 1e-3;        // m
  double tau_ori = 1e-2;        // rad
  double amp_revolute = 0.05;   // rad, also used for continuous joints
  double amp_prismatic = 0.005; // m
};

struct OscillationEntry {
  std::string joint;
  double amplitude = 0.0;
  int reversals = 0;
  bool operator==(const OscillationEntry&) const = default;
};

struct StabilityResult {
  double d_pos = 0.0;
  double d_ori = 0.0;
  bool pos_pass = true;
  bool ori_pass = true;
  /// Every active joint with its amplitude and reversal count.
  std::vector<OscillationEntry> joints;
  /// Subset of `joints` meeting both the reversal and amplitude tests.
  std::vector<OscillationEntry> oscillating_joints;

  bool passed() const { return pos_pass && ori_pass && oscillating_joints.empty(); }
};

/// Sign changes of successive differences, ignoring |dq| below 1e-9.
int count_sign_changes(const std::vector<double>& values, double ignore_below = 1e-9);

/// Drift of the root pose from the reference and per-joint oscillation over
/// the window. `joint_types` decides which amplitude threshold applies;
/// joints missing from it use the revolute threshold.
StabilityResult stability_metrics(const Trajectory& trajectory, const DynState& reference,
                                  const StabilityThresholds& thresholds = {},
                                  const std::map<std::string, JointType>& joint_types = {});
StabilityResult stability_metrics(const Trajectory& trajectory, const DynState& reference, const AssetModel& model,
                                  const StabilityThresholds& thresholds = {});

double scale_deviation(double s_candidate, double s_reference);
double joint_deviation(double q_candidate, double q_reference);
double prompt_alignment_mean(const std::vector<double>& scores);

/// Pearson correlation; `defined` is false when either input has zero variance.
struct SrccResult {
  bool defined = false;
  double value = 0.0;
};
SrccResult srcc(const std::vector<double>& sim, const std::vector<double>& real);

struct RealismResult {
  double mean = 0.0;
  double standard_error = 0.0;
};
/// Mean of per-task means; SE = sqrt(sum SE_t^2) / |T| with SE_t = s_t / sqrt(n_t)
/// (sample standard deviation, zero for single-sample tasks).
RealismResult realism_mean(const std::map<std::string, std::vector<double>>& per_task_samples);

struct TaskSummary {
  double mean = 0.0;
  double sd = 0.0;
  int n = 1;
};
/// How per-task spread enters the propagated uncertainty.
enum class RealismSpread {
  StandardError,  // SE_t = s_t / sqrt(n_t)
  TaskSd,         // s_t itself; matches the published +/- columns
};

/// Same aggregation when only per-task mean, sd and sample count are known.
RealismResult realism_mean_from_summaries(const std::map<std::string, TaskSummary>& per_task,
                                          RealismSpread spread = RealismSpread::StandardError);

struct RewardWeights {
  double w_reach = 1.0;
  double w_reach_xy = 1.0;
  double w_joint = 2.0;
  double sigma_reach = 0.1;     // m
  double sigma_reach_xy = 0.1;  // m
  double delta = 0.1;           // m, proximity gate
  double alpha = 5.0;
  double lambda_grip = 0.1;
  double lambda_down = 0.1;
  double lambda_xy = 0.1;
  double dt = 1.0 / 60.0;       // s
};

struct RewardObservation {
  Vec3 p_ee = Vec3::Zero();
  Vec3 p_obj = Vec3::Zero();
  std::vector<double> x;         // limit-normalized joint state
  std::vector<double> x_target;
  double gripper_open = 0.0;     // o_t in [0, 1]
  Vec3 z_ee = -Vec3::UnitZ();
};

struct RewardBreakdown {
  double reach = 0.0;
  double reach_xy = 0.0;
  double joint = 0.0;
  double pen_grip = 0.0;
  double pen_down = 0.0;
  double pen_xy = 0.0;
  double total = 0.0;  // dt times the sum of the terms above
};

/// Limit-normalized coordinate (q - l) / (u - l).
double normalize_joint(double q, double lower, double upper);

RewardBreakdown reward_step(const RewardObservation& obs, const RewardWeights& weights = {});

double success_metric(const std::vector<double>& x_t, const std::vector<double>& x_0,
                      const std::vector<double>& x_target, double eps = 1e-6);

enum class FailureClass { Pass, InvalidJointConfig, EstimationFailure, PenetrationFailure, Instability };

std::string_view to_string(FailureClass c);
std::optional<FailureClass> failure_class_from_string(std::string_view text);

struct ClassificationInputs {
  bool overlay_valid = true;
  bool joint_config_valid = true;
  double penetration = 0.0;
  double penetration_tolerance = 0.002;
  bool simulation_blew_up = false;
  std::optional<StabilityResult> stability;
};

/// estimation-failure > invalid-joint-config > penetration-failure >
/// instability > pass.
FailureClass classify_failure(const ClassificationInputs& in);

}  // namespace artready
