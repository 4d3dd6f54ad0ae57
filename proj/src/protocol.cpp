#include "artready/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "artready/error.hpp"

namespace artready {

int count_sign_changes(const std::vector<double>& values, double ignore_below) {
  int changes = 0;
  int last = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    if (std::abs(d) < ignore_below) continue;
    const int sign = d > 0.0 ? 1 : -1;
    if (last != 0 && sign != last) ++changes;
    last = sign;
  }
  return changes;
}

StabilityResult stability_metrics(const Trajectory& trajectory, const DynState& reference,
                                  const StabilityThresholds& thresholds,
                                  const std::map<std::string, JointType>& joint_types) {
  if (trajectory.samples.empty()) throw Error(ErrorKind::EmptyTrajectory, "trajectory has no samples");
  StabilityResult r;
  const Vec3 x_ref = reference.base_pose.translation();
  const Mat3 r_ref = reference.base_pose.linear();
  for (const auto& s : trajectory.samples) {
    r.d_pos = std::max(r.d_pos, (s.base_pose.translation() - x_ref).norm());
    r.d_ori = std::max(r.d_ori, rotation_angle_between(r_ref, s.base_pose.linear()));
  }
  r.pos_pass = r.d_pos <= thresholds.tau_pos;
  r.ori_pass = r.d_ori <= thresholds.tau_ori;

  for (const auto& [joint, q0] : trajectory.samples.front().q.values) {
    std::vector<double> series;
    series.reserve(trajectory.samples.size());
    for (const auto& s : trajectory.samples) series.push_back(s.q.get(joint, q0));
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    OscillationEntry e{joint, *hi - *lo, count_sign_changes(series)};
    const auto type = joint_types.find(joint);
    const double eps = type != joint_types.end() && type->second == JointType::Prismatic ? thresholds.amp_prismatic
                                                                                         : thresholds.amp_revolute;
    if (e.reversals >= 3 && e.amplitude > eps) r.oscillating_joints.push_back(e);
    r.joints.push_back(std::move(e));
  }
  return r;
}

StabilityResult stability_metrics(const Trajectory& trajectory, const DynState& reference, const AssetModel& model,
                                  const StabilityThresholds& thresholds) {
  std::map<std::string, JointType> types;
  for (const auto& j : model.joints) types.emplace(j.name, j.type);
  return stability_metrics(trajectory, reference, thresholds, types);
}

double scale_deviation(double s_candidate, double s_reference) {
  if (!(s_reference > 0.0)) throw Error(ErrorKind::InvalidArgument, "reference scale must be positive");
  return std::abs(s_candidate - s_reference) / s_reference;
}

double joint_deviation(double q_candidate, double q_reference) { return std::abs(q_candidate - q_reference); }

double prompt_alignment_mean(const std::vector<double>& scores) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "no alignment scores");
  double sum = 0.0;
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alignment score outside [0, 1]");
    sum += s;
  }
  return sum / static_cast<double>(scores.size());
}

SrccResult srcc(const std::vector<double>& sim, const std::vector<double>& real) {
  if (sim.size() != real.size()) throw Error(ErrorKind::InvalidArgument, "sim and real lists differ in length");
  if (sim.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two tasks");
  const double n = static_cast<double>(sim.size());
  const double ms = std::accumulate(sim.begin(), sim.end(), 0.0) / n;
  const double mr = std::accumulate(real.begin(), real.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    sxy += (sim[i] - ms) * (real[i] - mr);
    sxx += (sim[i] - ms) * (sim[i] - ms);
    syy += (real[i] - mr) * (real[i] - mr);
  }
  if (sxx == 0.0 || syy == 0.0) return {};
  return {true, std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0)};
}

RealismResult realism_mean_from_summaries(const std::map<std::string, TaskSummary>& per_task, RealismSpread spread) {
  if (per_task.empty()) throw Error(ErrorKind::InvalidArgument, "no tasks");
  double sum = 0.0, var = 0.0;
  for (const auto& [task, t] : per_task) {
    if (t.n < 1) throw Error(ErrorKind::InvalidArgument, "task has no samples", task);
    sum += t.mean;
    const double se = spread == RealismSpread::TaskSd ? t.sd : t.sd / std::sqrt(static_cast<double>(t.n));
    var += se * se;
  }
  const double k = static_cast<double>(per_task.size());
  return {sum / k, std::sqrt(var) / k};
}

RealismResult realism_mean(const std::map<std::string, std::vector<double>>& per_task_samples) {
  std::map<std::string, TaskSummary> summaries;
  for (const auto& [task, xs] : per_task_samples) {
    if (xs.empty()) throw Error(ErrorKind::InvalidArgument, "task has no samples", task);
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    summaries[task] = {mean, xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0, static_cast<int>(xs.size())};
  }
  return realism_mean_from_summaries(summaries);
}

double normalize_joint(double q, double lower, double upper) {
  if (!(upper > lower)) throw Error(ErrorKind::InvalidArgument, "joint range must be non-empty");
  return (q - lower) / (upper - lower);
}

namespace {

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::InvalidArgument, "joint-state dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace

RewardBreakdown reward_step(const RewardObservation& obs, const RewardWeights& w) {
  const double e = l1(obs.x, obs.x_target);
  const Vec3 diff = obs.p_ee - obs.p_obj;
  const double d = diff.norm();
  const double d_xy = diff.head<2>().norm();
  RewardBreakdown r;
  r.reach = w.w_reach * (1.0 - std::tanh(d / w.sigma_reach));
  r.reach_xy = w.w_reach_xy * (1.0 - std::tanh(d_xy / w.sigma_reach_xy));
  r.joint = d < w.delta ? w.w_joint * std::exp(-w.alpha * e) : 0.0;
  r.pen_grip = -w.lambda_grip * obs.gripper_open;
  r.pen_down = -w.lambda_down * (1.0 - obs.z_ee.dot(-Vec3::UnitZ()));
  r.pen_xy = -w.lambda_xy * d_xy;
  r.total = w.dt * (r.reach + r.reach_xy + r.joint + r.pen_grip + r.pen_down + r.pen_xy);
  return r;
}

double success_metric(const std::vector<double>& x_t, const std::vector<double>& x_0,
                      const std::vector<double>& x_target, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  const double s = 1.0 - l1(x_t, x_target) / std::max(l1(x_0, x_target), eps);
  return std::clamp(s, 0.0, 1.0);
}

std::string_view to_string(FailureClass c) {
  switch (c) {
    case FailureClass::Pass: return "pass";
    case FailureClass::InvalidJointConfig: return "invalid-joint-config";
    case FailureClass::EstimationFailure: return "estimation-failure";
    case FailureClass::PenetrationFailure: return "penetration-failure";
    case FailureClass::Instability: return "instability";
  }
  return "pass";
}

std::optional<FailureClass> failure_class_from_string(std::string_view text) {
  for (auto c : {FailureClass::Pass, FailureClass::InvalidJointConfig, FailureClass::EstimationFailure,
                 FailureClass::PenetrationFailure, FailureClass::Instability}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

FailureClass classify_failure(const ClassificationInputs& in) {
  if (!in.overlay_valid) return FailureClass::EstimationFailure;
  if (!in.joint_config_valid) return FailureClass::InvalidJointConfig;
  if (in.penetration > in.penetration_tolerance) return FailureClass::PenetrationFailure;
  if (in.simulation_blew_up || (in.stability && !in.stability->passed())) return FailureClass::Instability;
  return FailureClass::Pass;
}

}  // namespace artready
