#include "artready/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

bool DynState::operator==(const DynState& other) const {
  return base_pose.matrix() == other.base_pose.matrix() && base_twist == other.base_twist && q == other.q &&
         qdot == other.qdot;
}

namespace {

struct Body {
  double mass = 0.0;
  Vec3 com_local = Vec3::Zero();
  Mat3 inertia_local = Mat3::Zero();  // about the COM, link frame axes
};

// Per-dof column data in world coordinates.
struct DofAxis {
  bool angular = true;
  Vec3 axis = Vec3::UnitZ();
  Vec3 point = Vec3::Zero();
};

}  // namespace

struct Simulator::Kinematics {
  std::vector<Mat3> rot;
  std::vector<Vec3> pos;
  std::vector<Vec3> omega;
  std::vector<Vec3> vel;        // velocity of the link frame origin
  std::vector<Vec3> acc_bias;   // velocity-product acceleration of the origin
  std::vector<Vec3> alpha_bias;
  std::vector<DofAxis> dofs;    // joint dofs only, indexed from 0
  std::vector<std::vector<int>> chain;  // joint dofs on each link's root path
  std::vector<Body> bodies;
};

namespace {

std::vector<Body> collect_bodies(const AssetModel& model) {
  std::vector<Body> out;
  for (const auto& link : model.links) {
    if (!link.mass || !link.inertia) {
      throw Error(ErrorKind::MissingInertial, "link '" + link.name + "' has no mass or inertia", link.name);
    }
    Body b;
    b.mass = *link.mass;
    if (link.center_of_mass) b.com_local = to_vec(*link.center_of_mass);
    const Mat3 r = rpy_to_matrix(link.inertial_rpy);
    b.inertia_local = r * link.inertia->matrix() * r.transpose();
    out.push_back(b);
  }
  return out;
}

}  // namespace

Simulator::Simulator(const AssetModel& model, DynamicsParams params)
    : model_(model), params_(std::move(params)), tree_(model_) {
  joint_dof_.assign(model_.joints.size(), -1);
  for (int j : tree_.joint_order()) {
    if (!model_.joints[j].active()) continue;
    joint_dof_[j] = static_cast<int>(dof_joints_.size());
    dof_joints_.push_back(model_.joints[j].name);
  }
  for (const auto& b : collect_bodies(model_)) total_mass_ += b.mass;
  for (const auto& j : model_.joints) {
    if (j.active() && j.dynamics && j.dynamics->stiffness.value_or(0.0) != 0.0) has_springs_ = true;
  }

  CollisionModel collision(model_);
  hull_points_.resize(model_.links.size());
  for (std::size_t i = 0; i < model_.links.size(); ++i) {
    for (const auto& shape : collision.hulls(model_.links[i].name)) {
      hull_points_[i].insert(hull_points_[i].end(), shape.vertices.begin(), shape.vertices.end());
    }
  }
}

Simulator::Kinematics Simulator::kinematics(const DynState& s) const {
  const std::size_t nl = model_.links.size();
  Kinematics k;
  k.rot.assign(nl, Mat3::Identity());
  k.pos.assign(nl, Vec3::Zero());
  k.omega.assign(nl, Vec3::Zero());
  k.vel.assign(nl, Vec3::Zero());
  k.acc_bias.assign(nl, Vec3::Zero());
  k.alpha_bias.assign(nl, Vec3::Zero());
  k.dofs.resize(dof_joints_.size());
  k.chain.assign(nl, {});
  k.bodies = collect_bodies(model_);

  const int root = tree_.root();
  k.rot[root] = s.base_pose.linear();
  k.pos[root] = s.base_pose.translation();
  if (!params_.fixed_base) {
    k.vel[root] = s.base_twist.head<3>();
    k.omega[root] = s.base_twist.tail<3>();
  }

  for (int j : tree_.joint_order()) {
    const auto& joint = model_.joints[j];
    const int p = tree_.link_index(joint.parent);
    const int c = tree_.link_index(joint.child);
    const double q = s.q.get(joint.name);
    const auto qd_it = s.qdot.find(joint.name);
    const double qd = joint.active() && qd_it != s.qdot.end() ? qd_it->second : 0.0;

    const Transform rel = joint_transform(joint, q);
    k.rot[c] = k.rot[p] * rel.linear();
    k.pos[c] = k.pos[p] + k.rot[p] * rel.translation();
    const Vec3 r = k.pos[c] - k.pos[p];
    const Vec3 axis = k.rot[c] * to_vec(joint.axis);
    const Vec3& wp = k.omega[p];

    k.omega[c] = wp;
    k.vel[c] = k.vel[p] + wp.cross(r);
    k.alpha_bias[c] = k.alpha_bias[p];
    k.acc_bias[c] = k.acc_bias[p] + k.alpha_bias[p].cross(r) + wp.cross(wp.cross(r));
    if (joint.angular()) {
      k.omega[c] += axis * qd;
      k.alpha_bias[c] += wp.cross(axis) * qd;
    } else if (joint.type == JointType::Prismatic) {
      k.vel[c] += axis * qd;
      k.acc_bias[c] += 2.0 * wp.cross(axis) * qd;
    }

    k.chain[c] = k.chain[p];
    const int dof = joint_dof_[j];
    if (dof >= 0) {
      k.dofs[dof] = {joint.angular(), axis, k.pos[c]};
      k.chain[c].push_back(dof);
    }
  }
  return k;
}

namespace {

// Linear and angular Jacobians of a world point rigidly attached to `link`.
void point_jacobian(const Simulator::Kinematics& k, int root, int link, const Vec3& x, bool fixed_base,
                    Eigen::MatrixXd& lin, Eigen::MatrixXd* ang) {
  const int base = fixed_base ? 0 : 6;
  const int n = base + static_cast<int>(k.dofs.size());
  lin.setZero(3, n);
  if (ang) ang->setZero(3, n);
  if (!fixed_base) {
    lin.block<3, 3>(0, 0).setIdentity();
    lin.block<3, 3>(0, 3) = -skew(x - k.pos[root]);
    if (ang) ang->block<3, 3>(0, 3).setIdentity();
  }
  for (int d : k.chain[link]) {
    const auto& dof = k.dofs[d];
    if (dof.angular) {
      lin.col(base + d) = dof.axis.cross(x - dof.point);
      if (ang) ang->col(base + d) = dof.axis;
    } else {
      lin.col(base + d) = dof.axis;
    }
  }
}

}  // namespace

Eigen::VectorXd Simulator::velocity_vector(const DynState& s) const {
  const int base = params_.fixed_base ? 0 : 6;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(base + static_cast<int>(dof_joints_.size()));
  if (base) v.head<6>() = s.base_twist;
  for (std::size_t d = 0; d < dof_joints_.size(); ++d) {
    const auto it = s.qdot.find(dof_joints_[d]);
    if (it != s.qdot.end()) v[base + static_cast<int>(d)] = it->second;
  }
  return v;
}

Eigen::MatrixXd Simulator::mass_matrix(const DynState& s) const {
  const auto k = kinematics(s);
  const int base = params_.fixed_base ? 0 : 6;
  const int n = base + static_cast<int>(dof_joints_.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd jv, jw;
  for (std::size_t i = 0; i < model_.links.size(); ++i) {
    const auto& b = k.bodies[i];
    const Vec3 c = k.pos[i] + k.rot[i] * b.com_local;
    point_jacobian(k, tree_.root(), static_cast<int>(i), c, params_.fixed_base, jv, &jw);
    const Mat3 iw = k.rot[i] * b.inertia_local * k.rot[i].transpose();
    m.noalias() += b.mass * jv.transpose() * jv + jw.transpose() * iw * jw;
  }
  return m;
}

double Simulator::kinetic_energy(const DynState& s) const {
  const Eigen::VectorXd v = velocity_vector(s);
  return 0.5 * v.dot(mass_matrix(s) * v);
}

double Simulator::energy(const DynState& s) const {
  const auto k = kinematics(s);
  double e = kinetic_energy(s);
  const Vec3 up = params_.ground ? params_.ground->normal : Vec3::UnitZ();
  for (std::size_t i = 0; i < model_.links.size(); ++i) {
    const Vec3 c = k.pos[i] + k.rot[i] * k.bodies[i].com_local;
    e += k.bodies[i].mass * params_.gravity * c.z();
  }
  for (const auto& joint : model_.joints) {
    if (!joint.active() || !joint.dynamics || !joint.dynamics->stiffness) continue;
    const double q = s.q.get(joint.name);
    e += 0.5 * *joint.dynamics->stiffness * q * q;
  }
  if (params_.ground) {
    for (std::size_t i = 0; i < model_.links.size(); ++i) {
      for (const auto& p : hull_points_[i]) {
        const double pen = params_.ground->offset - up.dot(k.pos[i] + k.rot[i] * p);
        if (pen > 0.0) e += 0.5 * params_.ground_stiffness * pen * pen;
      }
    }
  }
  return e;
}

double Simulator::lowest_point(const DynState& s) const {
  const auto fk = forward_kinematics(model_, s.q, s.base_pose);
  const Vec3 up = params_.ground ? params_.ground->normal : Vec3::UnitZ();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model_.links.size(); ++i) {
    const Transform& t = fk.at(model_.links[i].name);
    for (const auto& p : hull_points_[i]) lo = std::min(lo, up.dot(t * p));
  }
  return lo;
}

DynState Simulator::place_on_ground(DynState s, double clearance) const {
  const double lo = lowest_point(s);
  if (!std::isfinite(lo)) return s;
  const Vec3 up = params_.ground ? params_.ground->normal : Vec3::UnitZ();
  const double offset = params_.ground ? params_.ground->offset : 0.0;
  s.base_pose.translation() += up * (offset + clearance - lo);
  return s;
}

DynState Simulator::step(const DynState& s, double dt) const {
  const auto k = kinematics(s);
  const int root = tree_.root();
  const int base = params_.fixed_base ? 0 : 6;
  const int nd = static_cast<int>(dof_joints_.size());
  const int n = base + nd;
  const Vec3 g(0.0, 0.0, -params_.gravity);
  const Eigen::VectorXd v = velocity_vector(s);

  // Mass matrix, velocity-product terms and gravity.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);  // generalized forces minus bias
  Eigen::MatrixXd jv, jw;
  for (std::size_t i = 0; i < model_.links.size(); ++i) {
    const auto& b = k.bodies[i];
    const Vec3 d = k.rot[i] * b.com_local;
    const Vec3 c = k.pos[i] + d;
    point_jacobian(k, root, static_cast<int>(i), c, params_.fixed_base, jv, &jw);
    const Mat3 iw = k.rot[i] * b.inertia_local * k.rot[i].transpose();
    m.noalias() += b.mass * jv.transpose() * jv + jw.transpose() * iw * jw;
    const Vec3& w = k.omega[i];
    const Vec3 ac = k.acc_bias[i] + k.alpha_bias[i].cross(d) + w.cross(w.cross(d));
    const Vec3 torque = iw * k.alpha_bias[i] + w.cross(iw * w);
    rhs.noalias() += jv.transpose() * (b.mass * (g - ac)) - jw.transpose() * torque;
  }

  // Passive joint forces: springs explicit, damping and friction implicit.
  Eigen::VectorXd implicit_damping = Eigen::VectorXd::Zero(n);
  for (int dof = 0; dof < nd; ++dof) {
    const auto& joint = *model_.find_joint(dof_joints_[dof]);
    const double qd = v[base + dof];
    if (!joint.dynamics) continue;
    const auto& dyn = *joint.dynamics;
    if (dyn.stiffness) rhs[base + dof] -= *dyn.stiffness * s.q.get(joint.name);
    double c = dyn.damping.value_or(0.0);
    if (dyn.friction && *dyn.friction > 0.0) {
      const double vs = params_.friction_velocity_scale;
      // Secant coefficient of mu*tanh(qd/vs); tends to mu/vs at rest.
      c += std::abs(qd) > 1e-12 * vs ? *dyn.friction * std::tanh(std::abs(qd) / vs) / std::abs(qd)
                                     : *dyn.friction / vs;
    }
    implicit_damping[base + dof] = c;
  }

  Eigen::MatrixXd a = m;
  a.diagonal() += dt * implicit_damping;
  Eigen::VectorXd b_vec = m * v + dt * rhs;

  // Ground penalty contacts at hull points below the plane.
  struct GroundPoint {
    Eigen::RowVectorXd jn;
    double pen;
  };
  std::vector<GroundPoint> points;
  if (params_.ground) {
    const Vec3 up = params_.ground->normal;
    const Mat3 tangent = Mat3::Identity() - up * up.transpose();
    Eigen::MatrixXd jp;
    for (std::size_t i = 0; i < model_.links.size(); ++i) {
      for (const auto& local : hull_points_[i]) {
        const Vec3 x = k.pos[i] + k.rot[i] * local;
        const double pen = params_.ground->offset - up.dot(x);
        if (pen <= 0.0) continue;
        point_jacobian(k, root, static_cast<int>(i), x, params_.fixed_base, jp, nullptr);
        GroundPoint gp{up.transpose() * jp, pen};
        // Tangential friction as an implicit secant-viscous term.
        const Eigen::MatrixXd jt = tangent * jp;
        const double vt = (jt * v).norm();
        const double fn = params_.ground_stiffness * pen;
        const double vs = params_.friction_velocity_scale;
        const double ct = vt > 1e-12 * vs ? params_.ground_friction * fn * std::tanh(vt / vs) / vt
                                          : params_.ground_friction * fn / vs;
        a.noalias() += dt * ct * jt.transpose() * jt;
        points.push_back(std::move(gp));
      }
    }
  }

  // Active-set solve. Ground points that would pull are released; joints
  // that would pass a limit are constrained to land exactly on it.
  const double kg = params_.ground_stiffness;
  std::vector<bool> active(points.size(), true);
  std::vector<std::pair<int, double>> stops;  // dof, landing velocity
  const auto stopped = [&](int dof) {
    return std::any_of(stops.begin(), stops.end(), [&](const auto& st) { return st.first == dof; });
  };
  Eigen::VectorXd v_new;
  for (std::size_t round = 0; round <= points.size() + static_cast<std::size_t>(nd); ++round) {
    const auto count = static_cast<double>(std::count(active.begin(), active.end(), true));
    const double cg = count > 0 ? 2.0 * std::sqrt(kg * total_mass_ / count) : 0.0;
    Eigen::MatrixXd aa = a;
    Eigen::VectorXd bb = b_vec;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (!active[p]) continue;
      aa.noalias() += dt * (kg * dt + cg) * points[p].jn.transpose() * points[p].jn;
      bb += dt * kg * points[p].pen * points[p].jn.transpose();
    }
    const auto ldlt = aa.ldlt();
    v_new = ldlt.solve(bb);
    if (!stops.empty()) {
      const auto rows = static_cast<int>(stops.size());
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, n);
      Eigen::VectorXd target(rows);
      for (int r = 0; r < rows; ++r) e(r, base + stops[r].first) = 1.0, target[r] = stops[r].second;
      const Eigen::MatrixXd ainv_et = ldlt.solve(e.transpose());
      v_new -= ainv_et * (e * ainv_et).ldlt().solve(e * v_new - target);
    }

    bool changed = false;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (!active[p]) continue;
      const double fn = kg * points[p].pen - (kg * dt + cg) * points[p].jn.dot(v_new);
      if (fn < 0.0) active[p] = false, changed = true;
    }
    for (int dof = 0; dof < nd; ++dof) {
      const auto& joint = *model_.find_joint(dof_joints_[dof]);
      if (!joint.limits || stopped(dof)) continue;
      const double q = s.q.get(joint.name);
      const double vd = v_new[base + dof];
      if (q + dt * vd > joint.limits->upper && vd > 0.0) {
        stops.emplace_back(dof, std::max(0.0, (joint.limits->upper - q) / dt));
        changed = true;
      } else if (q + dt * vd < joint.limits->lower && vd < 0.0) {
        stops.emplace_back(dof, std::min(0.0, (joint.limits->lower - q) / dt));
        changed = true;
      }
    }
    if (!changed) break;
  }

  DynState out;
  out.base_pose = s.base_pose;
  if (!params_.fixed_base) {
    out.base_twist = v_new.head<6>();
    out.base_pose.translation() += dt * out.base_twist.head<3>();
    const Vec3 w = out.base_twist.tail<3>();
    const double angle = w.norm() * dt;
    Mat3 r = s.base_pose.linear();
    if (angle > 0.0) r = Eigen::AngleAxisd(angle, w.normalized()).toRotationMatrix() * r;
    out.base_pose.linear() = Eigen::Quaterniond(r).normalized().toRotationMatrix();
  }
  for (int dof = 0; dof < nd; ++dof) {
    const auto& joint = *model_.find_joint(dof_joints_[dof]);
    double q = s.q.get(joint.name) + dt * v_new[base + dof];
    if (joint.limits) q = std::clamp(q, joint.limits->lower, joint.limits->upper);
    out.q.values[joint.name] = q;
    // Velocity is zeroed at a hard stop.
    out.qdot[joint.name] = stopped(dof) ? 0.0 : v_new[base + dof];
  }

  if (params_.energy_guard && points.empty() && !has_springs_) {
    const double before = energy(s);
    const double excess = energy(out) - before;
    if (excess > 0.0) {
      const double ke = kinetic_energy(out);
      const double f = ke > excess ? std::sqrt((ke - excess) / ke) : 0.0;
      out.base_twist *= f;
      for (auto& [name, qd] : out.qdot) qd *= f;
    }
  }

  bool finite = out.base_pose.matrix().allFinite() && out.base_twist.allFinite();
  for (const auto& [name, q] : out.q.values) finite = finite && std::isfinite(q) && std::isfinite(out.qdot[name]);
  if (!finite) throw Error(ErrorKind::Instability, "non-finite state after step");
  return out;
}

DynState step_dynamics(const AssetModel& model, const DynState& state, double dt, const DynamicsParams& params) {
  return Simulator(model, params).step(state, dt);
}

PassiveRun simulate_passive(const AssetModel& model, const JointConfig& q0, const PassiveSettings& settings) {
  if (!(settings.dt > 0.0) || settings.t_set < 0.0 || !(settings.t_test > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "dt and t_test must be positive, t_set non-negative");
  }
  const Simulator sim(model, settings.params);
  DynState s;
  const JointConfig q = project_to_limits(q0, model);
  for (const auto& name : sim.dof_joints()) {
    s.q.values[name] = q.get(name);
    s.qdot[name] = 0.0;
  }
  if (settings.params.ground && !settings.params.fixed_base) s = sim.place_on_ground(s, settings.clearance);

  const auto settle_steps = static_cast<long>(std::llround(settings.t_set / settings.dt));
  const auto test_steps = static_cast<long>(std::llround(settings.t_test / settings.dt));
  for (long i = 0; i < settle_steps; ++i) s = sim.step(s, settings.dt);

  PassiveRun run;
  run.reference = s;
  run.trajectory.dt = settings.dt;
  run.trajectory.samples.reserve(static_cast<std::size_t>(test_steps));
  for (long i = 0; i < test_steps; ++i) {
    s = sim.step(s, settings.dt);
    run.trajectory.samples.push_back(s);
  }
  return run;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::ostringstream out;
  out << "t,x,y,z,qw,qx,qy,qz";
  std::vector<std::string> joints;
  if (!trajectory.samples.empty()) {
    for (const auto& [name, q] : trajectory.samples.front().q.values) joints.push_back(name);
  }
  for (const auto& j : joints) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
    const auto& s = trajectory.samples[i];
    const Vec3 p = s.base_pose.translation();
    const Eigen::Quaterniond r(s.base_pose.linear());
    out << format_number(static_cast<double>(i + 1) * trajectory.dt);
    for (double v : {p.x(), p.y(), p.z(), r.w(), r.x(), r.y(), r.z()}) out << ',' << format_number(v);
    for (const auto& j : joints) out << ',' << format_number(s.q.get(j));
    out << '\n';
  }
  return out.str();
}

}  // namespace artready
