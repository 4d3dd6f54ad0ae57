#include "artready/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace artready {

Mat3 rpy_to_matrix(const Triple& rpy) {
  const Eigen::AngleAxisd rx(rpy[0], Vec3::UnitX());
  const Eigen::AngleAxisd ry(rpy[1], Vec3::UnitY());
  const Eigen::AngleAxisd rz(rpy[2], Vec3::UnitZ());
  return (rz * ry * rx).toRotationMatrix();
}

Triple matrix_to_rpy(const Mat3& r) {
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::asin(sp);
  double roll = 0.0;
  double yaw = 0.0;
  if (std::abs(sp) < 1.0 - 1e-12) {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: fold everything into yaw.
    yaw = std::atan2(-r(0, 1), r(1, 1));
  }
  return {roll, pitch, yaw};
}

Transform make_transform(const Triple& xyz, const Triple& rpy) {
  Transform t = Transform::Identity();
  t.linear() = rpy_to_matrix(rpy);
  t.translation() = to_vec(xyz);
  return t;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace artready
