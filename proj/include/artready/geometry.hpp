#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace artready {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Isometry3d;

/// Plain triple used for declared asset fields so models compare exactly.
using Triple = std::array<double, 3>;

inline Vec3 to_vec(const Triple& t) { return {t[0], t[1], t[2]}; }
inline Triple to_triple(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

/// URDF fixed-axis roll/pitch/yaw: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rpy_to_matrix(const Triple& rpy);
Triple matrix_to_rpy(const Mat3& r);

Transform make_transform(const Triple& xyz, const Triple& rpy);

/// Geodesic angle between two rotations, in [0, pi].
double rotation_angle_between(const Mat3& a, const Mat3& b);

Mat3 skew(const Vec3& v);

}  // namespace artready
