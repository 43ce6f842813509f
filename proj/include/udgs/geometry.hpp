#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <optional>

#include "udgs/errors.hpp"

namespace udgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using VecX = Eigen::VectorXd;

// Near plane below which projection is rejected. Eq-4-style perspective
// division is singular at z = 0.
inline constexpr double kDefaultZMin = 0.01;

// Rodrigues/Taylor switch point for SO(3)/SE(3) exp and log.
inline constexpr double kSmallAngle = 1e-8;

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
};

Mat3 skew(const Vec3& v);

Mat3 so3_exp(const Vec3& phi);
Vec3 so3_log(const Mat3& rotation);

// se(3) element: translational increment first, rotational second.
struct Tangent6 {
  Vec3 rho = Vec3::Zero();
  Vec3 phi = Vec3::Zero();

  Vec6 vec() const {
    Vec6 v;
    v << rho, phi;
    return v;
  }
  static Tangent6 from_vec(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
  static Tangent6 zero() { return {}; }
};

// Rigid world-to-camera transform T_CW.
struct SE3Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static SE3Pose identity() { return {}; }
  static SE3Pose exp(const Tangent6& xi);
  Tangent6 log() const;

  SE3Pose inverse() const;
  SE3Pose operator*(const SE3Pose& rhs) const;
  Vec3 operator*(const Vec3& x) const { return rotation * x + translation; }

  // Pulls the rotation back onto SO(3) after accumulated retractions.
  void orthonormalize();
};

// Left-multiplicative update exp(xi) * pose.
SE3Pose se3_retract(const SE3Pose& pose, const Tangent6& xi);

// Perspective projection of a camera-frame point; nullopt when behind the
// near plane (caller must cull).
std::optional<Vec2> project(const Vec3& mu_c, const CameraIntrinsics& K,
                            double z_min = kDefaultZMin);

// Analytic d(project)/d(mu_c).
std::optional<Mat23> projection_jacobian(const Vec3& mu_c,
                                         const CameraIntrinsics& K,
                                         double z_min = kDefaultZMin);

// d(mu_c)/d(xi) for the left perturbation exp(xi) * T_CW: [I | -skew(mu_c)].
Mat36 point_pose_jacobian(const Vec3& mu_c);

// Back-projection of pixel p at depth d into the camera frame.
Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& K);

// Unit quaternion (w,x,y,z) <-> rotation matrix, with derivatives used by the
// rasterizer backward pass.
Mat3 quat_to_rotation(const Vec4& q_unit);
Vec4 rotation_to_quat(const Mat3& rotation);
// d(rotation)/d(q_k) for a unit quaternion, k in {w,x,y,z}.
std::array<Mat3, 4> quat_rotation_derivatives(const Vec4& q_unit);

}  // namespace udgs
