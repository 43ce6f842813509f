#include "udgs/geometry.hpp"

#include <cmath>

namespace udgs {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorCode::InvalidArgument, "CameraIntrinsics: fx, fy must be > 0");
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::InvalidArgument, "CameraIntrinsics: bad image size");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw Error(ErrorCode::InvalidArgument,
                "CameraIntrinsics: principal point outside image");
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

Mat3 so3_exp(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 w = skew(phi);
  double a;  // sin(t)/t
  double b;  // (1-cos(t))/t^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * w + b * w * w;
}

Vec3 so3_log(const Mat3& rotation) {
  // sin(theta) * axis from the antisymmetric part; atan2 keeps the branch
  // stable over (0, pi).
  Vec3 w(rotation(2, 1) - rotation(1, 2),
         rotation(0, 2) - rotation(2, 0),
         rotation(1, 0) - rotation(0, 1));
  w *= 0.5;
  const double cos_theta = std::clamp((rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double sin_theta = w.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < kSmallAngle) return w;  // phi ~ vee(R - R^T)/2

  if (sin_theta < 1e-9) {
    // theta near pi: recover the axis from the diagonal.
    Mat3 s = 0.5 * (rotation + Mat3::Identity());
    int k = 0;
    if (s(1, 1) > s(0, 0)) k = 1;
    if (s(2, 2) > s(k, k)) k = 2;
    Vec3 axis;
    axis[k] = std::sqrt(std::max(s(k, k), 0.0));
    for (int i = 0; i < 3; ++i)
      if (i != k) axis[i] = s(k, i) / axis[k];
    axis.normalize();
    // Fix the sign so that exp matches: w and axis agree when sin > 0.
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / sin_theta) * w;
}

namespace {

// V(phi) such that exp_se3(rho, phi) translates by V * rho.
Mat3 se3_left_v(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 w = skew(phi);
  double b;  // (1-cos)/t^2
  double c;  // (t-sin)/t^3
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / (theta * theta);
    c = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3::Identity() + b * w + c * w * w;
}

Mat3 se3_left_v_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 w = skew(phi);
  double coef;
  if (theta < kSmallAngle) {
    coef = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    coef = 1.0 / (theta * theta) -
           (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() - 0.5 * w + coef * w * w;
}

}  // namespace

SE3Pose SE3Pose::exp(const Tangent6& xi) {
  SE3Pose p;
  p.rotation = so3_exp(xi.phi);
  p.translation = se3_left_v(xi.phi) * xi.rho;
  return p;
}

Tangent6 SE3Pose::log() const {
  Tangent6 xi;
  xi.phi = so3_log(rotation);
  xi.rho = se3_left_v_inverse(xi.phi) * translation;
  return xi;
}

SE3Pose SE3Pose::inverse() const {
  SE3Pose p;
  p.rotation = rotation.transpose();
  p.translation = -(rotation.transpose() * translation);
  return p;
}

SE3Pose SE3Pose::operator*(const SE3Pose& rhs) const {
  SE3Pose p;
  p.rotation = rotation * rhs.rotation;
  p.translation = rotation * rhs.translation + translation;
  return p;
}

void SE3Pose::orthonormalize() {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  rotation = q.toRotationMatrix();
}

SE3Pose se3_retract(const SE3Pose& pose, const Tangent6& xi) {
  SE3Pose p = SE3Pose::exp(xi) * pose;
  p.orthonormalize();
  return p;
}

std::optional<Vec2> project(const Vec3& mu_c, const CameraIntrinsics& K,
                            double z_min) {
  if (!(mu_c.z() > z_min)) return std::nullopt;
  return Vec2(K.fx * mu_c.x() / mu_c.z() + K.cx,
              K.fy * mu_c.y() / mu_c.z() + K.cy);
}

std::optional<Mat23> projection_jacobian(const Vec3& mu_c,
                                         const CameraIntrinsics& K,
                                         double z_min) {
  if (!(mu_c.z() > z_min)) return std::nullopt;
  const double iz = 1.0 / mu_c.z();
  const double iz2 = iz * iz;
  Mat23 j;
  j << K.fx * iz, 0.0, -K.fx * mu_c.x() * iz2,
       0.0, K.fy * iz, -K.fy * mu_c.y() * iz2;
  return j;
}

Mat36 point_pose_jacobian(const Vec3& mu_c) {
  Mat36 j;
  j.leftCols<3>() = Mat3::Identity();
  j.rightCols<3>() = -skew(mu_c);
  return j;
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& K) {
  return Vec3((pixel.x() - K.cx) / K.fx * depth,
              (pixel.y() - K.cy) / K.fy * depth,
              depth);
}

Mat3 quat_to_rotation(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Vec4 rotation_to_quat(const Mat3& rotation) {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return Vec4(q.w(), q.x(), q.y(), q.z());
}

std::array<Mat3, 4> quat_rotation_derivatives(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3, 4> d;
  d[0] << 0, -2 * z, 2 * y,
          2 * z, 0, -2 * x,
         -2 * y, 2 * x, 0;
  d[1] << 0, 2 * y, 2 * z,
          2 * y, -4 * x, -2 * w,
          2 * z, 2 * w, -4 * x;
  d[2] << -4 * y, 2 * x, 2 * w,
           2 * x, 0, 2 * z,
          -2 * w, 2 * z, -4 * y;
  d[3] << -4 * z, -2 * w, 2 * x,
           2 * w, -4 * z, 2 * y,
           2 * x, 2 * y, 0;
  return d;
}

}  // namespace udgs
