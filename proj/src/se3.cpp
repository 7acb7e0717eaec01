#include "rawdepth/se3.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "rawdepth/errors.hpp"

namespace rawdepth {

namespace {

Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace

Se3Transform Se3Transform::from_vector(const Vector6d& v) {
  Se3Transform T;
  T.rotation = v.head<3>();
  T.translation = v.tail<3>();
  return T;
}

Vector6d Se3Transform::to_vector() const {
  Vector6d v;
  v << rotation, translation;
  return v;
}

Eigen::Matrix3d Se3Transform::rotation_matrix() const { return exp_so3(rotation); }

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const double vn = q.vec().norm();
  if (vn == 0.0) return Eigen::Vector3d::Zero();
  const double angle = 2.0 * std::atan2(vn, q.w());
  return q.vec() / vn * angle;
}

std::array<Eigen::Matrix3d, 3> rotation_jacobians(const Eigen::Vector3d& omega) {
  std::array<Eigen::Matrix3d, 3> out;
  const double angle2 = omega.squaredNorm();
  if (angle2 < 1e-20) {
    for (int i = 0; i < 3; ++i) out[i] = hat(Eigen::Vector3d::Unit(i));
    return out;
  }
  // dR/dw_i = (w_i [w]x + [w x (I - R) e_i]x) R / |w|^2
  const Eigen::Matrix3d R = exp_so3(omega);
  const Eigen::Matrix3d W = hat(omega);
  const Eigen::Matrix3d IminusR = Eigen::Matrix3d::Identity() - R;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d v = omega.cross(IminusR.col(i));
    out[i] = (omega[i] * W + hat(v)) * R / angle2;
  }
  return out;
}

Eigen::Vector3d apply(const Se3Transform& T, const Eigen::Vector3d& X) {
  return T.rotation_matrix() * X + T.translation;
}

Se3Transform compose(const Se3Transform& a, const Se3Transform& b) {
  const Eigen::Matrix3d Ra = a.rotation_matrix();
  Se3Transform out;
  out.rotation = log_so3(Ra * b.rotation_matrix());
  out.translation = Ra * b.translation + a.translation;
  return out;
}

Se3Transform inverse(const Se3Transform& T) {
  const Eigen::Matrix3d Rt = T.rotation_matrix().transpose();
  Se3Transform out;
  out.rotation = log_so3(Rt);
  out.translation = -(Rt * T.translation);
  return out;
}

double displacement_from_odometry(const OdometrySample& s0, const OdometrySample& s1) {
  if (!(s1.timestamp_s > s0.timestamp_s)) {
    throw Error(ErrorCode::NonMonotonicTime,
                std::to_string(s0.timestamp_s) + " -> " + std::to_string(s1.timestamp_s));
  }
  if (!(s0.speed_mps >= 0.0) || !(s1.speed_mps >= 0.0)) throw Error(ErrorCode::InvalidParameter, "speed_mps");
  return 0.5 * (s0.speed_mps + s1.speed_mps) * (s1.timestamp_s - s0.timestamp_s);
}

Se3Transform scale_pose(const Se3Transform& T, double dx, double epsilon) {
  if (!(dx >= 0.0) || !std::isfinite(dx)) throw Error(ErrorCode::InvalidParameter, "dx");
  const double norm = T.translation.norm();
  if (!(norm > epsilon)) throw Error(ErrorCode::DegenerateTranslation, "|t|=" + std::to_string(norm));
  if (norm == dx) return T;
  Se3Transform out = T;
  out.translation = T.translation / norm * dx;
  return out;
}

}  // namespace rawdepth
