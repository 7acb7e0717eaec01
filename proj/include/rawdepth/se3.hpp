#pragma once

#include <array>

#include <Eigen/Core>

namespace rawdepth {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rigid transform X -> R(rotation) X + translation, rotation as an
/// axis-angle vector with angle in [0, pi], translation in meters.
struct Se3Transform {
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Se3Transform identity() { return {}; }
  static Se3Transform from_vector(const Vector6d& v);
  /// (rotation, translation) stacked.
  Vector6d to_vector() const;
  Eigen::Matrix3d rotation_matrix() const;
};

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega);
/// Axis-angle with angle in [0, pi].
Eigen::Vector3d log_so3(const Eigen::Matrix3d& R);
/// Partial derivatives dR/d(omega_i) of exp_so3 at omega.
std::array<Eigen::Matrix3d, 3> rotation_jacobians(const Eigen::Vector3d& omega);

Eigen::Vector3d apply(const Se3Transform& T, const Eigen::Vector3d& X);
/// A after B: apply(compose(A, B), X) == apply(A, apply(B, X)).
Se3Transform compose(const Se3Transform& a, const Se3Transform& b);
Se3Transform inverse(const Se3Transform& T);

struct OdometrySample {
  double speed_mps = 0.0;
  double timestamp_s = 0.0;
};

/// Trapezoidal displacement between two odometry samples. Throws
/// NonMonotonicTime unless s1 is strictly later than s0, InvalidParameter on
/// negative speed.
double displacement_from_odometry(const OdometrySample& s0, const OdometrySample& s1);

inline constexpr double kDefaultTranslationEpsilon = 1e-6;

/// Rescales the translation to norm dx, keeping its direction and the
/// rotation. Throws DegenerateTranslation if the norm is <= epsilon.
Se3Transform scale_pose(const Se3Transform& T, double dx, double epsilon = kDefaultTranslationEpsilon);

}  // namespace rawdepth
