#pragma once

#include <Eigen/Dense>

#include "artkin/errors.hpp"

namespace artkin {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Rigid transform in SE(3), acting on points as x -> rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  /// Composition as matrix product: (a.compose(b)).apply(x) == a.apply(b.apply(x)).
  RigidTransform compose(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
};

/// Unit-norm direction. Construction normalizes and rejects near-zero input.
struct UnitAxis {
  Vec3 direction = Vec3::UnitZ();

  static UnitAxis from(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 1e-15)) throw NumericError("UnitAxis: zero-length direction");
    return UnitAxis{v / n};
  }
};

struct RobustLoss {
  enum Kind { kHuber, kTukey };
  Kind kind = kHuber;
  double scale = 1.0;  // huber delta or tukey c, > 0

  static RobustLoss huber(double delta) { return {kHuber, delta}; }
  static RobustLoss tukey(double c) { return {kTukey, c}; }
};

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

/// Nearest rotation to M in Frobenius norm (SVD with det sign correction).
/// Throws NumericError when the projection is not unique (rank <= 1 input).
Mat3 project_so3(const Mat3& m);

/// Angle of a rotation in [0, pi]; the arccos argument is clamped to [-1, 1].
double rotation_angle(const Mat3& r);

/// Rodrigues rotation about a unit axis.
Mat3 axis_angle_rotation(const UnitAxis& axis, double angle);

/// Exponential map so(3) -> SO(3) for a tangent vector (axis * angle).
Mat3 so3_exp(const Vec3& omega);

/// Log map SO(3) -> so(3); returns axis * angle with angle in [0, pi].
Vec3 so3_log(const Mat3& r);

double robust_loss(double r, const RobustLoss& loss);
double robust_loss_derivative(double r, const RobustLoss& loss);

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).norm() < tol &&
         std::abs(r.determinant() - 1.0) < tol;
}

}  // namespace artkin
