#include "artkin/geometry.hpp"

#include <cmath>

namespace artkin {

Mat3 project_so3(const Mat3& m) {
  if (!m.allFinite()) throw NumericError("project_so3: non-finite input");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  // The nearest rotation is unique only when the input has rank >= 2.
  if (s(1) + s(2) <= 1e-12 * std::max(1.0, s(0)))
    throw NumericError("project_so3: degenerate input (rank <= 1)");
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Vec3 d(1.0, 1.0, (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0);
  return u * d.asDiagonal() * v.transpose();
}

double rotation_angle(const Mat3& r) {
  double c = 0.5 * (r.trace() - 1.0);
  c = std::min(1.0, std::max(-1.0, c));
  return std::acos(c);
}

Mat3 axis_angle_rotation(const UnitAxis& axis, double angle) {
  const Mat3 k = skew(axis.direction);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  if (theta < 1e-10)
    return Mat3::Identity() + w + 0.5 * w * w;
  return Mat3::Identity() + w * (std::sin(theta) / theta) +
         w * w * ((1.0 - std::cos(theta)) / (theta * theta));
}

Vec3 so3_log(const Mat3& r) {
  const double theta = rotation_angle(r);
  Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < 1e-8) return 0.5 * w;
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-8) {
    // theta near pi: recover the axis from the symmetric part.
    const Mat3 b = 0.5 * (r + Mat3::Identity());
    Vec3 axis(std::sqrt(std::max(0.0, b(0, 0))), std::sqrt(std::max(0.0, b(1, 1))),
              std::sqrt(std::max(0.0, b(2, 2))));
    int k = 0;
    axis.cwiseAbs().maxCoeff(&k);
    if (w(k) < 0) axis = -axis;
    const double n = axis.norm();
    if (n < 1e-12) throw NumericError("so3_log: cannot recover axis near pi");
    return theta * axis / n;
  }
  return (theta / (2.0 * s)) * w;
}

double robust_loss(double r, const RobustLoss& loss) {
  const double a = std::abs(r);
  if (loss.kind == RobustLoss::kHuber) {
    const double d = loss.scale;
    return a <= d ? 0.5 * r * r : d * (a - 0.5 * d);
  }
  const double c = loss.scale;
  if (a >= c) return c * c / 6.0;
  const double q = 1.0 - (r / c) * (r / c);
  return (c * c / 6.0) * (1.0 - q * q * q);
}

double robust_loss_derivative(double r, const RobustLoss& loss) {
  const double a = std::abs(r);
  if (loss.kind == RobustLoss::kHuber) {
    const double d = loss.scale;
    return a <= d ? r : (r > 0 ? d : -d);
  }
  const double c = loss.scale;
  if (a >= c) return 0.0;
  const double q = 1.0 - (r / c) * (r / c);
  return r * q * q;
}

}  // namespace artkin
