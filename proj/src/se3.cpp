#include "lma/se3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "lma/errors.hpp"

namespace lma {
namespace {

constexpr double kSmallAngle = 1e-6;
constexpr double kBranchCutMargin = 1e-6;

// (theta - sin theta) / theta^3, accurate for small theta.
double third_coefficient(double th) {
  if (th < 1e-2) {
    const double t2 = th * th;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0;
  }
  return (th - std::sin(th)) / (th * th * th);
}

// Coefficient of [theta]^2 in the inverse of the left Jacobian of SO(3).
double inverse_jacobian_coefficient(double th) {
  if (th < 1e-3) {
    const double t2 = th * th;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  const double half = 0.5 * th;
  // 1 - cos = 2 sin^2(th/2) keeps the denominator accurate.
  const double one_minus_cos = 2.0 * std::sin(half) * std::sin(half);
  return (1.0 - th * std::sin(th) / (2.0 * one_minus_cos)) / (th * th);
}

}  // namespace

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Vec6 Twist::vector() const {
  Vec6 v;
  v << rho, theta;
  return v;
}

Twist Twist::from_vector(const Vec6& v) {
  return Twist{v.head<3>(), v.tail<3>()};
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

Pose exp_se3(const Twist& xi) {
  if (!xi.rho.allFinite() || !xi.theta.allFinite()) {
    throw InvalidArgument("exp_se3: non-finite twist");
  }
  const double th = xi.theta.norm();
  const Mat3 k = hat(xi.theta);
  const Mat3 k2 = k * k;

  double a, b;
  if (th < kSmallAngle) {
    const double t2 = th * th;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    const double half = 0.5 * th;
    a = std::sin(th) / th;
    b = 2.0 * std::sin(half) * std::sin(half) / (th * th);
  }
  const double c = third_coefficient(th);

  Pose out;
  out.rotation = Mat3::Identity() + a * k + b * k2;
  const Mat3 v = Mat3::Identity() + b * k + c * k2;
  out.translation = v * xi.rho;
  return out;
}

Twist log_se3(const Pose& m) {
  const Mat3& r = m.rotation;
  const Vec3 axis_sin2 = vee(r - r.transpose());  // 2 sin(phi) * axis
  const double cos_phi = 0.5 * (r.trace() - 1.0);
  const double sin_phi = 0.5 * axis_sin2.norm();
  const double phi = std::atan2(sin_phi, cos_phi);

  if (std::numbers::pi - phi < kBranchCutMargin) {
    throw BranchCutError("log_se3: rotation angle within 1e-6 of pi");
  }

  Vec3 theta;
  if (phi < kSmallAngle) {
    theta = 0.5 * (1.0 + phi * phi / 6.0) * axis_sin2;
  } else if (phi < 2.5) {
    theta = (phi / (2.0 * sin_phi)) * axis_sin2;
  } else {
    // sin(phi) is small here; read the axis off the symmetric part instead.
    const Mat3 b = 0.5 * (r + r.transpose()) - cos_phi * Mat3::Identity();
    Eigen::Index k;
    b.diagonal().maxCoeff(&k);
    Vec3 axis = b.col(k).normalized();
    if (axis.dot(axis_sin2) < 0.0) axis = -axis;
    theta = phi * axis;
  }

  const Mat3 kk = hat(theta);
  const Mat3 v_inv = Mat3::Identity() - 0.5 * kk +
                     inverse_jacobian_coefficient(phi) * kk * kk;
  return Twist{v_inv * m.translation, theta};
}

Mat3 project_so3(const Mat3& m) {
  if (!m.allFinite()) throw DegenerateProjection("project_so3: non-finite input");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (!(s(2) > 1e-12 * s(0))) {
    throw DegenerateProjection("project_so3: rank-deficient input");
  }
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose{a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose inverse(const Pose& a) {
  const Mat3 rt = a.rotation.transpose();
  return Pose{rt, -(rt * a.translation)};
}

// Same value as acos((tr R - 1) / 2) with the argument clamped, but the sine
// term keeps it accurate near 0 and pi where acos loses half the digits.
double rotation_angle(const Mat3& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double s = 0.5 * vee(r - r.transpose()).norm();
  return std::atan2(s, c);
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  return (r.transpose() * r - Mat3::Identity()).norm() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace lma
