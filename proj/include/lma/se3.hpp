#pragma once

#include <Eigen/Core>

namespace lma {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid motion in SE(3): x -> rotation * x + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  Mat4 matrix() const;
};

/// se(3) coordinates, translational part first: [rho; theta].
struct Twist {
  Vec3 rho = Vec3::Zero();
  Vec3 theta = Vec3::Zero();

  Vec6 vector() const;
  static Twist from_vector(const Vec6& v);
  double norm() const { return vector().norm(); }
};

Mat3 hat(const Vec3& v);
Vec3 vee(const Mat3& m);

/// Closed-form exponential with a Taylor branch for |theta| < 1e-6.
/// Throws InvalidArgument on non-finite input.
Pose exp_se3(const Twist& xi);

/// Principal logarithm, |theta| <= pi. Throws BranchCutError when the rotation
/// angle is within 1e-6 of pi.
Twist log_se3(const Pose& m);

/// Nearest proper rotation in Frobenius norm (maximizes tr(Q^T m)).
/// Throws DegenerateProjection for rank-deficient or non-finite input.
Mat3 project_so3(const Mat3& m);

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& a);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

/// Geodesic angle of a rotation, arccos((tr R - 1) / 2) with the argument
/// clamped to [-1, 1].
double rotation_angle(const Mat3& r);

/// Orthonormality and det = +1, both within tol.
bool is_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace lma
