#pragma once

// Rotation group SO(3) on unit quaternions.
//
// Conventions:
//  * Hamilton quaternions, q = (w, x, y, z), rotating body vectors into the
//    navigation frame: v_nav = R(q) v_body.
//  * Perturbations are local (right-multiplied, body frame):
//      q (+) dr = q * exp(dr),    q2 (-) q1 = log(conj(q1) * q2).
//  * Every quaternion is stored normalized with w >= 0.

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vins {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class UnitQuaternion {
 public:
  UnitQuaternion() = default;

  /// Normalizes and canonicalizes (w >= 0). Throws std::invalid_argument on
  /// non-finite or zero-norm input.
  static UnitQuaternion from_wxyz(double w, double x, double y, double z);
  static UnitQuaternion from_wxyz(const Eigen::Vector4d& wxyz) {
    return from_wxyz(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  }
  static UnitQuaternion identity() { return {}; }

  /// ZYX (yaw, pitch, roll) Euler angles, rotation NED -> body.
  static UnitQuaternion from_euler(double yaw, double pitch, double roll);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  Vec3 vec() const { return {x_, y_, z_}; }
  Eigen::Vector4d wxyz() const { return {w_, x_, y_, z_}; }

  Mat3 matrix() const;
  UnitQuaternion conjugate() const;

  /// Hamilton product, renormalized.
  UnitQuaternion operator*(const UnitQuaternion& rhs) const;

  bool operator==(const UnitQuaternion&) const = default;

 private:
  UnitQuaternion(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Skew-symmetric (hat) form: skew(a) * b = a x b.
Mat3 skew(const Vec3& v);

/// Rotation matrix of a rotation vector (Rodrigues).
Mat3 rotvec_matrix(const Vec3& r);

UnitQuaternion exp_rotvec(const Vec3& r);
Vec3 log_quat(const UnitQuaternion& q);
/// Validating overload for raw coefficients; rejects |norm - 1| > 1e-9.
Vec3 log_quat(const Eigen::Vector4d& wxyz);

/// Wraps a rotation vector so that its norm is at most pi.
Vec3 canonical_rotvec(const Vec3& r);

UnitQuaternion plus(const UnitQuaternion& q, const Vec3& dr);
Vec3 minus(const UnitQuaternion& q2, const UnitQuaternion& q1);

Vec3 rotate(const UnitQuaternion& q, const Vec3& v);
Vec3 rotate_inv(const UnitQuaternion& q, const Vec3& v);

/// Inverse adjoint action. For SO(3) it coincides with the inverse rotation.
Vec3 inv_adjoint(const UnitQuaternion& q, const Vec3& w);

// Lie Jacobians. Increments of the rotation argument are taken in its local
// tangent space; increments of vector arguments and results are Euclidean.

/// d(R (+) dr)/dR = R(-dr).
Mat3 jac_plus_wrt_R(const Vec3& dr);

/// Right Jacobian of exp: exp(r + d) ~ exp(r) exp(Jr(r) d).
Mat3 jac_plus_wrt_dr(const Vec3& dr);
/// d(R v)/dR = -R skew(v).
Mat3 jac_rotate_wrt_R(const UnitQuaternion& q, const Vec3& v);
/// d(R v)/dv = R.
Mat3 jac_rotate_wrt_v(const UnitQuaternion& q);
/// d(R^T v)/dR = skew(R^T v).
Mat3 jac_rotate_inv_wrt_R(const UnitQuaternion& q, const Vec3& v);
/// d(R^T v)/dv = R^T.
Mat3 jac_rotate_inv_wrt_v(const UnitQuaternion& q);
/// d(Ad^-1_R w)/dR = skew(R^T w).
Mat3 jac_inv_adjoint_wrt_R(const UnitQuaternion& q, const Vec3& w);
/// d(Ad^-1_R w)/dw = R^T.
Mat3 jac_inv_adjoint_wrt_w(const UnitQuaternion& q);

}  // namespace vins
