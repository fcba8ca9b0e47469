#include "vins/lie_so3.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vins {
namespace {

constexpr double kExpLogTaylor = 1e-8;
constexpr double kJacobianTaylor = 1e-6;

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

// (1 - cos th) / th^2 written as a square to avoid cancellation.
double one_minus_cos_over_th2(double th) {
  const double s = std::sin(0.5 * th) / th;
  return 2.0 * s * s;
}

}  // namespace

UnitQuaternion UnitQuaternion::from_wxyz(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0) {
    throw std::invalid_argument("UnitQuaternion: non-finite or zero-norm coefficients");
  }
  const double s = (w < 0.0 ? -1.0 : 1.0) / n;
  return {w * s, x * s, y * s, z * s};
}

UnitQuaternion UnitQuaternion::from_euler(double yaw, double pitch, double roll) {
  const double cy = std::cos(0.5 * yaw), sy = std::sin(0.5 * yaw);
  const double cp = std::cos(0.5 * pitch), sp = std::sin(0.5 * pitch);
  const double cr = std::cos(0.5 * roll), sr = std::sin(0.5 * roll);
  return from_wxyz(cy * cp * cr + sy * sp * sr, cy * cp * sr - sy * sp * cr,
                   cy * sp * cr + sy * cp * sr, sy * cp * cr - cy * sp * sr);
}

Mat3 UnitQuaternion::matrix() const {
  const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  Mat3 r;
  r << ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy),
       2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx),
       2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz;
  return r;
}

UnitQuaternion UnitQuaternion::conjugate() const {
  return from_wxyz(w_, -x_, -y_, -z_);
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& b) const {
  return from_wxyz(w_ * b.w_ - x_ * b.x_ - y_ * b.y_ - z_ * b.z_,
                   w_ * b.x_ + x_ * b.w_ + y_ * b.z_ - z_ * b.y_,
                   w_ * b.y_ - x_ * b.z_ + y_ * b.w_ + z_ * b.x_,
                   w_ * b.z_ + x_ * b.y_ - y_ * b.x_ + z_ * b.w_);
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotvec_matrix(const Vec3& r) {
  const double th = r.norm();
  const Mat3 k = skew(r);
  if (th < kJacobianTaylor) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  return Mat3::Identity() + (std::sin(th) / th) * k + one_minus_cos_over_th2(th) * k * k;
}

UnitQuaternion exp_rotvec(const Vec3& r) {
  require_finite(r, "exp_rotvec");
  const double th = r.norm();
  if (th < kExpLogTaylor) {
    const double th2 = th * th;
    const Vec3 v = 0.5 * (1.0 - th2 / 24.0) * r;
    return UnitQuaternion::from_wxyz(1.0 - th2 / 8.0, v.x(), v.y(), v.z());
  }
  const Vec3 v = (std::sin(0.5 * th) / th) * r;
  return UnitQuaternion::from_wxyz(std::cos(0.5 * th), v.x(), v.y(), v.z());
}

Vec3 log_quat(const UnitQuaternion& q) {
  const Vec3 v = q.vec();
  const double n = v.norm();
  const double w = q.w();
  if (n < kExpLogTaylor) {
    // theta / sin(theta/2) ~ 2 / w (1 - n^2 / (3 w^2)) for small n
    return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * v;
  }
  const double th = 2.0 * std::atan2(n, w);
  return (th / n) * v;
}

Vec3 log_quat(const Eigen::Vector4d& wxyz) {
  if (!wxyz.allFinite() || std::abs(wxyz.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("log_quat: input is not a unit quaternion");
  }
  return log_quat(UnitQuaternion::from_wxyz(wxyz));
}

Vec3 canonical_rotvec(const Vec3& r) {
  return log_quat(exp_rotvec(r));
}

UnitQuaternion plus(const UnitQuaternion& q, const Vec3& dr) {
  // exp(0) is the identity; skipping the product keeps q bit-identical.
  if (dr.isZero(0.0)) {
    return q;
  }
  return q * exp_rotvec(dr);
}

Vec3 minus(const UnitQuaternion& q2, const UnitQuaternion& q1) {
  return log_quat(q1.conjugate() * q2);
}

Vec3 rotate(const UnitQuaternion& q, const Vec3& v) {
  // v + 2 w (u x v) + 2 u x (u x v), u = vector part
  const Vec3 u = q.vec();
  const Vec3 t = 2.0 * u.cross(v);
  return v + q.w() * t + u.cross(t);
}

Vec3 rotate_inv(const UnitQuaternion& q, const Vec3& v) {
  const Vec3 u = -q.vec();
  const Vec3 t = 2.0 * u.cross(v);
  return v + q.w() * t + u.cross(t);
}

Vec3 inv_adjoint(const UnitQuaternion& q, const Vec3& w) {
  return rotate_inv(q, w);
}

Mat3 jac_plus_wrt_R(const Vec3& dr) {
  require_finite(dr, "jac_plus_wrt_R");
  const double th = dr.norm();
  const Mat3 k = skew(dr);
  if (th < kJacobianTaylor) {
    return Mat3::Identity() - k + 0.5 * k * k;
  }
  return Mat3::Identity() - (std::sin(th) / th) * k + one_minus_cos_over_th2(th) * k * k;
}

Mat3 jac_plus_wrt_dr(const Vec3& dr) {
  require_finite(dr, "jac_plus_wrt_dr");
  const double th = dr.norm();
  const Mat3 k = skew(dr);
  if (th < kJacobianTaylor) {
    return Mat3::Identity() - 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double th2 = th * th;
  // (th - sin th) / th^3 cancels badly for small angles; use its series there.
  const double c3 = th < 1e-2 ? 1.0 / 6.0 - th2 / 120.0 + th2 * th2 / 5040.0 : (th - std::sin(th)) / (th2 * th);
  return Mat3::Identity() - one_minus_cos_over_th2(th) * k + c3 * k * k;
}

Mat3 jac_rotate_wrt_R(const UnitQuaternion& q, const Vec3& v) {
  return -q.matrix() * skew(v);
}

Mat3 jac_rotate_wrt_v(const UnitQuaternion& q) {
  return q.matrix();
}

Mat3 jac_rotate_inv_wrt_R(const UnitQuaternion& q, const Vec3& v) {
  return skew(rotate_inv(q, v));
}

Mat3 jac_rotate_inv_wrt_v(const UnitQuaternion& q) {
  return q.matrix().transpose();
}

Mat3 jac_inv_adjoint_wrt_R(const UnitQuaternion& q, const Vec3& w) {
  return skew(inv_adjoint(q, w));
}

Mat3 jac_inv_adjoint_wrt_w(const UnitQuaternion& q) {
  return q.matrix().transpose();
}

}  // namespace vins
