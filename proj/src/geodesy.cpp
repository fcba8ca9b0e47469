#include "vins/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vins/errors.hpp"

namespace vins {
namespace {

constexpr double kPoleGuard = 1e-6;

}  // namespace

double wrap_pi(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) {
    a += 2.0 * std::numbers::pi;
  }
  return a;
}

GeodeticPosition normalized(const GeodeticPosition& p) {
  if (!std::isfinite(p.lon) || !std::isfinite(p.lat) || !std::isfinite(p.alt)) {
    throw std::invalid_argument("GeodeticPosition: non-finite coordinate");
  }
  if (std::abs(p.lat) > std::numbers::pi / 2.0) {
    throw std::invalid_argument("GeodeticPosition: latitude outside [-pi/2, pi/2]");
  }
  if (p.alt < -1000.0 || p.alt > 50000.0) {
    throw std::invalid_argument("GeodeticPosition: altitude outside [-1000, 50000] m");
  }
  return {wrap_pi(p.lon), p.lat, p.alt};
}

Radii radii(double lat) {
  if (!(std::abs(lat) <= std::numbers::pi / 2.0)) {
    throw std::invalid_argument("radii: latitude outside [-pi/2, pi/2]");
  }
  const auto& k = wgs84();
  const double s = std::sin(lat);
  const double d = 1.0 - k.e2 * s * s;
  const double sq = std::sqrt(d);
  return {k.a * (1.0 - k.e2) / (d * sq), k.a / sq};
}

void require_off_pole(double lat) {
  if (std::abs(lat) >= std::numbers::pi / 2.0 - kPoleGuard) {
    throw SingularityError("latitude " + std::to_string(lat) + " rad is too close to a pole");
  }
}

Vec3 geodetic_dot(const GeodeticPosition& p, const Vec3& v) {
  require_off_pole(p.lat);
  const Radii r = radii(p.lat);
  return {v[1] / ((r.N + p.alt) * std::cos(p.lat)), v[0] / (r.M + p.alt), -v[2]};
}

Mat3 jac_geodetic_dot_wrt_vN(const GeodeticPosition& p) {
  require_off_pole(p.lat);
  const Radii r = radii(p.lat);
  Mat3 j = Mat3::Zero();
  j(0, 1) = 1.0 / ((r.N + p.alt) * std::cos(p.lat));
  j(1, 0) = 1.0 / (r.M + p.alt);
  j(2, 2) = -1.0;
  return j;
}

Vec3 transport_rate(const GeodeticPosition& p, const Vec3& v) {
  require_off_pole(p.lat);
  const Radii r = radii(p.lat);
  const double nh = r.N + p.alt;
  return {v[1] / nh, -v[0] / (r.M + p.alt), -v[1] * std::tan(p.lat) / nh};
}

Mat3 jac_transport_rate_wrt_vN(const GeodeticPosition& p) {
  require_off_pole(p.lat);
  const Radii r = radii(p.lat);
  const double nh = r.N + p.alt;
  Mat3 j = Mat3::Zero();
  j(0, 1) = 1.0 / nh;
  j(1, 0) = -1.0 / (r.M + p.alt);
  j(2, 1) = -std::tan(p.lat) / nh;
  return j;
}

Vec3 earth_rate(double lat) {
  const double w = wgs84().omega_e;
  return {w * std::cos(lat), 0.0, -w * std::sin(lat)};
}

Vec3 coriolis(const GeodeticPosition& p, const Vec3& v) {
  const double w2 = 2.0 * wgs84().omega_e;
  const double s = std::sin(p.lat), c = std::cos(p.lat);
  return {w2 * v[1] * s, w2 * (-v[0] * s - v[2] * c), w2 * v[1] * c};
}

Mat3 jac_coriolis_wrt_vN(double lat) {
  const double w2 = 2.0 * wgs84().omega_e;
  const double s = std::sin(lat), c = std::cos(lat);
  Mat3 j;
  j << 0.0, s, 0.0,
       -s, 0.0, -c,
       0.0, c, 0.0;
  return w2 * j;
}

double gravity_magnitude(double lat, double alt) {
  const auto& k = wgs84();
  const double b = k.a * (1.0 - k.f);
  const double kk = (b * k.gamma_p) / (k.a * k.gamma_e) - 1.0;
  const double s2 = std::sin(lat) * std::sin(lat);
  const double g0 = k.gamma_e * (1.0 + kk * s2) / std::sqrt(1.0 - k.e2 * s2);
  return g0 - k.free_air * alt;
}

Vec3 gravity(const GeodeticPosition& p) {
  return {0.0, 0.0, gravity_magnitude(p.lat, p.alt)};
}

Eigen::Vector2d horizontal_offset(const GeodeticPosition& a, const GeodeticPosition& b) {
  const Radii r = radii(a.lat);
  return {(b.lat - a.lat) * (r.M + a.alt),
          wrap_pi(b.lon - a.lon) * (r.N + a.alt) * std::cos(a.lat)};
}

double horizontal_distance(const GeodeticPosition& a, const GeodeticPosition& b) {
  return horizontal_offset(a, b).norm();
}

GeodeticPosition offset_by(const GeodeticPosition& p, const Vec3& d) {
  const Radii r = radii(p.lat);
  return {p.lon + d[1] / ((r.N + p.alt) * std::cos(p.lat)), p.lat + d[0] / (r.M + p.alt),
          p.alt - d[2]};
}

namespace {

Vec3 unit_from(double lat, double lon) {
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

}  // namespace

double magnetic_latitude(const MagneticModel& m, const GeodeticPosition& p) {
  const double s = unit_from(m.pole_lat, m.pole_lon).dot(unit_from(p.lat, p.lon));
  return std::asin(std::clamp(s, -1.0, 1.0));
}

Vec3 magnetic_model(const MagneticModel& m, const GeodeticPosition& p) {
  if (m.kind == MagneticModelKind::Constant) {
    return m.constant_ned;
  }
  const Vec3 r_hat = unit_from(p.lat, p.lon);
  const Vec3 moment = -unit_from(m.pole_lat, m.pole_lon);
  const double ratio = wgs84().a / (wgs84().a + p.alt);
  const Vec3 b_ecef = m.dipole_b0 * ratio * ratio * ratio * (3.0 * moment.dot(r_hat) * r_hat - moment);

  const double sl = std::sin(p.lat), cl = std::cos(p.lat);
  const double so = std::sin(p.lon), co = std::cos(p.lon);
  const Vec3 north{-sl * co, -sl * so, cl};
  const Vec3 east{-so, co, 0.0};
  return {b_ecef.dot(north), b_ecef.dot(east), -b_ecef.dot(r_hat)};
}

}  // namespace vins
