#pragma once

// WGS84 ellipsoid, geodetic kinematics and the Earth-related rates and
// accelerations used by the navigation equations. NED frame throughout.

#include <numbers>

#include <Eigen/Core>

#include "vins/lie_so3.hpp"

namespace vins {

struct EarthConstants {
  double a = 6378137.0;                   // semi-major axis [m]
  double f = 1.0 / 298.257223563;         // flattening
  double e2 = f * (2.0 - f);              // first eccentricity squared
  double omega_e = 7.292115e-5;           // rotation rate [rad/s]
  double gamma_e = 9.7803253359;          // normal gravity at the equator [m/s^2]
  double gamma_p = 9.8321849378;          // normal gravity at the poles [m/s^2]
  double free_air = 3.086e-6;             // free-air gradient [1/s^2]
};

inline const EarthConstants& wgs84() {
  static const EarthConstants k{};
  return k;
}

/// Longitude [rad], latitude [rad], altitude above the ellipsoid [m].
struct GeodeticPosition {
  double lon = 0.0;
  double lat = 0.0;
  double alt = 0.0;

  Vec3 as_vector() const { return {lon, lat, alt}; }
  static GeodeticPosition from_vector(const Vec3& v) { return {v[0], v[1], v[2]}; }
};

/// Validates |lat| <= pi/2, alt in [-1000, 50000] and wraps lon to (-pi, pi].
GeodeticPosition normalized(const GeodeticPosition& p);
double wrap_pi(double angle);

struct Radii {
  double M = 0.0;  // meridian
  double N = 0.0;  // prime vertical
};

/// Throws std::invalid_argument for |lat| > pi/2.
Radii radii(double lat);

/// Throws SingularityError for |lat| >= pi/2 - 1e-6.
void require_off_pole(double lat);

Vec3 geodetic_dot(const GeodeticPosition& p, const Vec3& v_ned);
Mat3 jac_geodetic_dot_wrt_vN(const GeodeticPosition& p);

Vec3 transport_rate(const GeodeticPosition& p, const Vec3& v_ned);
Mat3 jac_transport_rate_wrt_vN(const GeodeticPosition& p);

Vec3 earth_rate(double lat);

Vec3 coriolis(const GeodeticPosition& p, const Vec3& v_ned);
Mat3 jac_coriolis_wrt_vN(double lat);

/// Somigliana normal gravity with a linear free-air altitude correction,
/// returned as a NED vector (0, 0, g).
Vec3 gravity(const GeodeticPosition& p);
double gravity_magnitude(double lat, double alt);

/// North/east displacement [m] of `b` relative to `a`, using the radii at
/// `a`'s latitude (local tangent plane).
Eigen::Vector2d horizontal_offset(const GeodeticPosition& a, const GeodeticPosition& b);
double horizontal_distance(const GeodeticPosition& a, const GeodeticPosition& b);

/// Adds a NED displacement [m] to a geodetic position (first order in the
/// local radii, accurate for short displacements).
GeodeticPosition offset_by(const GeodeticPosition& p, const Vec3& d_ned);

// Magnetic field model.

enum class MagneticModelKind { Constant, Dipole };

struct MagneticModel {
  MagneticModelKind kind = MagneticModelKind::Constant;
  Vec3 constant_ned{22000.0, 800.0, 42000.0};  // [nT]
  // Tilted centered dipole, evaluated on a spherical Earth.
  double dipole_b0 = 30000.0;       // equatorial surface field [nT]
  double pole_lat = 80.65 * std::numbers::pi / 180.0;
  double pole_lon = -72.68 * std::numbers::pi / 180.0;
};

/// Field [nT] predicted by the model, viewed in NED.
Vec3 magnetic_model(const MagneticModel& model, const GeodeticPosition& p);

/// Geomagnetic latitude of a position for the dipole pole of `model`.
double magnetic_latitude(const MagneticModel& model, const GeodeticPosition& p);

}  // namespace vins
