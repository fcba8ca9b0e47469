#pragma once

// Standard atmosphere (troposphere) and the hydrostatic mapping between a
// pressure offset and the altitude error it induces in a barometric altimeter.

namespace vins {

struct IsaConstants {
  double t0 = 288.15;         // [K]
  double p0 = 101325.0;       // [Pa]
  double lapse = -0.0065;     // [K/m]
  double r_air = 287.05287;   // [J/(kg K)]
  double g0 = 9.80665;        // [m/s^2]
};

inline const IsaConstants& isa() {
  static const IsaConstants k{};
  return k;
}

double isa_temperature(double h);
double isa_pressure(double h);
double isa_density(double h);

/// Altitude shift [m] produced by a pressure offset dp [Pa] at geometric
/// altitude h: dp / (rho(h) g0). A positive offset makes the pressure
/// altitude read low by this amount.
double pressure_offset_to_altitude(double dp, double h);

}  // namespace vins
