#include "vins/atmosphere.hpp"

#include <cmath>

namespace vins {

double isa_temperature(double h) {
  return isa().t0 + isa().lapse * h;
}

double isa_pressure(double h) {
  const auto& k = isa();
  return k.p0 * std::pow(isa_temperature(h) / k.t0, -k.g0 / (k.r_air * k.lapse));
}

double isa_density(double h) {
  return isa_pressure(h) / (isa().r_air * isa_temperature(h));
}

double pressure_offset_to_altitude(double dp, double h) {
  return dp / (isa_density(h) * isa().g0);
}

}  // namespace vins
