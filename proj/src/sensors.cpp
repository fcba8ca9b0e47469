#include "vins/sensors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vins/atmosphere.hpp"
#include "vins/errors.hpp"

namespace vins {

void SensorConfig::validate() const {
  const double values[] = {gyro_white, accel_white, mag_white, baro_white, gyro_bias, accel_bias,
                           mag_bias, gyro_rw, accel_rw, mag_rw, gnss_pos_h, gnss_pos_v, gnss_vel};
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("sensor sigma values must be finite and >= 0");
    }
  }
}

ImuErrorState ImuErrorState::draw(const SensorConfig& cfg, Rng& rng) {
  ImuErrorState e;
  e.e_gyr = rng.normal3(cfg.gyro_bias);
  e.e_acc = rng.normal3(cfg.accel_bias);
  e.e_mag = rng.normal3(cfg.mag_bias);
  e.gyro_white = cfg.gyro_white;
  e.accel_white = cfg.accel_white;
  e.mag_white = cfg.mag_white;
  e.gyro_rw = cfg.gyro_rw;
  e.accel_rw = cfg.accel_rw;
  e.mag_rw = cfg.mag_rw;
  return e;
}

void ImuErrorState::propagate(double dt, Rng& rng) {
  const double s = std::sqrt(dt);
  e_gyr += rng.normal3(gyro_rw * s);
  e_acc += rng.normal3(accel_rw * s);
  e_mag += rng.normal3(mag_rw * s);
}

ImuReading sample_imu(const TruthSample& truth, const ImuErrorState& err, Rng& rng) {
  const Vec3 w_in = earth_rate(truth.pos.lat) + transport_rate(truth.pos, truth.v_ned);
  ImuReading r;
  r.gyro = truth.w_nb_b + rotate_inv(truth.q_nb, w_in) + err.e_gyr + rng.normal3(err.gyro_white);
  r.accel = truth.f_ib_b + err.e_acc + rng.normal3(err.accel_white);
  return r;
}

Vec3 sample_mag(const TruthSample& truth, const ImuErrorState& err, Rng& rng) {
  return rotate_inv(truth.q_nb, truth.b_real) + err.e_mag + rng.normal3(err.mag_white);
}

PosVelObs sample_gnss(const TruthSample& truth, const SensorConfig& cfg, Rng& rng) {
  const Radii r = radii(truth.pos.lat);
  PosVelObs o;
  o.source = ObsSource::Gnss;
  o.pos_sigma = {cfg.gnss_pos_h / ((r.N + truth.pos.alt) * std::cos(truth.pos.lat)),
                 cfg.gnss_pos_h / (r.M + truth.pos.alt), cfg.gnss_pos_v};
  o.vel_sigma = Vec3::Constant(cfg.gnss_vel);
  o.pos = truth.pos.as_vector() + rng.normal3(o.pos_sigma);
  o.vel = truth.v_ned + rng.normal3(o.vel_sigma);
  return o;
}

double sample_baro(const TruthSample& truth, double sigma, Rng& rng) {
  return truth.pos.alt - pressure_offset_to_altitude(truth.delta_p, truth.pos.alt) + rng.normal(sigma);
}

SensorSuite::SensorSuite(const SensorConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      rng_imu_(mix_seed(seed, 0x1A0)),
      rng_walk_(mix_seed(seed, 0x1A1)),
      rng_gnss_(mix_seed(seed, 0x1A2)),
      rng_baro_(mix_seed(seed, 0x1A3)) {
  cfg_.validate();
  Rng init(mix_seed(seed, 0x1A4));
  err_ = ImuErrorState::draw(cfg_, init);
}

SensorFrame SensorSuite::sample(const TruthSample& truth, std::int64_t index, bool gnss_available) {
  if (index <= last_index_) {
    throw std::logic_error("SensorSuite::sample: frame indices must increase");
  }
  if (last_index_ >= 0) {
    err_.propagate(static_cast<double>(index - last_index_) * kSensorDt, rng_walk_);
  }
  last_index_ = index;

  SensorFrame f;
  f.index = index;
  f.t = static_cast<double>(index) * kSensorDt;
  const ImuReading imu = sample_imu(truth, err_, rng_imu_);
  f.gyro = imu.gyro;
  f.accel = imu.accel;
  f.mag = sample_mag(truth, err_, rng_imu_);
  f.baro_alt = sample_baro(truth, cfg_.baro_white, rng_baro_);
  constexpr std::int64_t kPerGnss = 100;
  if (gnss_available && index % kPerGnss == 0) {
    f.posvel = sample_gnss(truth, cfg_, rng_gnss_);
  }
  return f;
}

}  // namespace vins
