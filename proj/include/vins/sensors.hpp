#pragma once

// Onboard sensors sampled from the truth trajectory at 100 Hz: gyroscopes,
// accelerometers, magnetometers, barometer, and a 1 Hz GNSS receiver.

#include <cstdint>
#include <optional>

#include "vins/random.hpp"
#include "vins/truth_sim.hpp"

namespace vins {

struct SensorConfig {
  // White noise std per sample.
  double gyro_white = 2e-4;     // [rad/s]
  double accel_white = 0.02;    // [m/s^2]
  double mag_white = 50.0;      // [nT]
  double baro_white = 0.3;      // [m]
  // Std of the run-constant part of the error terms.
  double gyro_bias = 1e-3;
  double accel_bias = 0.02;
  double mag_bias = 100.0;
  // Random walk intensity of the error terms [unit / sqrt(s)].
  double gyro_rw = 1e-7;
  double accel_rw = 1e-5;
  double mag_rw = 0.1;
  // GNSS receiver.
  double gnss_pos_h = 2.0;      // [m]
  double gnss_pos_v = 4.0;      // [m]
  double gnss_vel = 0.1;        // [m/s]

  void validate() const;
};

struct ImuErrorState {
  Vec3 e_gyr = Vec3::Zero();
  Vec3 e_acc = Vec3::Zero();
  Vec3 e_mag = Vec3::Zero();
  double gyro_white = 0.0, accel_white = 0.0, mag_white = 0.0;
  double gyro_rw = 0.0, accel_rw = 0.0, mag_rw = 0.0;

  static ImuErrorState draw(const SensorConfig& cfg, Rng& rng);
  /// Advances the random walks by dt.
  void propagate(double dt, Rng& rng);
};

enum class ObsSource { Gnss, Vvs };

/// Absolute position (lon, lat, h) and NED velocity observation.
struct PosVelObs {
  ObsSource source = ObsSource::Gnss;
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 pos_sigma = Vec3::Ones();   // [rad, rad, m]
  Vec3 vel_sigma = Vec3::Ones();   // [m/s]
};

struct SensorFrame {
  std::int64_t index = 0;          // 100 Hz step, t = index * kSensorDt
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
  Vec3 mag = Vec3::Zero();
  std::optional<double> baro_alt;
  std::optional<PosVelObs> posvel;
};

struct ImuReading {
  Vec3 gyro;
  Vec3 accel;
};

ImuReading sample_imu(const TruthSample& truth, const ImuErrorState& err, Rng& rng);
Vec3 sample_mag(const TruthSample& truth, const ImuErrorState& err, Rng& rng);
PosVelObs sample_gnss(const TruthSample& truth, const SensorConfig& cfg, Rng& rng);

/// Pressure altitude [m]: geometric altitude shifted by the altitude
/// equivalent of the pressure offset, plus noise.
double sample_baro(const TruthSample& truth, double sigma, Rng& rng);

/// Owns the error state and the random streams of one run.
class SensorSuite {
 public:
  SensorSuite(const SensorConfig& cfg, std::uint64_t seed);

  /// Frame for 100 Hz step `index`. Truth must be sampled at the same time.
  /// GNSS is attached on whole seconds when `gnss_available`.
  SensorFrame sample(const TruthSample& truth, std::int64_t index, bool gnss_available);

  const ImuErrorState& errors() const { return err_; }
  const SensorConfig& config() const { return cfg_; }

 private:
  SensorConfig cfg_;
  Rng rng_imu_;
  Rng rng_walk_;
  Rng rng_gnss_;
  Rng rng_baro_;
  ImuErrorState err_;
  std::int64_t last_index_ = -1;
};

}  // namespace vins
