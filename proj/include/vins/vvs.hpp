#pragma once

// Virtual vision sensor: turns consecutive visual poses plus the inertial
// estimate at the previous image into position and velocity observations
// that take the place of the GNSS receiver.
//
// The visual odometry itself is a surrogate. Its horizontal position follows
// the true increments plus a slowly varying north/east bias proportional to
// the distance flown in the frame, and white per-frame noise. Its attitude is
// the inertial estimate pulled toward truth by a bounded amount and its
// altitude is the inertial altitude.

#include <cstdint>
#include <deque>
#include <optional>

#include "vins/ekf.hpp"
#include "vins/random.hpp"
#include "vins/sensors.hpp"
#include "vins/truth_sim.hpp"

namespace vins {

/// Inertial executions per image.
inline constexpr int kVvsDeltaT = 10;

struct SurrogateVoConfig {
  double drift = 0.004;        // mean final horizontal error / distance
  double drift_tau = 1000.0;   // correlation time of the drift direction [s]; 0 = constant
  double white_pos = 0.02;     // per-frame horizontal error [m]
  double att_pull = 0.5;       // fraction of the inertial attitude error removed
  double att_noise = 1e-3;     // [rad]
  double att_clamp = 0.01;     // max visual-inertial attitude difference [rad]

  void validate() const;
};

struct VvsConfig {
  double pos_sigma_factor = 0.1;   // VVS position std over GNSS position std
  double vel_floor = 0.01;         // [m/s]
  int window = 20;
  SurrogateVoConfig vo;

  void validate() const;
};

struct VisualPose {
  double t = 0.0;
  UnitQuaternion q_nb;
  Vec3 pos = Vec3::Zero();   // lon, lat, h
};

struct VvsObservation {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 pos_sigma = Vec3::Ones();
  Vec3 vel_sigma = Vec3::Ones();

  PosVelObs as_posvel() const;
};

class SurrogateVo {
 public:
  SurrogateVo(const SurrogateVoConfig& cfg, std::uint64_t seed);

  /// Visual pose at an image epoch. The first call starts the visual track
  /// at the inertial estimate.
  VisualPose next(const TruthSample& truth, const FilterState& estimate);

  /// Current drift per metre flown, north and east.
  const Eigen::Vector2d& bias() const { return bias_; }

 private:
  SurrogateVoConfig cfg_;
  Rng rng_;
  double sigma_ = 0.0;
  Eigen::Vector2d bias_ = Eigen::Vector2d::Zero();
  std::optional<TruthSample> prev_truth_;
  Vec3 track_ = Vec3::Zero();
  double last_t_ = 0.0;
};

/// (T_i - T_{i-1}) / dt_img. Throws std::invalid_argument unless the poses
/// are one image period apart.
Vec3 vvs_geodetic_rate(const VisualPose& cur, const VisualPose& prev);

/// NED velocity from the geodetic rate using the radii and altitude of the
/// previous-image inertial estimate.
Vec3 vvs_velocity(const Vec3& rate, const GeodeticPosition& prior);

/// Horizontal position by incrementing the previous-image inertial estimate;
/// altitude from the frozen-offset barometer.
Vec3 vvs_position(const Vec3& rate, const GeodeticPosition& prior, double baro_alt);

/// Running window of velocity observations for the dynamic velocity std.
class VelocityWindow {
 public:
  explicit VelocityWindow(int size = 20) : size_(size) {}

  /// Adds `v` and returns |v - mean| per axis over the window including v.
  Vec3 push(const Vec3& v);
  Vec3 mean() const;
  std::size_t count() const { return buf_.size(); }

 private:
  int size_;
  std::deque<Vec3> buf_;
};

/// Position std: factor times the GNSS std (converted to rad at `at`).
Vec3 vvs_position_sigma(const VvsConfig& cfg, const SensorConfig& gnss, const GeodeticPosition& at);
Vec3 vvs_velocity_sigma(const Vec3& deviation, double floor);

/// Altitude offset between GNSS and pressure altitude, averaged over the
/// last GNSS epochs and frozen once GNSS is lost.
class BaroOffsetLatch {
 public:
  explicit BaroOffsetLatch(int window = 60) : window_(window) {}

  void add(double gnss_alt, double baro_alt);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  bool ready() const { return !buf_.empty(); }
  double offset() const;
  double corrected(double baro_alt) const { return baro_alt + offset(); }

 private:
  int window_;
  bool frozen_ = false;
  std::deque<double> buf_;
};

/// Per-run VVS: owns the surrogate, the previous pose and estimate, and the
/// velocity window.
class VirtualVisionSensor {
 public:
  VirtualVisionSensor(const VvsConfig& cfg, const SensorConfig& sensors, std::uint64_t seed);

  /// Called at an image epoch with the first-pass estimate. Returns nothing
  /// on the first epoch.
  std::optional<VvsObservation> observe(const TruthSample& truth, const FilterState& pre, double baro_alt);

  /// Records the final estimate at an image epoch (the prior for the next).
  void record_estimate(const FilterState& s) { prior_ = s.position(); }

  const std::optional<VisualPose>& last_pose() const { return prev_pose_; }

 private:
  VvsConfig cfg_;
  SensorConfig sensors_;
  SurrogateVo vo_;
  VelocityWindow window_;
  std::optional<VisualPose> prev_pose_;
  std::optional<GeodeticPosition> prior_;
};

}  // namespace vins
