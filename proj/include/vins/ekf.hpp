#pragma once

// Error-state EKF with an SO(3) manifold element. The 27-element vector
// carries the tangent-space attitude perturbation; the quaternion absorbs it
// at every reset.

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>

#include <Eigen/Core>

#include "vins/geodesy.hpp"
#include "vins/lie_so3.hpp"
#include "vins/random.hpp"
#include "vins/sensors.hpp"

namespace vins {

inline constexpr int kStateDim = 27;
inline constexpr int kObsImu = 9;
inline constexpr int kObsFull = 15;

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;
using ObsVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kObsFull, 1>;
using ObsMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kObsFull, kObsFull>;
using ObsJac = Eigen::Matrix<double, Eigen::Dynamic, kStateDim, 0, kObsFull, kStateDim>;

// Offsets of the state blocks.
namespace ix {
inline constexpr int kDr = 0;      // attitude perturbation [rad]
inline constexpr int kOmega = 3;   // w_NB^B [rad/s]
inline constexpr int kPos = 6;     // lon, lat [rad], h [m]
inline constexpr int kVel = 9;     // v^N [m/s]
inline constexpr int kForce = 12;  // f_IB^B [m/s^2]
inline constexpr int kEGyr = 15;
inline constexpr int kEAcc = 18;
inline constexpr int kEMag = 21;
inline constexpr int kBDev = 24;   // model minus real field, NED [nT]
}  // namespace ix

struct FilterState {
  UnitQuaternion q;
  StateVec x = StateVec::Zero();
  StateMat P = StateMat::Identity();
  double t = 0.0;

  GeodeticPosition position() const { return GeodeticPosition::from_vector(x.segment<3>(ix::kPos)); }
  Vec3 velocity() const { return x.segment<3>(ix::kVel); }
  /// Attitude including the carried perturbation.
  UnitQuaternion attitude() const { return plus(q, x.segment<3>(ix::kDr)); }
};

struct ObservationBundle {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
  Vec3 mag = Vec3::Zero();
  std::optional<PosVelObs> posvel;

  int rows() const { return posvel ? kObsFull : kObsImu; }
  static ObservationBundle from_frame(const SensorFrame& f);
};

enum class NoiseRegime { Gnss, Vvs };

struct NoiseConfig {
  // Process noise PSD per axis.
  double q_att = 0.0;          // [rad^2/s]
  double q_omega = 1e-3;       // [(rad/s)^2/s]
  double q_pos_gnss = 0.01;    // [m^2/s]
  double q_pos_vvs = 0.1;
  double q_vel_gnss = 0.01;    // [(m/s)^2/s]
  double q_vel_vvs = 0.1;
  double q_force = 1.0;        // [(m/s^2)^2/s]
  double q_e_gyr = 1e-13;
  double q_e_acc = 1e-9;
  double q_e_mag = 1.0;        // [nT^2/s]
  double q_b_dev = 1.0;
  // Measurement noise std.
  double r_gyro = 2e-4;        // [rad/s]
  double r_accel = 0.02;       // [m/s^2]
  double r_mag = 50.0;         // [nT]

  void validate() const;
};

/// Continuous process noise PSD for `regime`, with the horizontal position
/// entries converted from m^2/s to rad^2/s at the state's position.
StateVec process_noise(const NoiseConfig& n, NoiseRegime regime, const StateVec& x);

StateVec dynamics(const UnitQuaternion& q, const StateVec& x);

/// Linearized dynamics. The dependence on the geodetic coordinates is
/// neglected, so the position columns are zero.
StateMat build_A(const UnitQuaternion& q, const StateVec& x);

ObsVec predicted_obs(const UnitQuaternion& q, const StateVec& x, int rows, const MagneticModel& mag);

/// Observation Jacobian for 9 or 15 rows; position columns neglected except
/// for the identity in the position rows.
ObsJac build_H(const UnitQuaternion& q, const StateVec& x, int rows, const MagneticModel& mag);

ObsMat measurement_noise(const NoiseConfig& n, const ObservationBundle& obs);

/// RK4 on the state, second-order transition matrix on the covariance.
FilterState time_update(const FilterState& s, double dt, const NoiseConfig& n, NoiseRegime regime);

/// Joseph-form update. Throws NumericalFailure if the innovation covariance
/// is not positive definite.
FilterState measurement_update(const FilterState& s, const ObservationBundle& obs, const NoiseConfig& n,
                               const MagneticModel& mag);

FilterState reset(const FilterState& s);

void symmetrize(StateMat& P);

/// Smallest eigenvalue of the diagonally normalized covariance.
double normalized_min_eigenvalue(const StateMat& P);

/// Throws NumericalFailure when P is not finite, not symmetric, or has a
/// normalized eigenvalue below -tol (Cholesky test on C + tol I).
void check_covariance(const StateMat& P, const char* where, double tol = 1e-9);

struct InitialUncertainty {
  double att = 0.5 * std::numbers::pi / 180.0;  // [rad]
  double omega = 0.01;
  double pos_h = 5.0;       // [m]
  double pos_v = 5.0;       // [m]
  double vel = 0.3;
  double force = 0.1;
  double e_gyr = 1e-3;
  double e_acc = 0.03;
  double e_mag = 150.0;
  double b_dev = 400.0;

  void validate() const;
};

/// Filter state at the first frame: attitude, position and velocity drawn
/// around truth with the configured std, error terms at zero, angular
/// velocity and specific force taken from the first frame.
FilterState initialize_filter(const TruthSample& truth, const SensorFrame& first, const InitialUncertainty& u,
                              Rng& rng);

struct StepCounters {
  std::int64_t time_updates = 0;
  std::int64_t updates_9 = 0;
  std::int64_t updates_15 = 0;
  std::int64_t two_pass_epochs = 0;
};

/// Produces the image-epoch position/velocity observation from the filter
/// state after the first pass, or nothing (bootstrap).
using VvsProvider = std::function<std::optional<PosVelObs>(const FilterState& pre)>;

class NavFilter {
 public:
  NavFilter(FilterState init, NoiseConfig noise, MagneticModel mag, bool check_psd = true);

  /// Time update to frame.t, then the mode selected by the frame content:
  /// GNSS observation -> 15-row pass; image epoch with a provider -> 9-row
  /// pass, provider call, 15-row pass; otherwise a 9-row pass. Every pass is
  /// followed by a reset.
  void step(const SensorFrame& frame, const VvsProvider& vvs = {});

  const FilterState& state() const { return state_; }
  const StepCounters& counters() const { return counters_; }
  NoiseRegime regime() const { return regime_; }
  const NoiseConfig& noise() const { return noise_; }

 private:
  void pass(const ObservationBundle& obs);

  FilterState state_;
  NoiseConfig noise_;
  MagneticModel mag_;
  bool check_psd_;
  NoiseRegime regime_ = NoiseRegime::Gnss;
  StepCounters counters_;
};

}  // namespace vins
