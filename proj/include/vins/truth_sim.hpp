#pragma once

// Ground-truth trajectory generation for the two GNSS-loss scenarios.
//
// The aircraft is modeled kinematically: airspeed, air-relative heading and
// path angle follow guidance set-points through low-order responses
// (coordinated turns at a bounded bank angle, climbs at a bounded path
// angle), wind and atmospheric offsets follow piecewise-linear transitions,
// and turbulence is added as band-limited random gust velocity and attitude
// perturbations. Truth specific force is back-computed from the analytic
// ground acceleration so that the navigation velocity equation holds
// exactly at every sample.

#include <cstdint>
#include <vector>

#include "vins/geodesy.hpp"
#include "vins/lie_so3.hpp"

namespace vins {

inline constexpr double kTruthDt = 0.002;   // 500 Hz
inline constexpr double kSensorDt = 0.01;   // 100 Hz
inline constexpr double kImageDt = 0.1;     // 10 Hz
inline constexpr double kGnssDt = 1.0;      // 1 Hz

struct BearingChange {
  double t = 0.0;        // [s]
  double bearing = 0.0;  // target air-relative heading [rad]
};

/// Linear transition between an initial and a final value.
struct Transition {
  double initial = 0.0;
  double final = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;

  double at(double t) const;
  double rate(double t) const;
};

struct Turbulence {
  double gust_sigma = 1.0;      // steady-state std of gust velocity [m/s]
  double angle_sigma = 0.01;    // steady-state std of attitude perturbation [rad]
  double bandwidth = 1.0;       // natural frequency of the shaping filter [rad/s]
};

struct ScenarioConfig {
  int id = 1;
  std::uint64_t seed = 0;
  double t_end = 600.0;
  double t_gnss_loss = 100.0;

  GeodeticPosition initial_position{};   // altitude is overridden by alt.initial

  // Airspeed set-point: ramps from initial to final starting at t_start, at
  // tas_ramp_rate. Only `initial`, `final` and `t_start` are used.
  Transition tas{30.0, 30.0, 0.0, 0.0};
  double tas_ramp_rate = 0.2;           // [m/s^2]
  // Altitude target [m]; steps from initial to final at t_start.
  Transition alt{2000.0, 2000.0, 0.0, 0.0};

  double bearing_initial = 0.0;
  std::vector<BearingChange> bearing_changes;

  Transition wind_speed{0.0, 0.0, 0.0, 0.0};    // [m/s]
  Transition wind_bearing{0.0, 0.0, 0.0, 0.0};  // direction the air moves toward [rad]
  Transition delta_p{0.0, 0.0, 0.0, 0.0};       // pressure offset [Pa]
  Transition delta_t{0.0, 0.0, 0.0, 0.0};       // temperature offset [K]

  Turbulence turbulence{};
  double alpha_trim = 0.035;   // pitch minus path angle [rad]

  MagneticModel magnetic{};
  Vec3 b_dev = Vec3::Zero();   // model minus real field [nT]

  /// Throws ConfigError if an invariant is violated.
  void validate() const;
};

/// Stochastic parameter ranges used by sample_scenario. All values are
/// artifact choices exposed through the configuration file.
struct ScenarioRanges {
  double t_end_scenario1 = 600.0;
  double t_end_scenario2 = 500.0;
  double t_gnss_loss = 100.0;
  double duration_scale = 1.0;   // scales the GNSS-denied window

  double lat_min_deg = 35.0, lat_max_deg = 50.0;
  double lon_min_deg = -5.0, lon_max_deg = 10.0;
  double tas_min = 25.0, tas_max = 35.0;
  double alt_min = 1500.0, alt_max = 3000.0;
  double turn_min_deg = 30.0, turn_max_deg = 120.0;
  double wind_max = 10.0;
  double delta_p_max = 800.0;    // |dp| bound [Pa]
  double delta_t_max = 10.0;     // |dT| bound [K]
  double gust_min = 0.5, gust_max = 1.5;
  double angle_min_deg = 0.3, angle_max_deg = 1.0;
  double b_dev_sigma = 300.0;    // [nT]
  MagneticModel magnetic{};
};

/// Draws a scenario. Deterministic in (id, seed, ranges). Throws
/// std::invalid_argument for an unknown id.
ScenarioConfig sample_scenario(int id, std::uint64_t seed, const ScenarioRanges& ranges = {});

struct Environment {
  Vec3 wind = Vec3::Zero();   // NED [m/s]
  double wind_speed = 0.0;
  double wind_bearing = 0.0;
  double delta_p = 0.0;
  double delta_t = 0.0;
  Vec3 b_real = Vec3::Zero(); // NED [nT]
};

Environment environment_at(const ScenarioConfig& cfg, double t, const GeodeticPosition& p);

struct TruthSample {
  double t = 0.0;
  UnitQuaternion q_nb;
  GeodeticPosition pos;
  Vec3 v_ned = Vec3::Zero();
  Vec3 w_nb_b = Vec3::Zero();
  Vec3 f_ib_b = Vec3::Zero();
  Vec3 b_real = Vec3::Zero();
  Vec3 wind = Vec3::Zero();
  double delta_p = 0.0;
  double delta_t = 0.0;
};

/// Streaming generator on the 500 Hz truth grid.
class TruthGenerator {
 public:
  explicit TruthGenerator(ScenarioConfig cfg);

  const ScenarioConfig& config() const { return cfg_; }
  const TruthSample& current() const { return sample_; }
  std::int64_t step_index() const { return step_; }
  bool done() const;

  /// Advances one truth step (kTruthDt).
  void advance();

  static constexpr int kStateSize = 21;
  using State = Eigen::Matrix<double, kStateSize, 1>;

 private:
  struct Derivative {
    State ds;
    Vec3 v_ned;
    Vec3 a_ned;
    Vec3 w_nb_b;
    UnitQuaternion q_nb;
  };

  Derivative evaluate(double t, const State& s) const;
  void refresh_sample();
  Vec3 knot_input(const std::vector<Vec3>& knots, double t) const;

  ScenarioConfig cfg_;
  std::int64_t step_ = 0;
  std::int64_t last_step_ = 0;
  State state_ = State::Zero();
  std::vector<Vec3> gust_knots_;
  std::vector<Vec3> angle_knots_;
  TruthSample sample_;
};

struct TruthTrajectory {
  ScenarioConfig config;
  double dt = kTruthDt;
  std::vector<TruthSample> samples;
};

/// Runs the generator to t_end, keeping every `stride`-th truth sample.
TruthTrajectory generate_truth(const ScenarioConfig& cfg, int stride = 1);

}  // namespace vins
