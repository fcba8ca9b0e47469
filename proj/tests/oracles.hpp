#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary: random inputs, finite differences, brute-force series,
// a textbook Kalman filter and a standard-atmosphere inversion.

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "vins/ekf.hpp"
#include "vins/lie_so3.hpp"
#include "vins/montecarlo.hpp"
#include "vins/random.hpp"

namespace vins::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Vec3 random_vec(Rng& rng, double scale);
/// Uniform-ish rotation: exp of a vector with norm up to max_angle.
UnitQuaternion random_quat(Rng& rng, double max_angle = 3.0);

/// exp(A) by a truncated power series.
Mat3 series_exp(const Mat3& a, int terms = 30);

/// Central difference of f around x0, one step per coordinate.
MatrixXd central_diff(const std::function<VectorXd(const VectorXd&)>& f, const VectorXd& x0, const VectorXd& step);

/// max |a - b| / max(max |a|, floor).
double rel_error(const MatrixXd& analytic, const MatrixXd& numeric, double floor = 1e-300);

struct SuiteResult {
  double max_rel = 0.0;
  int checks = 0;
  std::string worst;
};

/// Every SO(3) Jacobian against central differences of its parent function.
SuiteResult lie_jacobian_suite(int n, std::uint64_t seed);
/// Velocity Jacobians of geodetic_dot, transport_rate and coriolis.
SuiteResult geodesy_jacobian_suite(int n, std::uint64_t seed);
/// build_A against dynamics and build_H against predicted_obs, block by
/// block. Geodetic-coordinate columns are skipped except where the analytic
/// matrix keeps them (position rows of H).
SuiteResult filter_jacobian_suite(int n, std::uint64_t seed);

/// Random filter state away from the poles with all blocks populated.
FilterState random_filter_state(Rng& rng);

struct ResetOracleResult {
  double max_z = 0.0;     // worst |sample - predicted| / sampling std over the 3x3 block
  int samples = 0;
};

/// Draws attitudes around (q, P_att), composes them with the carried
/// perturbation and compares the covariance of their errors about the reset
/// attitude with the transported covariance.
ResetOracleResult reset_covariance_oracle(int samples, std::uint64_t seed);

/// Position/velocity subproblem with every other block frozen, run through
/// the filter and through a plain 6-state Kalman filter. Returns the largest
/// normalized difference in covariance and update increments.
double linear_subproblem_error(std::uint64_t seed, int cycles = 20);

/// Pressure altitude read by an altimeter calibrated to the standard
/// atmosphere when the actual pressure at geometric altitude h is the
/// standard pressure plus dp. Exact inversion, no linearization.
double isa_pressure_altitude(double h, double dp);

struct PsdAudit {
  std::int64_t steps = 0;
  double min_eig = 0.0;        // smallest normalized eigenvalue seen
  double max_asym = 0.0;       // largest |P - P^T|
  double max_dr = 0.0;         // largest attitude perturbation left after a step
};

/// Straight, level, calm flight with error-free sensors and a filter told as
/// much: error terms pinned at zero, measurement noise near zero. GNSS is
/// available throughout and the run lasts 30 s.
RunResult perfect_sensor_run(int scenario, std::uint64_t seed);

/// Runs truth, sensors and filter (with the visual sensor after GNSS loss)
/// step by step and inspects the covariance after every step.
PsdAudit psd_audit_run(int scenario, std::uint64_t seed, double duration_scale);

}  // namespace vins::oracle
