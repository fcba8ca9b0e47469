#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vins/errors.hpp"
#include "vins/montecarlo.hpp"

using namespace vins;

namespace {

constexpr double kA = 6378137.0;
constexpr double kE2 = (1.0 / 298.257223563) * (2.0 - 1.0 / 298.257223563);
constexpr double kOmegaE = 7.292115e-5;

struct Rates {
  Vec3 geo_dot, w_en, w_ie;
};

// Strapdown kinematics written out per component.
Rates rates(const StateVec& x) {
  const double lat = x[ix::kPos + 1], h = x[ix::kPos + 2];
  const double s = std::sin(lat), w = 1.0 - kE2 * s * s;
  const double m = kA * (1.0 - kE2) / std::pow(w, 1.5) + h;
  const double n = kA / std::sqrt(w) + h;
  const double vn = x[ix::kVel], ve = x[ix::kVel + 1], vd = x[ix::kVel + 2];
  Rates r;
  r.geo_dot = {ve / (n * std::cos(lat)), vn / m, -vd};
  r.w_en = {ve / n, -vn / m, -ve * std::tan(lat) / n};
  r.w_ie = {kOmegaE * std::cos(lat), 0.0, -kOmegaE * s};
  return r;
}

Mat3 attitude_matrix(const FilterState& s) {
  return s.q.matrix() * oracle::series_exp(skew(s.x.segment<3>(ix::kDr)));
}

MagneticModel dipole() {
  MagneticModel m;
  m.kind = MagneticModelKind::Dipole;
  return m;
}

NoiseConfig no_process_noise() {
  NoiseConfig n;
  n.q_att = n.q_omega = n.q_pos_gnss = n.q_pos_vvs = n.q_vel_gnss = n.q_vel_vvs = 0.0;
  n.q_force = n.q_e_gyr = n.q_e_acc = n.q_e_mag = n.q_b_dev = 0.0;
  return n;
}

// Filter and frame source on a sampled scenario, started at its first frame.
struct Bench {
  ScenarioConfig sc = sample_scenario(2, 21);
  TruthGenerator gen{sc};
  SensorSuite sensors{SensorConfig{}, 5};
  NavFilter filter;
  std::int64_t k = 0;

  explicit Bench(const NoiseConfig& n = {}) : filter(make_filter(n)) {}

  NavFilter make_filter(const NoiseConfig& n) {
    Rng rng(6);
    const SensorFrame f = sensors.sample(gen.current(), 0, true);
    return NavFilter(initialize_filter(gen.current(), f, InitialUncertainty{}, rng), n, sc.magnetic);
  }

  SensorFrame next(bool gnss) {
    for (int i = 0; i < 5; ++i) {
      gen.advance();
    }
    return sensors.sample(gen.current(), ++k, gnss);
  }
};

PosVelObs vvs_like(const FilterState& s, double sigma_scale) {
  PosVelObs o;
  o.source = ObsSource::Vvs;
  o.pos = s.x.segment<3>(ix::kPos);
  o.vel = s.velocity();
  o.pos_sigma = Vec3(2e-8, 2e-8, 0.4) * sigma_scale;
  o.vel_sigma = Vec3::Constant(0.2) * sigma_scale;
  return o;
}

}  // namespace

TEST(FilterJacobians, MatchFiniteDifferences) {
  const oracle::SuiteResult r = oracle::filter_jacobian_suite(60, 2024);
  EXPECT_LT(r.max_rel, 1e-5) << r.worst;
  // Per state: 72 blocks of A, 24 of the 9-row H, 41 of the 15-row H.
  EXPECT_EQ(r.checks, 60 * (72 + 24 + 41));
}

TEST(BuildA, Structure) {
  Rng rng(1);
  const FilterState s = oracle::random_filter_state(rng);
  const StateMat a = build_A(s.q, s.x);
  EXPECT_EQ(a.block(ix::kDr, ix::kOmega, 3, 3), Mat3::Identity());
  EXPECT_TRUE(a.middleRows<3>(ix::kOmega).isZero(0.0));
  EXPECT_TRUE(a.middleRows<3>(ix::kForce).isZero(0.0));
  EXPECT_TRUE(a.bottomRows<12>().isZero(0.0));
  EXPECT_TRUE(a.middleCols<3>(ix::kPos).isZero(0.0));
  EXPECT_LT((a.block<3, 3>(ix::kVel, ix::kForce) - attitude_matrix(s)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildH, Structure) {
  Rng rng(2);
  const FilterState s = oracle::random_filter_state(rng);
  const ObsJac h = build_H(s.q, s.x, kObsFull, dipole());
  ASSERT_EQ(h.rows(), kObsFull);
  EXPECT_EQ(build_H(s.q, s.x, kObsImu, dipole()), h.topRows(kObsImu));
  EXPECT_EQ(h.block(0, ix::kOmega, 3, 3), Mat3::Identity());
  EXPECT_EQ(h.block(0, ix::kEGyr, 3, 3), Mat3::Identity());
  EXPECT_EQ(h.block(3, ix::kForce, 3, 3), Mat3::Identity());
  EXPECT_EQ(h.block(3, ix::kEAcc, 3, 3), Mat3::Identity());
  EXPECT_EQ(h.block(6, ix::kEMag, 3, 3), Mat3::Identity());
  EXPECT_EQ(h.block(9, ix::kPos, 3, 3), Mat3::Identity());
  EXPECT_EQ(h.block(12, ix::kVel, 3, 3), Mat3::Identity());
  EXPECT_LT((h.block<3, 3>(6, ix::kBDev) + attitude_matrix(s).transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(h.block(0, ix::kPos, 9, 3).isZero(0.0));
  EXPECT_THROW(build_H(s.q, s.x, 12, dipole()), std::invalid_argument);
  EXPECT_THROW(predicted_obs(s.q, s.x, 3, dipole()), std::invalid_argument);
}

TEST(Dynamics, MatchesComponentFormulas) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const FilterState s = oracle::random_filter_state(rng);
    const StateVec d = dynamics(s.q, s.x);
    const Rates r = rates(s.x);
    const Vec3 v = s.velocity();
    const Vec3 acc = attitude_matrix(s) * s.x.segment<3>(ix::kForce) - r.w_en.cross(v) + gravity(s.position()) -
                     2.0 * r.w_ie.cross(v);
    EXPECT_EQ(d.segment<3>(ix::kDr), s.x.segment<3>(ix::kOmega));
    EXPECT_LT((d.segment<3>(ix::kPos) - r.geo_dot).cwiseAbs().maxCoeff(), 1e-12 * r.geo_dot.norm());
    EXPECT_LT((d.segment<3>(ix::kVel) - acc).norm(), 1e-10);
    EXPECT_TRUE(d.segment<3>(ix::kOmega).isZero(0.0));
    EXPECT_TRUE(d.tail<15>().isZero(0.0));
  }
}

TEST(Dynamics, RestingStateIsEquilibrium) {
  FilterState s;
  s.q = UnitQuaternion::from_euler(0.3, 0.1, -0.2);
  s.x.segment<3>(ix::kPos) << 0.1, 0.8, 400.0;
  s.x.segment<3>(ix::kForce) = rotate_inv(s.q, -gravity(s.position()));
  EXPECT_LT(dynamics(s.q, s.x).norm(), 1e-14);
}

TEST(PredictedObs, MatchesComponentFormulas) {
  Rng rng(4);
  const MagneticModel mag = dipole();
  for (int i = 0; i < 50; ++i) {
    const FilterState s = oracle::random_filter_state(rng);
    const ObsVec y = predicted_obs(s.q, s.x, kObsFull, mag);
    const Rates r = rates(s.x);
    const Mat3 ra = attitude_matrix(s);
    const Vec3 gyro = s.x.segment<3>(ix::kOmega) + ra.transpose() * (r.w_ie + r.w_en) + s.x.segment<3>(ix::kEGyr);
    const Vec3 mag_b =
        ra.transpose() * (magnetic_model(mag, s.position()) - s.x.segment<3>(ix::kBDev)) + s.x.segment<3>(ix::kEMag);
    EXPECT_LT((y.segment<3>(0) - gyro).norm(), 1e-15);
    EXPECT_EQ(y.segment<3>(3), s.x.segment<3>(ix::kForce) + s.x.segment<3>(ix::kEAcc));
    EXPECT_LT((y.segment<3>(6) - mag_b).norm(), 1e-8);
    EXPECT_EQ(y.segment<3>(9), s.x.segment<3>(ix::kPos));
    EXPECT_EQ(y.segment<3>(12), s.velocity());
  }
}

TEST(TimeUpdate, ErrorTermCovarianceUntouchedWithoutNoise) {
  Rng rng(5);
  FilterState s = oracle::random_filter_state(rng);
  s.P.setZero();
  s.P.bottomRightCorner<12, 12>().diagonal().setConstant(3.0);
  s.P(16, 25) = s.P(25, 16) = 0.5;
  const FilterState out = time_update(s, 0.01, no_process_noise(), NoiseRegime::Gnss);
  EXPECT_LT((out.P - s.P).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(out.x.tail<12>(), s.x.tail<12>());
}

TEST(TimeUpdate, ZeroCovarianceGrowsByProcessNoise) {
  Rng rng(6);
  FilterState s = oracle::random_filter_state(rng);
  s.P.setZero();
  const NoiseConfig n;
  for (NoiseRegime regime : {NoiseRegime::Gnss, NoiseRegime::Vvs}) {
    const FilterState out = time_update(s, 0.01, n, regime);
    EXPECT_EQ(out.P.diagonal(), process_noise(n, regime, s.x) * 0.01);
    EXPECT_TRUE((out.P - StateMat(out.P.diagonal().asDiagonal())).isZero(0.0));
  }
  EXPECT_EQ(process_noise(n, NoiseRegime::Vvs, s.x)[ix::kVel], n.q_vel_vvs);
  EXPECT_EQ(process_noise(n, NoiseRegime::Gnss, s.x)[ix::kPos + 2], n.q_pos_gnss);
}

TEST(MeasurementUpdate, HugeNoiseLeavesStateUnchanged) {
  Rng rng(7);
  const FilterState s = oracle::random_filter_state(rng);
  NoiseConfig n;
  n.r_gyro = n.r_accel = n.r_mag = 1e12;
  ObservationBundle obs;
  obs.gyro = Vec3(0.1, 0.2, 0.3);
  obs.accel = Vec3(1, 2, 3);
  obs.mag = Vec3(20000, 0, 40000);
  obs.posvel = vvs_like(s, 1e20);
  obs.posvel->pos += Vec3(1e-5, 1e-5, 10);
  const FilterState out = measurement_update(s, obs, n, dipole());
  EXPECT_LT((out.x - s.x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((out.P - s.P).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MeasurementUpdate, VaguePositionRowsMatchInertialOnlyUpdate) {
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    const FilterState s = oracle::random_filter_state(rng);
    ObservationBundle imu;
    const ObsVec y = predicted_obs(s.q, s.x, kObsImu, dipole());
    imu.gyro = y.segment<3>(0) + oracle::random_vec(rng, 1e-3);
    imu.accel = y.segment<3>(3) + oracle::random_vec(rng, 0.05);
    imu.mag = y.segment<3>(6) + oracle::random_vec(rng, 100.0);
    ObservationBundle full = imu;
    full.posvel = vvs_like(s, 1e20);
    full.posvel->pos += Vec3(1e-6, -1e-6, 5.0);
    full.posvel->vel += Vec3(0.3, -0.2, 0.1);
    const FilterState a = measurement_update(s, imu, NoiseConfig{}, dipole());
    const FilterState b = measurement_update(s, full, NoiseConfig{}, dipole());
    EXPECT_LT(minus(a.attitude(), b.attitude()).norm(), 1e-12);
    StateVec d = a.x - b.x;
    d.segment<2>(ix::kPos) *= 6.4e6;  // radians to metres
    EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((a.P - b.P).cwiseAbs().maxCoeff(), 1e-9 * s.P.cwiseAbs().maxCoeff());
  }
}

TEST(MeasurementUpdate, PreciseFixPullsPositionOntoObservation) {
  Rng rng(8);
  FilterState s = oracle::random_filter_state(rng);
  s.P = StateMat::Identity();
  s.P.block<2, 2>(ix::kPos, ix::kPos) *= 1e-12;
  ObservationBundle obs;
  const ObsVec y = predicted_obs(s.q, s.x, kObsImu, dipole());
  obs.gyro = y.segment<3>(0);
  obs.accel = y.segment<3>(3);
  obs.mag = y.segment<3>(6);
  obs.posvel = vvs_like(s, 1e-6);
  obs.posvel->pos += Vec3(3e-7, -2e-7, 4.0);
  obs.posvel->vel += Vec3(0.5, -0.5, 0.1);
  const FilterState out = measurement_update(s, obs, NoiseConfig{}, dipole());
  EXPECT_LT((out.x.segment<2>(ix::kPos) - obs.posvel->pos.head<2>()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(out.x[ix::kPos + 2], obs.posvel->pos[2], 1e-5);
  EXPECT_LT((out.velocity() - obs.posvel->vel).norm(), 1e-5);
  EXPECT_LT(out.P.block(ix::kPos, ix::kPos, 6, 6).diagonal().maxCoeff(), 1e-11);
}

TEST(MeasurementUpdate, LongitudeResidualIsWrapped) {
  FilterState s;
  s.q = UnitQuaternion::identity();
  s.x.segment<3>(ix::kPos) << std::numbers::pi - 1e-7, 0.3, 100.0;
  s.P = StateMat::Identity() * 1e-4;
  ObservationBundle obs;
  const ObsVec y = predicted_obs(s.q, s.x, kObsImu, dipole());
  obs.gyro = y.segment<3>(0);
  obs.accel = y.segment<3>(3);
  obs.mag = y.segment<3>(6);
  obs.posvel = vvs_like(s, 1.0);
  obs.posvel->pos[0] = -std::numbers::pi + 1e-7;
  const FilterState out = measurement_update(s, obs, NoiseConfig{}, dipole());
  // A 2e-7 rad step east across the date line, not a 2 pi step west.
  EXPECT_LT(std::abs(wrap_pi(out.x[ix::kPos] - s.x[ix::kPos])), 2.1e-7);
}

TEST(MeasurementUpdate, MatchesPlainKalmanFilterOnLinearSubproblem) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EXPECT_LT(oracle::linear_subproblem_error(seed), 1e-10) << "seed " << seed;
  }
}

TEST(MeasurementUpdate, IndefiniteInnovationCovarianceThrows) {
  Rng rng(9);
  FilterState s = oracle::random_filter_state(rng);
  s.P = -1e8 * StateMat::Identity();
  ObservationBundle obs;
  EXPECT_THROW(measurement_update(s, obs, NoiseConfig{}, dipole()), NumericalFailure);
}

TEST(CheckCovariance, AcceptsPsdAndRejectsDefects) {
  StateMat p = StateMat::Identity();
  p(0, 26) = p(26, 0) = 0.5;
  EXPECT_NO_THROW(check_covariance(p, "test"));
  StateMat asym = p;
  asym(1, 2) = 0.1;
  EXPECT_THROW(check_covariance(asym, "test"), NumericalFailure);
  StateMat neg = p;
  neg(4, 4) = -1e-3;
  EXPECT_THROW(check_covariance(neg, "test"), NumericalFailure);
  StateMat indef = p;
  indef(5, 6) = indef(6, 5) = 1.5;
  EXPECT_THROW(check_covariance(indef, "test"), NumericalFailure);
  StateMat nan = p;
  nan(7, 7) = std::nan("");
  EXPECT_THROW(check_covariance(nan, "test"), NumericalFailure);
  EXPECT_NEAR(normalized_min_eigenvalue(indef), -0.5, 1e-12);
}

TEST(NavFilter, GnssEpochsUseSingleFullPass) {
  Bench b;
  for (int i = 0; i < 100; ++i) {
    b.filter.step(b.next(true));
  }
  const StepCounters& c = b.filter.counters();
  EXPECT_EQ(c.time_updates, 100);
  EXPECT_EQ(c.updates_15, 1);
  EXPECT_EQ(c.updates_9, 99);
  EXPECT_EQ(c.two_pass_epochs, 0);
  EXPECT_EQ(b.filter.regime(), NoiseRegime::Gnss);
  EXPECT_DOUBLE_EQ(b.filter.state().t, 1.0);
  EXPECT_TRUE(b.filter.state().x.segment<3>(ix::kDr).isZero(0.0));
}

TEST(NavFilter, ImageEpochsRunTwoPasses) {
  Bench b;
  int calls = 0;
  auto provider = [&](const FilterState& pre) -> std::optional<PosVelObs> {
    ++calls;
    return vvs_like(pre, 1.0);
  };
  for (int i = 0; i < 100; ++i) {
    b.filter.step(b.next(false), provider);
  }
  const StepCounters& c = b.filter.counters();
  EXPECT_EQ(calls, 10);
  EXPECT_EQ(c.updates_9, 100);
  EXPECT_EQ(c.updates_15, 10);
  EXPECT_EQ(c.two_pass_epochs, 10);
  EXPECT_EQ(b.filter.regime(), NoiseRegime::Vvs);
  b.filter.step(b.next(false), [](const FilterState&) { return std::optional<PosVelObs>{}; });
  EXPECT_EQ(b.filter.counters().two_pass_epochs, 10);
}

TEST(NavFilter, BootstrapEpochsWithoutObservationAreSinglePass) {
  Bench a, b;
  auto none = [](const FilterState&) { return std::optional<PosVelObs>{}; };
  for (int i = 0; i < 50; ++i) {
    const SensorFrame fa = a.next(false);
    b.next(false);
    a.filter.step(fa, none);
    b.filter.step(fa);
  }
  EXPECT_EQ(a.filter.counters().updates_15, 0);
  EXPECT_EQ(a.filter.state().x, b.filter.state().x);
  EXPECT_EQ(a.filter.state().P, b.filter.state().P);
}

TEST(NavFilter, RejectsFrameOutOfSequence) {
  Bench b;
  SensorFrame f = b.next(true);
  f.t += 0.01;
  EXPECT_THROW(b.filter.step(f), std::invalid_argument);
}

TEST(NavFilter, PerfectSensorsConvergeUnderGnss) {
  for (int id : {1, 2}) {
    for (std::uint64_t seed : {31u, 32u}) {
      const RunResult r = oracle::perfect_sensor_run(id, seed);
      ASSERT_TRUE(r.ok) << r.error;
      ASSERT_DOUBLE_EQ(r.t.back(), 30.0);
      EXPECT_LT(r.final_att(), 0.01) << "scenario " << id;
      EXPECT_LT(r.final_hor(), 0.1) << "scenario " << id;
    }
  }
}

TEST(NavFilter, CovarianceStaysSymmetricPsdThroughoutRun) {
  const oracle::PsdAudit a = oracle::psd_audit_run(2, 17, 0.3);
  ScenarioRanges ranges;
  ranges.duration_scale = 0.3;
  const ScenarioConfig sc = sample_scenario(2, 17, ranges);
  EXPECT_EQ(a.steps, std::llround(sc.t_end / kSensorDt));
  EXPECT_GE(a.min_eig, -1e-9);
  EXPECT_EQ(a.max_asym, 0.0);
  EXPECT_EQ(a.max_dr, 0.0);
}
