#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "vins/vvs.hpp"

using namespace vins;

namespace {

// Truth on a straight constant-velocity track, advanced in closed form.
struct StraightTrack {
  GeodeticPosition start{0.1, 0.8, 1200.0};
  Vec3 v{20.0, 15.0, -1.0};

  TruthSample at(double t) const {
    TruthSample s;
    s.t = t;
    s.v_ned = v;
    s.pos = offset_by(start, v * t);
    s.q_nb = UnitQuaternion::from_euler(std::atan2(v.y(), v.x()), 0.03, 0.0);
    return s;
  }
};

FilterState estimate_at(const TruthSample& t) {
  FilterState s;
  s.q = t.q_nb;
  s.x.segment<3>(ix::kPos) = t.pos.as_vector();
  s.x.segment<3>(ix::kVel) = t.v_ned;
  s.t = t.t;
  return s;
}

SurrogateVoConfig error_free() {
  SurrogateVoConfig c;
  c.drift = 0.0;
  c.white_pos = 0.0;
  c.att_pull = 1.0;
  c.att_noise = 0.0;
  return c;
}

}  // namespace

TEST(Vvs, TenInertialStepsPerImage) {
  EXPECT_EQ(kVvsDeltaT, 10);
  EXPECT_NEAR(kImageDt / kSensorDt, 10.0, 1e-12);
}

TEST(Vvs, GeodeticRate) {
  VisualPose a, b;
  a.t = 3.0;
  b.t = 3.1;
  a.pos = b.pos = Vec3(0.2, 0.7, 900.0);
  EXPECT_EQ(vvs_geodetic_rate(b, a), Vec3::Zero());
  b.pos[0] += 1e-5;
  EXPECT_NEAR(vvs_geodetic_rate(b, a)[0], 1e-4, 1e-15);
  b.pos = Vec3(0.2003, 0.6998, 912.5);
  const Vec3 r = vvs_geodetic_rate(b, a);
  EXPECT_NEAR(r[0], 0.0003 / 0.1, 1e-12);
  EXPECT_NEAR(r[1], -0.0002 / 0.1, 1e-12);
  EXPECT_NEAR(r[2], 125.0, 1e-9);
  b.t = 3.2;
  EXPECT_THROW(vvs_geodetic_rate(b, a), std::invalid_argument);
}

TEST(Vvs, GeodeticRateAcrossDateLine) {
  VisualPose a, b;
  a.t = 0.0;
  b.t = 0.1;
  a.pos = Vec3(std::numbers::pi - 1e-6, 0.1, 0.0);
  b.pos = Vec3(-std::numbers::pi + 1e-6, 0.1, 0.0);
  EXPECT_NEAR(vvs_geodetic_rate(b, a)[0], 2e-5, 1e-12);
}

TEST(Vvs, VelocityFromRateUsesPriorRadii) {
  const GeodeticPosition prior{0.1, 0.6, 2100.0};
  EXPECT_EQ(vvs_velocity(Vec3::Zero(), prior), Vec3::Zero());
  EXPECT_EQ(vvs_velocity(Vec3(0, 0, 3.0), prior)[2], -3.0);
  const Vec3 rate(2e-6, -3e-6, 0.5);
  const Vec3 v = vvs_velocity(rate, prior);
  const double e2 = 6.69437999014e-3, a = 6378137.0, s2 = std::pow(std::sin(0.6), 2);
  const double m = a * (1 - e2) / std::pow(1 - e2 * s2, 1.5), n = a / std::sqrt(1 - e2 * s2);
  EXPECT_NEAR(v[0], (m + 2100.0) * -3e-6, 1e-9);
  EXPECT_NEAR(v[1], (n + 2100.0) * std::cos(0.6) * 2e-6, 1e-9);
  EXPECT_EQ(v[2], -0.5);
}

TEST(Vvs, PositionIncrementsPriorAndTakesBaroAltitude) {
  const GeodeticPosition prior{0.1, 0.6, 2100.0};
  const Vec3 p0 = vvs_position(Vec3::Zero(), prior, 2095.0);
  EXPECT_EQ(p0[0], prior.lon);
  EXPECT_EQ(p0[1], prior.lat);
  EXPECT_EQ(p0[2], 2095.0);
  const Vec3 p1 = vvs_position(Vec3(1e-4, 0, 0), prior, 0.0);
  EXPECT_NEAR(p1[0] - prior.lon, 1e-5, 1e-16);
}

TEST(Vvs, PositionSigmaIsTenthOfGnss) {
  VvsConfig cfg;
  SensorConfig gnss;
  const GeodeticPosition at{0.0, 0.7, 1000.0};
  const Vec3 s = vvs_position_sigma(cfg, gnss, at);
  const Radii r = radii(at.lat);
  EXPECT_NEAR(s[0] * (r.N + at.alt) * std::cos(at.lat), 0.1 * gnss.gnss_pos_h, 1e-12);
  EXPECT_NEAR(s[1] * (r.M + at.alt), 0.1 * gnss.gnss_pos_h, 1e-12);
  EXPECT_DOUBLE_EQ(s[2], 0.1 * gnss.gnss_pos_v);
}

TEST(Vvs, ConstantStreamHitsVelocityFloor) {
  VelocityWindow w(20);
  Vec3 dev;
  for (int i = 0; i < 30; ++i) {
    dev = w.push(Vec3(12.0, -3.0, 0.5));
  }
  EXPECT_EQ(vvs_velocity_sigma(dev, 0.01), Vec3::Constant(0.01));
}

TEST(Vvs, OutlierDeviationAgainstWindowMean) {
  VelocityWindow w(20);
  const Vec3 base(12.0, -3.0, 0.5);
  for (int i = 0; i < 40; ++i) {
    w.push(base);
  }
  const Vec3 dev = w.push(base + Vec3(1.0, 0, 0));
  EXPECT_NEAR(dev[0], 19.0 / 20.0, 1e-12);
  EXPECT_NEAR(dev[1], 0.0, 1e-12);
  EXPECT_EQ(w.count(), 20u);
}

TEST(Vvs, WindowMeanEqualsBruteForce) {
  VelocityWindow w(20);
  Rng rng(4);
  std::vector<Vec3> all;
  for (int i = 0; i < 57; ++i) {
    const Vec3 v = rng.normal3(3.0);
    all.push_back(v);
    const Vec3 dev = w.push(v);
    Vec3 sum = Vec3::Zero();
    const int lo = std::max(0, i - 19);
    for (int k = lo; k <= i; ++k) {
      sum += all[k];
    }
    const Vec3 mean = sum / static_cast<double>(i - lo + 1);
    EXPECT_LT((w.mean() - mean).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((dev - (v - mean).cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Vvs, ShortWindowAtStart) {
  VelocityWindow w(20);
  EXPECT_EQ(w.push(Vec3(1, 2, 3)), Vec3::Zero());
  const Vec3 d = w.push(Vec3(3, 2, 3));
  EXPECT_NEAR(d[0], 1.0, 1e-15);
}

TEST(Surrogate, ErrorFreeIncrementsEqualTruth) {
  const StraightTrack track;
  SurrogateVo vo(error_free(), 1);
  VisualPose prev = vo.next(track.at(0.0), estimate_at(track.at(0.0)));
  for (int i = 1; i < 50; ++i) {
    const TruthSample t = track.at(0.1 * i);
    const TruthSample tp = track.at(0.1 * (i - 1));
    const VisualPose p = vo.next(t, estimate_at(t));
    EXPECT_NEAR(p.pos[0] - prev.pos[0], t.pos.lon - tp.pos.lon, 1e-15);
    EXPECT_NEAR(p.pos[1] - prev.pos[1], t.pos.lat - tp.pos.lat, 1e-15);
    EXPECT_LT(minus(p.q_nb, t.q_nb).norm(), 1e-12);
    prev = p;
  }
}

TEST(Surrogate, FirstFrameStartsAtEstimate) {
  const StraightTrack track;
  FilterState est = estimate_at(track.at(0.0));
  est.x[ix::kPos] += 1e-6;
  SurrogateVoConfig c;
  c.white_pos = 0.0;
  SurrogateVo quiet(c, 2);
  const VisualPose p = quiet.next(track.at(0.0), est);
  EXPECT_EQ(p.pos[0], est.x[ix::kPos]);
  EXPECT_EQ(p.pos[2], est.x[ix::kPos + 2]);
}

TEST(Surrogate, AttitudeStaysWithinClampOfEstimate) {
  const StraightTrack track;
  SurrogateVoConfig c;
  c.att_clamp = 0.004;
  SurrogateVo vo(c, 3);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const TruthSample t = track.at(0.1 * i);
    FilterState est = estimate_at(t);
    est.q = plus(t.q_nb, rng.normal3(0.02));
    const VisualPose p = vo.next(t, est);
    EXPECT_LE(minus(p.q_nb, est.q).norm(), c.att_clamp + 1e-12);
  }
}

TEST(Surrogate, ConstantBiasDriftScalesWithDistance) {
  // Straight leg of length L; final error magnitude averages d L.
  const StraightTrack track;
  SurrogateVoConfig c;
  c.drift = 0.004;
  c.drift_tau = 0.0;
  c.white_pos = 0.0;
  constexpr int runs = 2000, frames = 600;
  const double length = track.v.head<2>().norm() * frames * 0.1;
  std::vector<double> err(runs);
  for (int k = 0; k < runs; ++k) {
    SurrogateVo vo(c, 1000 + k);
    VisualPose p = vo.next(track.at(0.0), estimate_at(track.at(0.0)));
    for (int i = 1; i <= frames; ++i) {
      const TruthSample t = track.at(0.1 * i);
      p = vo.next(t, estimate_at(t));
    }
    err[k] = horizontal_distance(track.at(0.1 * frames).pos, GeodeticPosition::from_vector(p.pos));
  }
  double mean = 0, ss = 0;
  for (double e : err) {
    mean += e / runs;
  }
  for (double e : err) {
    ss += (e - mean) * (e - mean);
  }
  const double sem = std::sqrt(ss / (runs - 1) / runs);
  EXPECT_NEAR(mean, c.drift * length, 3 * sem);
}

TEST(Surrogate, WhiteErrorAmplifiedInVelocity) {
  // var(v) = 2 var(position error) / dt_img^2 for white position errors.
  const StraightTrack track;
  SurrogateVoConfig c = error_free();
  c.white_pos = 0.05;
  SurrogateVo vo(c, 5);
  VisualPose prev = vo.next(track.at(0.0), estimate_at(track.at(0.0)));
  constexpr int n = 20000;
  double sn = 0.0, se = 0.0;
  for (int i = 1; i <= n; ++i) {
    const TruthSample t = track.at(0.1 * i);
    const VisualPose p = vo.next(t, estimate_at(t));
    const TruthSample tp = track.at(0.1 * (i - 1));
    const Vec3 v = vvs_velocity(vvs_geodetic_rate(p, prev), tp.pos);
    const Vec3 v_true = vvs_velocity((t.pos.as_vector() - tp.pos.as_vector()) / 0.1, tp.pos);
    sn += std::pow(v[0] - v_true[0], 2);
    se += std::pow(v[1] - v_true[1], 2);
    prev = p;
  }
  const double expected = 2 * c.white_pos * c.white_pos / (0.1 * 0.1);
  EXPECT_NEAR(sn / n, expected, 0.05 * expected);
  EXPECT_NEAR(se / n, expected, 0.05 * expected);
}

TEST(Sensor, BootstrapThenObservationsFromPrior) {
  const StraightTrack track;
  VvsConfig cfg;
  cfg.vo = error_free();
  VirtualVisionSensor vvs(cfg, SensorConfig{}, 7);
  const TruthSample t0 = track.at(0.0);
  EXPECT_FALSE(vvs.observe(t0, estimate_at(t0), 1200.0).has_value());
  vvs.record_estimate(estimate_at(t0));
  for (int i = 1; i < 30; ++i) {
    const TruthSample t = track.at(0.1 * i);
    const auto o = vvs.observe(t, estimate_at(t), t.pos.alt);
    ASSERT_TRUE(o.has_value());
    // Zero visual error: horizontal position equals truth, velocity equals
    // the mean velocity over the image interval.
    EXPECT_LT(horizontal_distance(t.pos, GeodeticPosition::from_vector(o->pos)), 1e-6);
    EXPECT_EQ(o->pos[2], t.pos.alt);
    const Eigen::Vector2d mean_v = horizontal_offset(track.at(0.1 * (i - 1)).pos, t.pos) / kImageDt;
    EXPECT_LT((o->vel.head<2>() - mean_v).norm(), 1e-6);
    EXPECT_TRUE((o->vel_sigma.array() >= cfg.vel_floor).all());
    EXPECT_EQ(o->as_posvel().source, ObsSource::Vvs);
    vvs.record_estimate(estimate_at(t));
  }
}

TEST(BaroLatch, AveragesWindowAndFreezes) {
  BaroOffsetLatch latch(3);
  EXPECT_FALSE(latch.ready());
  latch.add(100.0, 90.0);
  latch.add(100.0, 94.0);
  latch.add(100.0, 92.0);
  latch.add(100.0, 96.0);
  EXPECT_DOUBLE_EQ(latch.offset(), (6.0 + 8.0 + 4.0) / 3.0);
  latch.freeze();
  latch.add(100.0, 0.0);
  EXPECT_DOUBLE_EQ(latch.corrected(50.0), 50.0 + 6.0);
}
