#include "vins/vvs.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vins/errors.hpp"

namespace vins {

void SurrogateVoConfig::validate() const {
  for (double v : {drift, drift_tau, white_pos, att_noise, att_clamp}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("visual odometry parameters must be finite and >= 0");
    }
  }
  if (!(att_pull >= 0.0 && att_pull <= 1.0)) {
    throw ConfigError("att_pull must lie in [0, 1]");
  }
}

void VvsConfig::validate() const {
  if (!(pos_sigma_factor > 0.0) || !(vel_floor > 0.0)) {
    throw ConfigError("VVS position factor and velocity floor must be > 0");
  }
  if (window < 1) {
    throw ConfigError("VVS window must hold at least one sample");
  }
  vo.validate();
}

PosVelObs VvsObservation::as_posvel() const {
  PosVelObs o;
  o.source = ObsSource::Vvs;
  o.pos = pos;
  o.vel = vel;
  o.pos_sigma = pos_sigma;
  o.vel_sigma = vel_sigma;
  return o;
}

SurrogateVo::SurrogateVo(const SurrogateVoConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(mix_seed(seed, 0x7150)) {
  cfg_.validate();
  // For a constant bias the error after a straight leg L is Rayleigh
  // distributed with mean sigma sqrt(pi/2) L.
  sigma_ = cfg_.drift / std::sqrt(std::numbers::pi / 2.0);
  bias_ = {rng_.normal(sigma_), rng_.normal(sigma_)};
}

VisualPose SurrogateVo::next(const TruthSample& truth, const FilterState& estimate) {
  const UnitQuaternion q_est = estimate.attitude();
  const GeodeticPosition est = estimate.position();

  if (!prev_truth_) {
    track_ = est.as_vector();
  } else {
    const double dt = truth.t - last_t_;
    if (cfg_.drift_tau > 0.0) {
      const double a = std::exp(-dt / cfg_.drift_tau);
      const double b = sigma_ * std::sqrt(1.0 - a * a);
      bias_ = a * bias_ + Eigen::Vector2d(rng_.normal(b), rng_.normal(b));
    }
    const Radii r = radii(truth.pos.lat);
    const double north_r = r.M + truth.pos.alt;
    const double east_r = (r.N + truth.pos.alt) * std::cos(truth.pos.lat);
    const double dlon = wrap_pi(truth.pos.lon - prev_truth_->pos.lon);
    const double dlat = truth.pos.lat - prev_truth_->pos.lat;
    const double dn = dlat * north_r, de = dlon * east_r;
    const double step = std::hypot(dn, de);
    const double err_n = bias_[0] * step;
    const double err_e = bias_[1] * step;
    track_[0] += dlon + err_e / east_r;
    track_[1] += dlat + err_n / north_r;
  }
  prev_truth_ = truth;
  last_t_ = truth.t;

  VisualPose pose;
  pose.t = truth.t;
  const Radii r = radii(track_[1]);
  const double white_n = rng_.normal(cfg_.white_pos);
  const double white_e = rng_.normal(cfg_.white_pos);
  pose.pos = {track_[0] + white_e / ((r.N + est.alt) * std::cos(track_[1])), track_[1] + white_n / (r.M + est.alt),
              est.alt};

  Vec3 d = cfg_.att_pull * minus(truth.q_nb, q_est) + rng_.normal3(cfg_.att_noise);
  const double n = d.norm();
  if (n > cfg_.att_clamp) {
    d *= cfg_.att_clamp / n;
  }
  pose.q_nb = plus(q_est, d);
  return pose;
}

Vec3 vvs_geodetic_rate(const VisualPose& cur, const VisualPose& prev) {
  if (std::abs(cur.t - prev.t - kImageDt) > 1e-9) {
    throw std::invalid_argument("vvs_geodetic_rate: poses are not consecutive image frames");
  }
  Vec3 d = cur.pos - prev.pos;
  d[0] = wrap_pi(d[0]);
  return d / kImageDt;
}

Vec3 vvs_velocity(const Vec3& rate, const GeodeticPosition& prior) {
  const Radii r = radii(prior.lat);
  return {(r.M + prior.alt) * rate[1], (r.N + prior.alt) * std::cos(prior.lat) * rate[0], -rate[2]};
}

Vec3 vvs_position(const Vec3& rate, const GeodeticPosition& prior, double baro_alt) {
  return {wrap_pi(prior.lon + rate[0] * kImageDt), prior.lat + rate[1] * kImageDt, baro_alt};
}

Vec3 VelocityWindow::push(const Vec3& v) {
  buf_.push_back(v);
  while (static_cast<int>(buf_.size()) > size_) {
    buf_.pop_front();
  }
  return (v - mean()).cwiseAbs();
}

Vec3 VelocityWindow::mean() const {
  Vec3 s = Vec3::Zero();
  for (const auto& v : buf_) {
    s += v;
  }
  return buf_.empty() ? s : Vec3(s / static_cast<double>(buf_.size()));
}

Vec3 vvs_position_sigma(const VvsConfig& cfg, const SensorConfig& gnss, const GeodeticPosition& at) {
  const Radii r = radii(at.lat);
  const double h = cfg.pos_sigma_factor * gnss.gnss_pos_h;
  return {h / ((r.N + at.alt) * std::cos(at.lat)), h / (r.M + at.alt), cfg.pos_sigma_factor * gnss.gnss_pos_v};
}

Vec3 vvs_velocity_sigma(const Vec3& deviation, double floor) {
  return deviation.cwiseMax(Vec3::Constant(floor));
}

void BaroOffsetLatch::add(double gnss_alt, double baro_alt) {
  if (frozen_) {
    return;
  }
  buf_.push_back(gnss_alt - baro_alt);
  while (static_cast<int>(buf_.size()) > window_) {
    buf_.pop_front();
  }
}

double BaroOffsetLatch::offset() const {
  if (buf_.empty()) {
    return 0.0;
  }
  double s = 0.0;
  for (double v : buf_) {
    s += v;
  }
  return s / static_cast<double>(buf_.size());
}

VirtualVisionSensor::VirtualVisionSensor(const VvsConfig& cfg, const SensorConfig& sensors, std::uint64_t seed)
    : cfg_(cfg), sensors_(sensors), vo_(cfg.vo, seed), window_(cfg.window) {
  cfg_.validate();
}

std::optional<VvsObservation> VirtualVisionSensor::observe(const TruthSample& truth, const FilterState& pre,
                                                           double baro_alt) {
  const VisualPose pose = vo_.next(truth, pre);
  if (!prev_pose_ || !prior_) {
    prev_pose_ = pose;
    return std::nullopt;
  }
  const Vec3 rate = vvs_geodetic_rate(pose, *prev_pose_);
  prev_pose_ = pose;

  VvsObservation o;
  o.vel = vvs_velocity(rate, *prior_);
  o.pos = vvs_position(rate, *prior_, baro_alt);
  o.pos_sigma = vvs_position_sigma(cfg_, sensors_, *prior_);
  o.vel_sigma = vvs_velocity_sigma(window_.push(o.vel), cfg_.vel_floor);
  return o;
}

}  // namespace vins
