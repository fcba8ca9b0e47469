#include "vins/ekf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "vins/errors.hpp"
#include "vins/truth_sim.hpp"

namespace vins {
namespace {

constexpr std::int64_t kFramesPerImage = 10;

GeodeticPosition position_of(const StateVec& x) {
  return GeodeticPosition::from_vector(x.segment<3>(ix::kPos));
}

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be finite and >= 0");
  }
}

}  // namespace

ObservationBundle ObservationBundle::from_frame(const SensorFrame& f) {
  ObservationBundle o;
  o.gyro = f.gyro;
  o.accel = f.accel;
  o.mag = f.mag;
  o.posvel = f.posvel;
  return o;
}

void NoiseConfig::validate() const {
  require_nonnegative(q_att, "q_att");
  require_nonnegative(q_omega, "q_omega");
  require_nonnegative(q_pos_gnss, "q_pos_gnss");
  require_nonnegative(q_pos_vvs, "q_pos_vvs");
  require_nonnegative(q_vel_gnss, "q_vel_gnss");
  require_nonnegative(q_vel_vvs, "q_vel_vvs");
  require_nonnegative(q_force, "q_force");
  require_nonnegative(q_e_gyr, "q_e_gyr");
  require_nonnegative(q_e_acc, "q_e_acc");
  require_nonnegative(q_e_mag, "q_e_mag");
  require_nonnegative(q_b_dev, "q_b_dev");
  require_nonnegative(r_gyro, "r_gyro");
  require_nonnegative(r_accel, "r_accel");
  require_nonnegative(r_mag, "r_mag");
}

void InitialUncertainty::validate() const {
  for (double v : {att, omega, pos_h, pos_v, vel, force, e_gyr, e_acc, e_mag, b_dev}) {
    require_nonnegative(v, "initial uncertainty");
  }
}

StateVec process_noise(const NoiseConfig& n, NoiseRegime regime, const StateVec& x) {
  const GeodeticPosition p = position_of(x);
  const Radii r = radii(p.lat);
  const double q_pos = regime == NoiseRegime::Gnss ? n.q_pos_gnss : n.q_pos_vvs;
  const double q_vel = regime == NoiseRegime::Gnss ? n.q_vel_gnss : n.q_vel_vvs;
  const double east = (r.N + p.alt) * std::cos(p.lat);
  const double north = r.M + p.alt;

  StateVec q;
  q.segment<3>(ix::kDr).setConstant(n.q_att);
  q.segment<3>(ix::kOmega).setConstant(n.q_omega);
  q.segment<3>(ix::kPos) << q_pos / (east * east), q_pos / (north * north), q_pos;
  q.segment<3>(ix::kVel).setConstant(q_vel);
  q.segment<3>(ix::kForce).setConstant(n.q_force);
  q.segment<3>(ix::kEGyr).setConstant(n.q_e_gyr);
  q.segment<3>(ix::kEAcc).setConstant(n.q_e_acc);
  q.segment<3>(ix::kEMag).setConstant(n.q_e_mag);
  q.segment<3>(ix::kBDev).setConstant(n.q_b_dev);
  return q;
}

StateVec dynamics(const UnitQuaternion& q, const StateVec& x) {
  const GeodeticPosition p = position_of(x);
  const Vec3 v = x.segment<3>(ix::kVel);
  const UnitQuaternion qa = plus(q, x.segment<3>(ix::kDr));

  StateVec d = StateVec::Zero();
  d.segment<3>(ix::kDr) = x.segment<3>(ix::kOmega);
  d.segment<3>(ix::kPos) = geodetic_dot(p, v);
  d.segment<3>(ix::kVel) = rotate(qa, x.segment<3>(ix::kForce)) - transport_rate(p, v).cross(v) + gravity(p) -
                           coriolis(p, v);
  return d;
}

StateMat build_A(const UnitQuaternion& q, const StateVec& x) {
  const GeodeticPosition p = position_of(x);
  const Vec3 dr = x.segment<3>(ix::kDr);
  const Vec3 v = x.segment<3>(ix::kVel);
  const UnitQuaternion qa = plus(q, dr);

  StateMat a = StateMat::Zero();
  a.block<3, 3>(ix::kDr, ix::kOmega).setIdentity();
  a.block<3, 3>(ix::kPos, ix::kVel) = jac_geodetic_dot_wrt_vN(p);
  a.block<3, 3>(ix::kVel, ix::kDr) = jac_rotate_wrt_R(qa, x.segment<3>(ix::kForce)) * jac_plus_wrt_dr(dr);
  a.block<3, 3>(ix::kVel, ix::kVel) =
      -skew(transport_rate(p, v)) + skew(v) * jac_transport_rate_wrt_vN(p) - jac_coriolis_wrt_vN(p.lat);
  a.block<3, 3>(ix::kVel, ix::kForce) = jac_rotate_wrt_v(qa);
  return a;
}

ObsVec predicted_obs(const UnitQuaternion& q, const StateVec& x, int rows, const MagneticModel& mag) {
  if (rows != kObsImu && rows != kObsFull) {
    throw std::invalid_argument("predicted_obs: rows must be 9 or 15");
  }
  const GeodeticPosition p = position_of(x);
  const Vec3 v = x.segment<3>(ix::kVel);
  const UnitQuaternion qa = plus(q, x.segment<3>(ix::kDr));
  const Vec3 w_in = earth_rate(p.lat) + transport_rate(p, v);

  ObsVec y(rows);
  y.segment<3>(0) = x.segment<3>(ix::kOmega) + inv_adjoint(qa, w_in) + x.segment<3>(ix::kEGyr);
  y.segment<3>(3) = x.segment<3>(ix::kForce) + x.segment<3>(ix::kEAcc);
  y.segment<3>(6) = rotate_inv(qa, magnetic_model(mag, p) - x.segment<3>(ix::kBDev)) + x.segment<3>(ix::kEMag);
  if (rows == kObsFull) {
    y.segment<3>(9) = x.segment<3>(ix::kPos);
    y.segment<3>(12) = v;
  }
  return y;
}

ObsJac build_H(const UnitQuaternion& q, const StateVec& x, int rows, const MagneticModel& mag) {
  if (rows != kObsImu && rows != kObsFull) {
    throw std::invalid_argument("build_H: rows must be 9 or 15");
  }
  const GeodeticPosition p = position_of(x);
  const Vec3 dr = x.segment<3>(ix::kDr);
  const Vec3 v = x.segment<3>(ix::kVel);
  const UnitQuaternion qa = plus(q, dr);
  const Mat3 jr = jac_plus_wrt_dr(dr);
  const Vec3 w_in = earth_rate(p.lat) + transport_rate(p, v);
  const Vec3 b_nav = magnetic_model(mag, p) - x.segment<3>(ix::kBDev);

  ObsJac h = ObsJac::Zero(rows, kStateDim);
  h.block<3, 3>(0, ix::kDr) = jac_inv_adjoint_wrt_R(qa, w_in) * jr;
  h.block<3, 3>(0, ix::kOmega).setIdentity();
  h.block<3, 3>(0, ix::kVel) = jac_inv_adjoint_wrt_w(qa) * jac_transport_rate_wrt_vN(p);
  h.block<3, 3>(0, ix::kEGyr).setIdentity();

  h.block<3, 3>(3, ix::kForce).setIdentity();
  h.block<3, 3>(3, ix::kEAcc).setIdentity();

  h.block<3, 3>(6, ix::kDr) = jac_rotate_inv_wrt_R(qa, b_nav) * jr;
  h.block<3, 3>(6, ix::kEMag).setIdentity();
  h.block<3, 3>(6, ix::kBDev) = -jac_rotate_inv_wrt_v(qa);

  if (rows == kObsFull) {
    h.block<3, 3>(9, ix::kPos).setIdentity();
    h.block<3, 3>(12, ix::kVel).setIdentity();
  }
  return h;
}

ObsMat measurement_noise(const NoiseConfig& n, const ObservationBundle& obs) {
  const int m = obs.rows();
  ObsVec d(m);
  d.segment<3>(0).setConstant(n.r_gyro * n.r_gyro);
  d.segment<3>(3).setConstant(n.r_accel * n.r_accel);
  d.segment<3>(6).setConstant(n.r_mag * n.r_mag);
  if (obs.posvel) {
    d.segment<3>(9) = obs.posvel->pos_sigma.cwiseAbs2();
    d.segment<3>(12) = obs.posvel->vel_sigma.cwiseAbs2();
  }
  return d.asDiagonal();
}

void symmetrize(StateMat& P) {
  P = 0.5 * (P + P.transpose()).eval();
}

double normalized_min_eigenvalue(const StateMat& P) {
  StateVec s = P.diagonal().cwiseAbs().cwiseSqrt();
  for (int i = 0; i < kStateDim; ++i) {
    s[i] = s[i] > 0.0 ? 1.0 / s[i] : 1.0;
  }
  const StateMat c = s.asDiagonal() * P * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<StateMat> es(c, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_covariance(const StateMat& P, const char* where, double tol) {
  if (!P.allFinite()) {
    throw NumericalFailure(std::string(where) + ": covariance has non-finite entries");
  }
  const double asym = (P - P.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << where << ": covariance asymmetry " << asym;
    throw NumericalFailure(os.str());
  }
  StateVec s = P.diagonal();
  for (int i = 0; i < kStateDim; ++i) {
    if (s[i] < 0.0) {
      std::ostringstream os;
      os << where << ": negative variance " << s[i] << " at index " << i;
      throw NumericalFailure(os.str());
    }
    s[i] = s[i] > 0.0 ? 1.0 / std::sqrt(s[i]) : 1.0;
  }
  const StateMat c = s.asDiagonal() * P * s.asDiagonal() + tol * StateMat::Identity();
  Eigen::LLT<StateMat> llt(c);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << where << ": covariance not positive semi-definite, normalized min eigenvalue "
       << normalized_min_eigenvalue(P);
    throw NumericalFailure(os.str());
  }
}

FilterState time_update(const FilterState& s, double dt, const NoiseConfig& n, NoiseRegime regime) {
  FilterState out = s;
  const StateVec k1 = dynamics(s.q, s.x);
  const StateVec k2 = dynamics(s.q, s.x + 0.5 * dt * k1);
  const StateVec k3 = dynamics(s.q, s.x + 0.5 * dt * k2);
  const StateVec k4 = dynamics(s.q, s.x + dt * k3);
  out.x = s.x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.x[ix::kPos] = wrap_pi(out.x[ix::kPos]);

  const StateMat a = build_A(s.q, s.x);
  const StateMat phi = StateMat::Identity() + a * dt + (a * a) * (0.5 * dt * dt);
  out.P = phi * s.P * phi.transpose();
  out.P.diagonal() += process_noise(n, regime, s.x) * dt;
  symmetrize(out.P);
  out.t = s.t + dt;
  return out;
}

FilterState measurement_update(const FilterState& s, const ObservationBundle& obs, const NoiseConfig& n,
                               const MagneticModel& mag) {
  const int m = obs.rows();
  ObsVec y(m);
  y.segment<3>(0) = obs.gyro;
  y.segment<3>(3) = obs.accel;
  y.segment<3>(6) = obs.mag;
  if (obs.posvel) {
    y.segment<3>(9) = obs.posvel->pos;
    y.segment<3>(12) = obs.posvel->vel;
  }
  ObsVec z = y - predicted_obs(s.q, s.x, m, mag);
  if (obs.posvel) {
    z[9] = wrap_pi(z[9]);
  }
  const ObsJac h = build_H(s.q, s.x, m, mag);
  const ObsMat r = measurement_noise(n, obs);
  const Eigen::Matrix<double, Eigen::Dynamic, kStateDim, 0, kObsFull, kStateDim> hp = h * s.P;
  const ObsMat sm = hp * h.transpose() + r;
  Eigen::LLT<ObsMat> llt(sm);
  if (llt.info() != Eigen::Success || !sm.allFinite()) {
    throw NumericalFailure("measurement_update: innovation covariance is not positive definite");
  }
  const Eigen::Matrix<double, kStateDim, Eigen::Dynamic, 0, kStateDim, kObsFull> k = llt.solve(hp).transpose();

  FilterState out = s;
  out.x += k * z;
  out.x[ix::kPos] = wrap_pi(out.x[ix::kPos]);
  const StateMat ikh = StateMat::Identity() - k * h;
  out.P = ikh * s.P * ikh.transpose() + k * r * k.transpose();
  symmetrize(out.P);
  return out;
}

FilterState reset(const FilterState& s) {
  const Vec3 dr = s.x.segment<3>(ix::kDr);
  FilterState out = s;
  out.x.segment<3>(ix::kDr).setZero();
  if (dr.isZero(0.0)) {
    return out;
  }
  out.q = plus(s.q, dr);
  const Mat3 d = jac_plus_wrt_R(dr);
  // D = diag(d, I): only the attitude rows and columns change.
  out.P.topRows<3>() = d * s.P.topRows<3>();
  out.P.leftCols<3>() = out.P.leftCols<3>() * d.transpose();
  symmetrize(out.P);
  return out;
}

FilterState initialize_filter(const TruthSample& truth, const SensorFrame& first, const InitialUncertainty& u,
                              Rng& rng) {
  u.validate();
  FilterState s;
  s.t = first.t;
  s.q = plus(truth.q_nb, rng.normal3(u.att));
  const Radii r = radii(truth.pos.lat);
  const double east = (r.N + truth.pos.alt) * std::cos(truth.pos.lat);
  const double north = r.M + truth.pos.alt;
  const Vec3 pos_sigma{u.pos_h / east, u.pos_h / north, u.pos_v};
  s.x.segment<3>(ix::kPos) = truth.pos.as_vector() + rng.normal3(pos_sigma);
  s.x.segment<3>(ix::kVel) = truth.v_ned + rng.normal3(u.vel);
  const GeodeticPosition p = position_of(s.x);
  const Vec3 w_in = earth_rate(p.lat) + transport_rate(p, s.x.segment<3>(ix::kVel));
  s.x.segment<3>(ix::kOmega) = first.gyro - inv_adjoint(s.q, w_in);
  s.x.segment<3>(ix::kForce) = first.accel;

  StateVec sd;
  sd.segment<3>(ix::kDr).setConstant(u.att);
  sd.segment<3>(ix::kOmega).setConstant(u.omega);
  sd.segment<3>(ix::kPos) = pos_sigma;
  sd.segment<3>(ix::kVel).setConstant(u.vel);
  sd.segment<3>(ix::kForce).setConstant(u.force);
  sd.segment<3>(ix::kEGyr).setConstant(u.e_gyr);
  sd.segment<3>(ix::kEAcc).setConstant(u.e_acc);
  sd.segment<3>(ix::kEMag).setConstant(u.e_mag);
  sd.segment<3>(ix::kBDev).setConstant(u.b_dev);
  s.P = sd.cwiseAbs2().asDiagonal();
  return s;
}

NavFilter::NavFilter(FilterState init, NoiseConfig noise, MagneticModel mag, bool check_psd)
    : state_(std::move(init)), noise_(noise), mag_(mag), check_psd_(check_psd) {
  noise_.validate();
}

void NavFilter::pass(const ObservationBundle& obs) {
  state_ = reset(measurement_update(state_, obs, noise_, mag_));
  if (obs.posvel) {
    ++counters_.updates_15;
  } else {
    ++counters_.updates_9;
  }
  if (check_psd_) {
    check_covariance(state_.P, "measurement update");
  }
}

void NavFilter::step(const SensorFrame& frame, const VvsProvider& vvs) {
  if (std::abs(frame.t - state_.t - kSensorDt) > 1e-9) {
    std::ostringstream os;
    os << "NavFilter::step: frame time " << frame.t << " does not follow state time " << state_.t;
    throw std::invalid_argument(os.str());
  }
  state_ = time_update(state_, kSensorDt, noise_, regime_);
  state_.t = frame.t;
  ++counters_.time_updates;
  if (check_psd_) {
    check_covariance(state_.P, "time update");
  }

  ObservationBundle obs = ObservationBundle::from_frame(frame);
  if (obs.posvel) {
    regime_ = obs.posvel->source == ObsSource::Gnss ? NoiseRegime::Gnss : NoiseRegime::Vvs;
    pass(obs);
    return;
  }
  pass(obs);
  if (vvs && frame.index % kFramesPerImage == 0) {
    if (auto o = vvs(state_)) {
      ++counters_.two_pass_epochs;
      regime_ = o->source == ObsSource::Gnss ? NoiseRegime::Gnss : NoiseRegime::Vvs;
      obs.posvel = *o;
      pass(obs);
    }
  }
}

}  // namespace vins
