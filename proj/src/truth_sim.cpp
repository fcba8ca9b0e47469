#include "vins/truth_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vins/errors.hpp"
#include "vins/random.hpp"

namespace vins {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Guidance and response parameters of the kinematic aircraft.
constexpr double kMaxBank = 10.0 * kDeg;
constexpr double kMaxPath = 2.0 * kDeg;
constexpr double kHeadingGain = 1.0;     // bank command per heading error
constexpr double kAltitudeGain = 0.002;  // path angle command per metre
constexpr double kBankOmega = 1.5;       // [rad/s]
constexpr double kPathOmega = 0.8;       // [rad/s]
constexpr double kTasTau = 5.0;          // [s]
constexpr double kVerticalGustScale = 0.5;

constexpr double kKnotDt = 0.1;

double round_to_knot(double t) {
  return std::round(t / kKnotDt) * kKnotDt;
}

}  // namespace

double Transition::at(double t) const {
  if (t <= t_start || t_end <= t_start) {
    return t <= t_start ? initial : final;
  }
  if (t >= t_end) {
    return final;
  }
  return initial + (final - initial) * (t - t_start) / (t_end - t_start);
}

double Transition::rate(double t) const {
  if (t_end <= t_start || t < t_start || t >= t_end) {
    return 0.0;
  }
  return (final - initial) / (t_end - t_start);
}

void ScenarioConfig::validate() const {
  if (id != 1 && id != 2) {
    throw ConfigError("scenario id must be 1 or 2");
  }
  if (!(t_gnss_loss < t_end) || t_gnss_loss < 0.0) {
    throw ConfigError("t_gnss_loss must lie in [0, t_end)");
  }
  auto inside = [&](const Transition& tr, const char* name) {
    if (tr.t_start < 0.0 || tr.t_end > t_end || tr.t_end < tr.t_start) {
      throw ConfigError(std::string(name) + " transition window outside [0, t_end]");
    }
  };
  inside(wind_speed, "wind speed");
  inside(wind_bearing, "wind bearing");
  inside(delta_p, "pressure offset");
  inside(delta_t, "temperature offset");
  if (id == 2) {
    if (wind_speed.initial != wind_speed.final || wind_bearing.initial != wind_bearing.final ||
        delta_p.initial != delta_p.final || delta_t.initial != delta_t.final) {
      throw ConfigError("scenario 2 requires constant wind and atmosphere");
    }
  }
  for (const auto& bc : bearing_changes) {
    if (bc.t < 0.0 || bc.t > t_end) {
      throw ConfigError("bearing change outside [0, t_end]");
    }
  }
  if (tas.initial <= 5.0 || tas.final <= 5.0) {
    throw ConfigError("airspeed must exceed 5 m/s");
  }
  if (turbulence.gust_sigma < 0.0 || turbulence.angle_sigma < 0.0 || turbulence.bandwidth <= 0.0) {
    throw ConfigError("invalid turbulence parameters");
  }
  normalized(initial_position);
  require_off_pole(initial_position.lat);
}

ScenarioConfig sample_scenario(int id, std::uint64_t seed, const ScenarioRanges& r) {
  if (id != 1 && id != 2) {
    throw std::invalid_argument("sample_scenario: unknown scenario id " + std::to_string(id));
  }
  Rng rng(mix_seed(seed, 0x5C3A));
  ScenarioConfig c;
  c.id = id;
  c.seed = seed;
  c.t_gnss_loss = r.t_gnss_loss;
  const double nominal_end = id == 1 ? r.t_end_scenario1 : r.t_end_scenario2;
  c.t_end = r.t_gnss_loss + r.duration_scale * (nominal_end - r.t_gnss_loss);
  const double t0 = c.t_gnss_loss;
  const double window = c.t_end - t0;

  c.initial_position.lat = rng.uniform(r.lat_min_deg, r.lat_max_deg) * kDeg;
  c.initial_position.lon = rng.uniform(r.lon_min_deg, r.lon_max_deg) * kDeg;
  const double tas0 = rng.uniform(r.tas_min, r.tas_max);
  const double alt0 = rng.uniform(r.alt_min, r.alt_max);
  c.initial_position.alt = alt0;
  c.bearing_initial = rng.uniform(-std::numbers::pi, std::numbers::pi);

  auto turn = [&]() {
    const double mag = rng.uniform(r.turn_min_deg, r.turn_max_deg) * kDeg;
    return rng.uniform(0.0, 1.0) < 0.5 ? -mag : mag;
  };

  c.turbulence.gust_sigma = rng.uniform(r.gust_min, r.gust_max);
  c.turbulence.angle_sigma = rng.uniform(r.angle_min_deg, r.angle_max_deg) * kDeg;
  c.magnetic = r.magnetic;
  c.b_dev = rng.normal3(r.b_dev_sigma);

  const double wind0 = rng.uniform(0.0, r.wind_max);
  const double wind_dir0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double dp0 = rng.uniform(-r.delta_p_max, r.delta_p_max);
  const double dt0 = rng.uniform(-r.delta_t_max, r.delta_t_max);

  if (id == 1) {
    // Course change towards the recovery point, then altitude and airspeed
    // adjustments, each at a stochastic time inside the GNSS-denied window.
    c.bearing_changes.push_back(
        {round_to_knot(t0 + rng.uniform(0.02, 0.2) * window), c.bearing_initial + turn()});
    c.alt = {alt0, rng.uniform(r.alt_min, r.alt_max), round_to_knot(t0 + rng.uniform(0.1, 0.5) * window), 0.0};
    c.alt.t_end = c.alt.t_start;
    c.tas = {tas0, rng.uniform(r.tas_min, r.tas_max), round_to_knot(t0 + rng.uniform(0.1, 0.6) * window), 0.0};
    c.tas.t_end = c.tas.t_start;

    auto window_in = [&](double lo, double hi) {
      const double start = round_to_knot(t0 + rng.uniform(lo, hi) * window);
      const double len = round_to_knot(rng.uniform(0.1, 0.3) * window);
      return std::pair{start, std::min(start + std::max(len, kKnotDt), c.t_end)};
    };
    const auto [ws, we] = window_in(0.05, 0.6);
    c.wind_speed = {wind0, rng.uniform(0.0, r.wind_max), ws, we};
    c.wind_bearing = {wind_dir0, wind_dir0 + rng.uniform(-1.0, 1.0), ws, we};
    const auto [ps, pe] = window_in(0.05, 0.6);
    c.delta_p = {dp0, rng.uniform(-r.delta_p_max, r.delta_p_max), ps, pe};
    const auto [ts, te] = window_in(0.05, 0.6);
    c.delta_t = {dt0, rng.uniform(-r.delta_t_max, r.delta_t_max), ts, te};
  } else {
    c.tas = {tas0, tas0, 0.0, 0.0};
    c.alt = {alt0, alt0, 0.0, 0.0};
    // Eight bearing changes, one per slot of the GNSS-denied window.
    const double slot = window / 8.0;
    double bearing = c.bearing_initial;
    for (int k = 0; k < 8; ++k) {
      bearing += turn();
      c.bearing_changes.push_back({round_to_knot(t0 + slot * (k + rng.uniform(0.05, 0.3))), bearing});
    }
    c.wind_speed = {wind0, wind0, 0.0, 0.0};
    c.wind_bearing = {wind_dir0, wind_dir0, 0.0, 0.0};
    c.delta_p = {dp0, dp0, 0.0, 0.0};
    c.delta_t = {dt0, dt0, 0.0, 0.0};
  }
  c.validate();
  return c;
}

Environment environment_at(const ScenarioConfig& cfg, double t, const GeodeticPosition& p) {
  Environment e;
  e.wind_speed = cfg.wind_speed.at(t);
  e.wind_bearing = cfg.wind_bearing.at(t);
  e.wind = {e.wind_speed * std::cos(e.wind_bearing), e.wind_speed * std::sin(e.wind_bearing), 0.0};
  e.delta_p = cfg.delta_p.at(t);
  e.delta_t = cfg.delta_t.at(t);
  e.b_real = magnetic_model(cfg.magnetic, p) - cfg.b_dev;
  return e;
}

TruthGenerator::TruthGenerator(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  last_step_ = static_cast<std::int64_t>(std::llround(cfg_.t_end / kTruthDt));

  // Band-limited turbulence: unit-variance knots every kKnotDt, linearly
  // interpolated and shaped by a critically damped second-order filter.
  // Knot variance 4 / (bandwidth * kKnotDt) gives unit output variance.
  const std::size_t n_knots = static_cast<std::size_t>(cfg_.t_end / kKnotDt) + 3;
  const double knot_scale = std::sqrt(4.0 / (cfg_.turbulence.bandwidth * kKnotDt));
  Rng gust_rng(mix_seed(cfg_.seed, 0x6057));
  Rng angle_rng(mix_seed(cfg_.seed, 0xA461));
  gust_knots_.resize(n_knots);
  angle_knots_.resize(n_knots);
  const Vec3 gust_sigma = cfg_.turbulence.gust_sigma * knot_scale * Vec3(1.0, 1.0, kVerticalGustScale);
  for (std::size_t k = 0; k < n_knots; ++k) {
    gust_knots_[k] = gust_rng.normal3(gust_sigma);
    angle_knots_[k] = angle_rng.normal3(cfg_.turbulence.angle_sigma * knot_scale);
  }

  const auto& p = cfg_.initial_position;
  state_[0] = p.lon;
  state_[1] = p.lat;
  state_[2] = cfg_.alt.initial;
  state_[3] = cfg_.bearing_initial;
  state_[8] = cfg_.tas.initial;
  refresh_sample();
}

bool TruthGenerator::done() const {
  return step_ >= last_step_;
}

Vec3 TruthGenerator::knot_input(const std::vector<Vec3>& knots, double t) const {
  const double u = std::max(t, 0.0) / kKnotDt;
  const auto i = std::min(static_cast<std::size_t>(u), knots.size() - 2);
  const double frac = u - static_cast<double>(i);
  return (1.0 - frac) * knots[i] + frac * knots[i + 1];
}

TruthGenerator::Derivative TruthGenerator::evaluate(double t, const State& s) const {
  const GeodeticPosition pos{s[0], s[1], s[2]};
  const double psi = s[3], bank = s[4], bank_rate = s[5];
  const double gamma = s[6], gamma_rate = s[7], tas = s[8];

  Derivative d;
  d.ds.setZero();

  double bearing_target = cfg_.bearing_initial;
  for (const auto& bc : cfg_.bearing_changes) {
    if (t >= bc.t) {
      bearing_target = bc.bearing;
    }
  }
  const double bank_cmd = std::clamp(kHeadingGain * wrap_pi(bearing_target - psi), -kMaxBank, kMaxBank);
  const double g = gravity_magnitude(pos.lat, pos.alt);
  const double psi_rate = g * std::tan(bank) / tas;

  const double alt_target = t >= cfg_.alt.t_start ? cfg_.alt.final : cfg_.alt.initial;
  const double gamma_cmd = std::clamp(kAltitudeGain * (alt_target - pos.alt), -kMaxPath, kMaxPath);

  double tas_cmd = cfg_.tas.initial;
  if (t > cfg_.tas.t_start) {
    const double span = cfg_.tas.final - cfg_.tas.initial;
    const double moved = cfg_.tas_ramp_rate * (t - cfg_.tas.t_start);
    tas_cmd = cfg_.tas.initial + std::copysign(std::min(moved, std::abs(span)), span);
  }
  const double tas_rate = (tas_cmd - tas) / kTasTau;

  const double wg = cfg_.turbulence.bandwidth;
  const Vec3 gust_in = knot_input(gust_knots_, t);
  const Vec3 angle_in = knot_input(angle_knots_, t);
  const Vec3 gust = s.segment<3>(9), gust_rate = s.segment<3>(12);
  const Vec3 dang = s.segment<3>(15), dang_rate = s.segment<3>(18);

  // Ground velocity and its analytic derivative.
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  const double cp = std::cos(psi), sp = std::sin(psi);
  const Vec3 dir{cg * cp, cg * sp, -sg};
  const Vec3 dir_rate{-sg * gamma_rate * cp - cg * sp * psi_rate,
                      -sg * gamma_rate * sp + cg * cp * psi_rate,
                      -cg * gamma_rate};

  const double ws = cfg_.wind_speed.at(t), wb = cfg_.wind_bearing.at(t);
  const double ws_rate = cfg_.wind_speed.rate(t), wb_rate = cfg_.wind_bearing.rate(t);
  const Vec3 wind{ws * std::cos(wb), ws * std::sin(wb), 0.0};
  const Vec3 wind_rate{ws_rate * std::cos(wb) - ws * wb_rate * std::sin(wb),
                       ws_rate * std::sin(wb) + ws * wb_rate * std::cos(wb), 0.0};

  d.v_ned = tas * dir + wind + gust;
  d.a_ned = tas_rate * dir + tas * dir_rate + wind_rate + gust_rate;

  d.ds.segment<3>(0) = geodetic_dot(pos, d.v_ned);
  d.ds[3] = psi_rate;
  d.ds[4] = bank_rate;
  d.ds[5] = kBankOmega * kBankOmega * (bank_cmd - bank) - 2.0 * kBankOmega * bank_rate;
  d.ds[6] = gamma_rate;
  d.ds[7] = kPathOmega * kPathOmega * (gamma_cmd - gamma) - 2.0 * kPathOmega * gamma_rate;
  d.ds[8] = tas_rate;
  d.ds.segment<3>(9) = gust_rate;
  d.ds.segment<3>(12) = wg * wg * (gust_in - gust) - 2.0 * wg * gust_rate;
  d.ds.segment<3>(15) = dang_rate;
  d.ds.segment<3>(18) = wg * wg * (angle_in - dang) - 2.0 * wg * dang_rate;

  // Attitude: Euler angles of the kinematic aircraft plus turbulence.
  const double roll = bank + dang[0], pitch = gamma + cfg_.alpha_trim + dang[1], yaw = psi + dang[2];
  const double roll_rate = bank_rate + dang_rate[0];
  const double pitch_rate = gamma_rate + dang_rate[1];
  const double yaw_rate = psi_rate + dang_rate[2];
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cth = std::cos(pitch), sth = std::sin(pitch);
  d.w_nb_b = {roll_rate - yaw_rate * sth,
              pitch_rate * cr + yaw_rate * sr * cth,
              -pitch_rate * sr + yaw_rate * cr * cth};
  d.q_nb = UnitQuaternion::from_euler(yaw, pitch, roll);
  return d;
}

void TruthGenerator::refresh_sample() {
  const double t = static_cast<double>(step_) * kTruthDt;
  const Derivative d = evaluate(t, state_);
  const GeodeticPosition pos{state_[0], state_[1], state_[2]};
  const Environment env = environment_at(cfg_, t, pos);

  sample_.t = t;
  sample_.q_nb = d.q_nb;
  sample_.pos = pos;
  sample_.v_ned = d.v_ned;
  sample_.w_nb_b = d.w_nb_b;
  const Vec3 rhs = d.a_ned + transport_rate(pos, d.v_ned).cross(d.v_ned) - gravity(pos) + coriolis(pos, d.v_ned);
  sample_.f_ib_b = rotate_inv(d.q_nb, rhs);
  sample_.b_real = env.b_real;
  sample_.wind = env.wind;
  sample_.delta_p = env.delta_p;
  sample_.delta_t = env.delta_t;
}

void TruthGenerator::advance() {
  const double t = static_cast<double>(step_) * kTruthDt;
  const double h = kTruthDt;
  const State k1 = evaluate(t, state_).ds;
  const State k2 = evaluate(t + 0.5 * h, state_ + 0.5 * h * k1).ds;
  const State k3 = evaluate(t + 0.5 * h, state_ + 0.5 * h * k2).ds;
  const State k4 = evaluate(t + h, state_ + h * k3).ds;
  state_ += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  ++step_;
  refresh_sample();
}

TruthTrajectory generate_truth(const ScenarioConfig& cfg, int stride) {
  if (stride < 1) {
    throw std::invalid_argument("generate_truth: stride must be >= 1");
  }
  TruthGenerator gen(cfg);
  TruthTrajectory traj;
  traj.config = gen.config();
  traj.dt = kTruthDt * stride;
  traj.samples.reserve(static_cast<std::size_t>(cfg.t_end / traj.dt) + 2);
  traj.samples.push_back(gen.current());
  while (!gen.done()) {
    gen.advance();
    if (gen.step_index() % stride == 0) {
      traj.samples.push_back(gen.current());
    }
  }
  return traj;
}

}  // namespace vins
