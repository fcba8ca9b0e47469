#include "vins/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "vins/errors.hpp"

namespace vins {
namespace {

constexpr int kTruthPerFrame = 5;
constexpr std::int64_t kFramesPerSecond = 100;
constexpr std::int64_t kFramesPerImage = 10;

TraceRow snapshot(const FilterState& s) {
  TraceRow r;
  r.t = s.t;
  r.q = s.q.wxyz();
  r.x = s.x;
  r.sd = s.P.diagonal().cwiseMax(0.0).cwiseSqrt();
  return r;
}

void record_nse(RunResult& r, const FilterState& s, const TruthSample& truth) {
  r.t.push_back(truth.t);
  r.att_deg.push_back(minus(s.attitude(), truth.q_nb).norm() * 180.0 / std::numbers::pi);
  const GeodeticPosition est = s.position();
  r.vert_m.push_back(est.alt - truth.pos.alt);
  r.hor_m.push_back(horizontal_distance(truth.pos, est));
}

RunResult run_guarded(int scenario, std::uint64_t seed, NavMode mode, const SimConfig& cfg, TraceLevel trace,
                      int run_id) {
  RunResult r;
  try {
    r = run_single(scenario, seed, mode, cfg, trace);
  } catch (const NumericalFailure& e) {
    r.ok = false;
    r.error_kind = "numerical";
    r.error = e.what();
  } catch (const SingularityError& e) {
    r.ok = false;
    r.error_kind = "singularity";
    r.error = e.what();
  } catch (const ConfigError& e) {
    r.ok = false;
    r.error_kind = "config";
    r.error = e.what();
  } catch (const std::exception& e) {
    r.ok = false;
    r.error_kind = "other";
    r.error = e.what();
  }
  r.run_id = run_id;
  r.seed = seed;
  r.scenario = scenario;
  r.mode = mode;
  return r;
}

MonteCarloResult finish(int scenario, std::uint64_t base_seed, const std::vector<NavMode>& modes,
                        std::vector<RunResult> runs) {
  MonteCarloResult out;
  out.scenario = scenario;
  out.base_seed = base_seed;
  out.modes = modes;
  out.runs = std::move(runs);
  for (NavMode m : modes) {
    const bool any = std::any_of(out.runs.begin(), out.runs.end(),
                                 [&](const RunResult& r) { return r.ok && r.mode == m; });
    if (any) {
      out.stats.push_back(aggregate(out.runs, m));
    }
  }
  return out;
}

void require_runs(int n_runs, const std::vector<NavMode>& modes) {
  if (n_runs < 1) {
    throw std::invalid_argument("run_monte_carlo: n_runs must be >= 1");
  }
  if (modes.empty()) {
    throw std::invalid_argument("run_monte_carlo: no modes requested");
  }
}

}  // namespace

std::string to_string(NavMode m) {
  return m == NavMode::Ins ? "ins" : "vins";
}

NavMode parse_mode(const std::string& s) {
  if (s == "ins") {
    return NavMode::Ins;
  }
  if (s == "vins") {
    return NavMode::Vins;
  }
  throw std::invalid_argument("unknown mode '" + s + "'");
}

std::string to_string(TraceLevel t) {
  switch (t) {
    case TraceLevel::None:
      return "none";
    case TraceLevel::Summary:
      return "summary";
    case TraceLevel::Full:
      return "full";
  }
  return "none";
}

TraceLevel parse_trace(const std::string& s) {
  if (s == "none") {
    return TraceLevel::None;
  }
  if (s == "summary") {
    return TraceLevel::Summary;
  }
  if (s == "full") {
    return TraceLevel::Full;
  }
  throw std::invalid_argument("unknown trace level '" + s + "'");
}

void SimConfig::validate() const {
  sensors.validate();
  noise.validate();
  init.validate();
  vvs.validate();
  if (baro_window < 1) {
    throw ConfigError("baro_window must be >= 1");
  }
  if (!(ranges.duration_scale > 0.0)) {
    throw ConfigError("duration_scale must be > 0");
  }
}

RunResult run_scenario(const ScenarioConfig& sc, const SimConfig& cfg, NavMode mode, TraceLevel trace) {
  cfg.validate();
  RunResult res;
  res.seed = sc.seed;
  res.scenario = sc.id;
  res.mode = mode;
  res.t_gnss_loss = sc.t_gnss_loss;

  TruthGenerator gen(sc);
  SensorSuite sensors(cfg.sensors, mix_seed(sc.seed, 11));
  Rng init_rng(mix_seed(sc.seed, 12));
  VirtualVisionSensor vvs(cfg.vvs, cfg.sensors, mix_seed(sc.seed, 13));
  BaroOffsetLatch latch(cfg.baro_window);

  auto gnss_at = [&](double t) { return cfg.gnss_always || t < sc.t_gnss_loss - 1e-9; };

  SensorFrame frame = sensors.sample(gen.current(), 0, gnss_at(0.0));
  NavFilter filter(initialize_filter(gen.current(), frame, cfg.init, init_rng), cfg.noise, sc.magnetic,
                   cfg.check_psd);
  if (frame.posvel) {
    latch.add(frame.posvel->pos[2], *frame.baro_alt);
  }
  record_nse(res, filter.state(), gen.current());
  if (trace != TraceLevel::None) {
    res.trace.push_back(snapshot(filter.state()));
  }

  const auto n_frames = static_cast<std::int64_t>(std::llround(sc.t_end / kSensorDt));
  for (std::int64_t k = 1; k <= n_frames; ++k) {
    const GeodeticPosition prev_pos = gen.current().pos;
    for (int i = 0; i < kTruthPerFrame; ++i) {
      gen.advance();
    }
    const TruthSample& truth = gen.current();
    const bool gnss = gnss_at(truth.t);
    if (truth.t > sc.t_gnss_loss) {
      res.distance_m += horizontal_distance(prev_pos, truth.pos);
    }

    frame = sensors.sample(truth, k, gnss);
    if (frame.posvel) {
      latch.add(frame.posvel->pos[2], *frame.baro_alt);
    } else if (!gnss && !latch.frozen()) {
      latch.freeze();
    }

    if (mode == NavMode::Vins && !gnss) {
      const double baro = latch.corrected(*frame.baro_alt);
      filter.step(frame, [&](const FilterState& pre) -> std::optional<PosVelObs> {
        if (auto o = vvs.observe(truth, pre, baro)) {
          return o->as_posvel();
        }
        return std::nullopt;
      });
      if (k % kFramesPerImage == 0) {
        vvs.record_estimate(filter.state());
      }
    } else {
      filter.step(frame);
    }

    if (k % kFramesPerSecond == 0) {
      record_nse(res, filter.state(), truth);
    }
    if (trace == TraceLevel::Full || (trace == TraceLevel::Summary && k % kFramesPerSecond == 0)) {
      res.trace.push_back(snapshot(filter.state()));
    }
  }
  res.counters = filter.counters();
  return res;
}

RunResult run_single(int scenario, std::uint64_t seed, NavMode mode, const SimConfig& cfg, TraceLevel trace) {
  return run_scenario(sample_scenario(scenario, seed, cfg.ranges), cfg, mode, trace);
}

Stat describe(const std::vector<double>& v) {
  if (v.empty()) {
    throw std::invalid_argument("describe: empty sample");
  }
  Stat s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) {
    ss += (x - s.mean) * (x - s.mean);
  }
  s.std = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.max = v.front();
  for (double x : v) {
    if (std::abs(x) > std::abs(s.max)) {
      s.max = x;
    }
  }
  return s;
}

AggregateStats aggregate(const std::vector<RunResult>& runs, NavMode mode) {
  std::vector<const RunResult*> sel;
  for (const auto& r : runs) {
    if (r.mode == mode && r.ok) {
      sel.push_back(&r);
    }
  }
  if (sel.empty()) {
    throw std::invalid_argument("aggregate: no successful runs for mode " + to_string(mode));
  }
  std::stable_sort(sel.begin(), sel.end(), [](const RunResult* a, const RunResult* b) { return a->seed < b->seed; });

  AggregateStats a;
  a.mode = mode;
  a.scenario = sel.front()->scenario;
  a.n_ok = sel.size();
  a.n_failed = static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [&](const RunResult& r) { return r.mode == mode && !r.ok; }));
  a.t = sel.front()->t;
  const std::size_t len = a.t.size();
  for (const auto* r : sel) {
    if (r->t.size() != len || r->att_deg.size() != len || r->vert_m.size() != len || r->hor_m.size() != len) {
      throw std::invalid_argument("aggregate: runs have different series lengths");
    }
  }

  auto series = [&](auto member, std::vector<double>& mean, std::vector<double>& sd) {
    mean.resize(len);
    sd.resize(len);
    std::vector<double> col(sel.size());
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t k = 0; k < sel.size(); ++k) {
        col[k] = (sel[k]->*member)[i];
      }
      const Stat s = describe(col);
      mean[i] = s.mean;
      sd[i] = s.std;
    }
  };
  series(&RunResult::att_deg, a.att_mean, a.att_std);
  series(&RunResult::vert_m, a.vert_mean, a.vert_std);
  series(&RunResult::hor_m, a.hor_mean, a.hor_std);

  std::vector<double> dist, att, vert, hor, pct;
  for (const auto* r : sel) {
    dist.push_back(r->distance_m);
    att.push_back(r->final_att());
    vert.push_back(r->final_vert());
    hor.push_back(r->final_hor());
    pct.push_back(r->final_hor_pct());
  }
  a.distance = describe(dist);
  a.final_att = describe(att);
  a.final_vert = describe(vert);
  a.final_hor = describe(hor);
  a.final_hor_pct = describe(pct);
  return a;
}

MonteCarloResult run_monte_carlo_serial(int scenario, int n_runs, std::uint64_t base_seed,
                                        const std::vector<NavMode>& modes, const SimConfig& cfg, TraceLevel trace) {
  require_runs(n_runs, modes);
  const int n_modes = static_cast<int>(modes.size());
  std::vector<RunResult> runs(static_cast<std::size_t>(n_runs) * modes.size());
  for (int i = 0; i < n_runs * n_modes; ++i) {
    const int k = i / n_modes;
    runs[i] = run_guarded(scenario, base_seed + k, modes[i % n_modes], cfg, trace, k);
  }
  return finish(scenario, base_seed, modes, std::move(runs));
}

MonteCarloResult run_monte_carlo(int scenario, int n_runs, std::uint64_t base_seed, const std::vector<NavMode>& modes,
                                 const SimConfig& cfg, int jobs, TraceLevel trace) {
  require_runs(n_runs, modes);
  const int n_modes = static_cast<int>(modes.size());
  const int total = n_runs * n_modes;
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  std::vector<RunResult> runs(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < total; ++i) {
    const int k = i / n_modes;
    runs[i] = run_guarded(scenario, base_seed + k, modes[i % n_modes], cfg, trace, k);
  }
  return finish(scenario, base_seed, modes, std::move(runs));
}

}  // namespace vins
