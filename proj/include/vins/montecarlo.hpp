#pragma once

// End-to-end runs (truth -> sensors -> filter) and their Monte-Carlo
// aggregation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vins/ekf.hpp"
#include "vins/sensors.hpp"
#include "vins/truth_sim.hpp"
#include "vins/vvs.hpp"

namespace vins {

enum class NavMode { Ins, Vins };
enum class TraceLevel { None, Summary, Full };

std::string to_string(NavMode m);
NavMode parse_mode(const std::string& s);
std::string to_string(TraceLevel t);
TraceLevel parse_trace(const std::string& s);

struct SimConfig {
  ScenarioRanges ranges;
  SensorConfig sensors;
  NoiseConfig noise;
  InitialUncertainty init;
  VvsConfig vvs;
  int baro_window = 60;        // GNSS epochs averaged into the baro offset
  bool check_psd = true;
  bool gnss_always = false;    // never lose GNSS

  void validate() const;
};

/// Filter snapshot: attitude, state vector and per-state std.
struct TraceRow {
  double t = 0.0;
  Eigen::Vector4d q = Eigen::Vector4d::Zero();
  StateVec x = StateVec::Zero();
  StateVec sd = StateVec::Zero();
};

struct RunResult {
  int run_id = 0;
  std::uint64_t seed = 0;
  int scenario = 1;
  NavMode mode = NavMode::Ins;
  bool ok = true;
  std::string error_kind;   // numerical | singularity | config | other
  std::string error;

  // 1 Hz series.
  std::vector<double> t;
  std::vector<double> att_deg;
  std::vector<double> vert_m;
  std::vector<double> hor_m;
  double t_gnss_loss = 0.0;
  double distance_m = 0.0;  // flown after GNSS loss

  StepCounters counters;
  std::vector<TraceRow> trace;

  double final_att() const { return att_deg.back(); }
  double final_vert() const { return vert_m.back(); }
  double final_hor() const { return hor_m.back(); }
  double final_hor_pct() const { return 100.0 * hor_m.back() / distance_m; }
};

RunResult run_scenario(const ScenarioConfig& sc, const SimConfig& cfg, NavMode mode,
                       TraceLevel trace = TraceLevel::None);
RunResult run_single(int scenario, std::uint64_t seed, NavMode mode, const SimConfig& cfg,
                     TraceLevel trace = TraceLevel::None);

struct Stat {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;   // largest magnitude, with its sign
};

Stat describe(const std::vector<double>& values);

struct AggregateStats {
  NavMode mode = NavMode::Ins;
  int scenario = 1;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  std::vector<double> t;
  // Per-time mean and std of attitude, vertical and horizontal NSE.
  std::vector<double> att_mean, att_std, vert_mean, vert_std, hor_mean, hor_std;
  Stat distance, final_att, final_vert, final_hor, final_hor_pct;
};

/// Aggregates the successful runs of `mode`, in seed order. Throws
/// std::invalid_argument if there are none or the series lengths differ.
AggregateStats aggregate(const std::vector<RunResult>& runs, NavMode mode);

struct MonteCarloResult {
  int scenario = 1;
  std::uint64_t base_seed = 0;
  std::vector<NavMode> modes;
  std::vector<RunResult> runs;          // ordered by (seed, mode)
  std::vector<AggregateStats> stats;    // one per mode with successes
};

/// Reference implementation, one run after another.
MonteCarloResult run_monte_carlo_serial(int scenario, int n_runs, std::uint64_t base_seed,
                                        const std::vector<NavMode>& modes, const SimConfig& cfg,
                                        TraceLevel trace = TraceLevel::None);

/// Same result as the serial version; runs are distributed over `jobs`
/// OpenMP threads (0 = runtime default).
MonteCarloResult run_monte_carlo(int scenario, int n_runs, std::uint64_t base_seed, const std::vector<NavMode>& modes,
                                 const SimConfig& cfg, int jobs, TraceLevel trace = TraceLevel::None);

}  // namespace vins
