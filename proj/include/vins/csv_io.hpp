#pragma once

// CSV and manifest output. Floating point values are written with 17
// significant digits so that reading them back is exact.
//
// Output directory layout:
//   runs/s<scenario>_<mode>_seed<seed>.csv   t, attitude_deg, vertical_m, horizontal_m
//   traces/s<scenario>_<mode>_seed<seed>.csv filter state and std (trace summary|full)
//   runs.csv        one row per run: status, distance, final NSE, step counters
//   aggregate.csv   t, then mean, mean-std, mean+std per metric per mode
//   summary.csv     final mean/std/max per metric per mode, distance in metres
//   manifest.json   configuration, seeds, version, wall time, failures

#include <filesystem>
#include <string>
#include <vector>

#include "vins/montecarlo.hpp"
#include "vins/sensors.hpp"
#include "vins/truth_sim.hpp"

namespace vins {

std::string fmt17(double v);

std::string run_file_name(const RunResult& r);

void write_run_series(const std::filesystem::path& path, const RunResult& r);
/// Fills t and the three NSE series of `r`.
void read_run_series(const std::filesystem::path& path, RunResult& r);
void write_trace(const std::filesystem::path& path, const RunResult& r);

void write_runs_table(const std::filesystem::path& path, const std::vector<RunResult>& runs);
void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateStats>& stats);
void write_summary(const std::filesystem::path& path, const std::vector<AggregateStats>& stats);

struct ManifestInfo {
  std::string command;
  std::string version;
  int jobs = 1;
  double wall_time_s = 0.0;
  std::string created;      // ISO-8601 timestamp
};

void emit_outputs(const MonteCarloResult& mc, const SimConfig& cfg, const ManifestInfo& info,
                  const std::filesystem::path& out_dir, TraceLevel trace);

/// Rebuilds runs (series, distance, status) from runs.csv and the per-run
/// files, recomputes the aggregates and returns them.
MonteCarloResult load_results(const std::filesystem::path& dir);

// Trajectory and sensor stream export.
void write_truth_csv(const std::filesystem::path& path, const std::vector<TruthSample>& samples);
void write_sensor_csv(const std::filesystem::path& path, const std::vector<SensorFrame>& frames);
std::vector<SensorFrame> read_sensor_csv(const std::filesystem::path& path);

}  // namespace vins
