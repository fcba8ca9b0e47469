// Command-line front end: Monte-Carlo simulation, report regeneration and
// truth/sensor stream export.
//
// Exit codes: 0 success, 1 other failure, 2 usage, 3 configuration,
// 4 numerical failure, 5 file I/O.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vins/config.hpp"
#include "vins/csv_io.hpp"
#include "vins/errors.hpp"
#include "vins/montecarlo.hpp"

namespace {

using namespace vins;

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kConfig = 3, kNumerical = 4, kIo = 5 };

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int exit_for_kind(const std::string& kind) {
  if (kind == "numerical" || kind == "singularity") {
    return kNumerical;
  }
  if (kind == "config") {
    return kConfig;
  }
  return kOther;
}

void print_summary(const MonteCarloResult& mc) {
  std::printf("scenario %d\n", mc.scenario);
  std::printf("%-5s %5s %10s %10s %12s %12s %9s\n", "mode", "runs", "stat", "att[deg]", "vert[m]", "hor[m]", "hor[%]");
  for (const auto& s : mc.stats) {
    const Stat* cols[] = {&s.final_att, &s.final_vert, &s.final_hor, &s.final_hor_pct};
    const char* names[] = {"mean", "std", "max"};
    for (int k = 0; k < 3; ++k) {
      auto pick = [&](const Stat* st) { return k == 0 ? st->mean : k == 1 ? st->std : st->max; };
      std::printf("%-5s %5zu %10s %10.3f %12.2f %12.1f %9.3f\n", to_string(s.mode).c_str(), s.n_ok, names[k],
                  pick(cols[0]), pick(cols[1]), pick(cols[2]), pick(cols[3]));
    }
  }
  if (!mc.stats.empty()) {
    std::printf("distance after GNSS loss: mean %.1f m\n", mc.stats.front().distance.mean);
  }
}

std::string command_line(int argc, char** argv) {
  std::ostringstream os;
  for (int i = 0; i < argc; ++i) {
    os << (i ? " " : "") << argv[i];
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GNSS-denied visual-inertial navigation Monte-Carlo simulator"};
  app.require_subcommand(1);

  std::string config_path;
  int scenario = 1;
  int runs = 100;
  std::uint64_t seed = 1;
  std::string mode = "both";
  double duration_scale = 0.0;
  std::string out_dir = "out";
  std::string trace = "none";
  int jobs = 0;

  auto* sim = app.add_subcommand("simulate", "run a Monte-Carlo ensemble and write CSV outputs");
  sim->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  sim->add_option("--scenario", scenario, "scenario id")->check(CLI::IsMember({1, 2}));
  sim->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "base seed; run k uses seed + k");
  sim->add_option("--mode", mode, "navigation mode")->check(CLI::IsMember({"ins", "vins", "both"}));
  sim->add_option("--duration-scale", duration_scale, "scale of the GNSS-denied window")
      ->check(CLI::PositiveNumber);
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--trace", trace, "filter trace output")->check(CLI::IsMember({"none", "summary", "full"}));
  sim->add_option("--jobs", jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  std::string in_dir;
  auto* rep = app.add_subcommand("report", "recompute aggregate and summary tables from per-run CSVs");
  rep->add_option("--in", in_dir, "directory written by simulate")->required()->check(CLI::ExistingDirectory);

  int stride = 5;
  auto* exp = app.add_subcommand("export", "write one run's truth trajectory and sensor stream as CSV");
  exp->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  exp->add_option("--scenario", scenario, "scenario id")->check(CLI::IsMember({1, 2}));
  exp->add_option("--seed", seed, "scenario seed");
  exp->add_option("--duration-scale", duration_scale, "scale of the GNSS-denied window")
      ->check(CLI::PositiveNumber);
  exp->add_option("--truth-stride", stride, "keep every n-th 500 Hz truth sample")->check(CLI::PositiveNumber);
  exp->add_option("--out", out_dir, "output directory");

  auto* cfg_cmd = app.add_subcommand("config", "print the default configuration as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*cfg_cmd) {
      std::cout << sim_config_to_json(SimConfig{});
      return kOk;
    }

    SimConfig cfg = config_path.empty() ? SimConfig{} : load_sim_config(config_path);
    if (duration_scale > 0.0) {
      cfg.ranges.duration_scale = duration_scale;
    }
    cfg.validate();

    if (*sim) {
      std::vector<NavMode> modes;
      if (mode == "both") {
        modes = {NavMode::Ins, NavMode::Vins};
      } else {
        modes = {parse_mode(mode)};
      }
      const TraceLevel level = parse_trace(trace);
      const auto t0 = std::chrono::steady_clock::now();
      const MonteCarloResult mc = run_monte_carlo(scenario, runs, seed, modes, cfg, jobs, level);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      ManifestInfo info;
      info.command = command_line(argc, argv);
      info.version = VINS_VERSION;
      info.jobs = jobs;
      info.wall_time_s = wall;
      info.created = utc_now();
      emit_outputs(mc, cfg, info, out_dir, level);
      print_summary(mc);
      std::printf("wall time %.1f s, outputs in %s\n", wall, out_dir.c_str());

      int rc = kOk;
      for (const auto& r : mc.runs) {
        if (!r.ok) {
          std::fprintf(stderr, "run seed %llu mode %s failed (%s): %s\n", static_cast<unsigned long long>(r.seed),
                       to_string(r.mode).c_str(), r.error_kind.c_str(), r.error.c_str());
          if (rc == kOk) {
            rc = exit_for_kind(r.error_kind);
          }
        }
      }
      return rc;
    }

    if (*rep) {
      const MonteCarloResult mc = load_results(in_dir);
      if (mc.stats.empty()) {
        std::fprintf(stderr, "no successful runs in %s\n", in_dir.c_str());
        return kOther;
      }
      write_aggregate(std::filesystem::path(in_dir) / "aggregate.csv", mc.stats);
      write_summary(std::filesystem::path(in_dir) / "summary.csv", mc.stats);
      print_summary(mc);
      return kOk;
    }

    if (*exp) {
      const ScenarioConfig sc = sample_scenario(scenario, seed, cfg.ranges);
      TruthGenerator gen(sc);
      SensorSuite sensors(cfg.sensors, mix_seed(sc.seed, 11));
      std::vector<TruthSample> truth{gen.current()};
      std::vector<SensorFrame> frames{sensors.sample(gen.current(), 0, !(sc.t_gnss_loss <= 0.0))};
      for (std::int64_t k = 1; !gen.done(); ++k) {
        for (int i = 0; i < 5; ++i) {
          gen.advance();
          if (gen.step_index() % stride == 0) {
            truth.push_back(gen.current());
          }
        }
        const bool gnss = cfg.gnss_always || gen.current().t < sc.t_gnss_loss - 1e-9;
        frames.push_back(sensors.sample(gen.current(), k, gnss));
      }
      const std::filesystem::path dir(out_dir);
      write_truth_csv(dir / "truth.csv", truth);
      write_sensor_csv(dir / "sensors.csv", frames);
      std::printf("wrote %zu truth samples and %zu sensor frames to %s\n", truth.size(), frames.size(),
                  out_dir.c_str());
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const SingularityError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
