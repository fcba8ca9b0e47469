#include "vins/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vins/config.hpp"
#include "vins/errors.hpp"

namespace vins {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) {
    throw IoError("error writing " + path.string());
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const fs::path& path) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw IoError("malformed number '" + s + "' in " + path.string());
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name, const fs::path& path) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) {
        return i;
      }
    }
    throw IoError("missing column '" + name + "' in " + path.string());
  }
};

Table read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  Table t;
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("empty file " + path.string());
  }
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    t.rows.push_back(split(line));
    if (t.rows.back().size() != t.header.size()) {
      throw IoError("row with " + std::to_string(t.rows.back().size()) + " fields in " + path.string());
    }
  }
  return t;
}

void put3(std::ostream& os, const Vec3& v) {
  os << ',' << fmt17(v[0]) << ',' << fmt17(v[1]) << ',' << fmt17(v[2]);
}

const char* kMetrics[] = {"attitude_deg", "vertical_m", "horizontal_m"};

}  // namespace

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string run_file_name(const RunResult& r) {
  return "s" + std::to_string(r.scenario) + "_" + to_string(r.mode) + "_seed" + std::to_string(r.seed) + ".csv";
}

void write_run_series(const fs::path& path, const RunResult& r) {
  auto out = open_out(path);
  out << "t,attitude_deg,vertical_m,horizontal_m\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    out << fmt17(r.t[i]) << ',' << fmt17(r.att_deg[i]) << ',' << fmt17(r.vert_m[i]) << ',' << fmt17(r.hor_m[i])
        << '\n';
  }
  close_checked(out, path);
}

void read_run_series(const fs::path& path, RunResult& r) {
  const Table t = read_table(path);
  const std::size_t ct = t.col("t", path), ca = t.col("attitude_deg", path), cv = t.col("vertical_m", path),
                    ch = t.col("horizontal_m", path);
  r.t.clear();
  r.att_deg.clear();
  r.vert_m.clear();
  r.hor_m.clear();
  for (const auto& row : t.rows) {
    r.t.push_back(to_double(row[ct], path));
    r.att_deg.push_back(to_double(row[ca], path));
    r.vert_m.push_back(to_double(row[cv], path));
    r.hor_m.push_back(to_double(row[ch], path));
  }
  if (r.t.empty()) {
    throw IoError("no samples in " + path.string());
  }
}

void write_trace(const fs::path& path, const RunResult& r) {
  static const char* names[] = {"dr",   "w",    "pos",  "v",    "f",   "e_gyr",
                                "e_acc", "e_mag", "b_dev"};
  auto out = open_out(path);
  out << "t,qw,qx,qy,qz";
  for (const char* prefix : {"", "sd_"}) {
    for (const char* n : names) {
      for (int a = 0; a < 3; ++a) {
        out << ',' << prefix << n << '_' << a;
      }
    }
  }
  out << '\n';
  for (const auto& row : r.trace) {
    out << fmt17(row.t);
    for (int i = 0; i < 4; ++i) {
      out << ',' << fmt17(row.q[i]);
    }
    for (int i = 0; i < kStateDim; ++i) {
      out << ',' << fmt17(row.x[i]);
    }
    for (int i = 0; i < kStateDim; ++i) {
      out << ',' << fmt17(row.sd[i]);
    }
    out << '\n';
  }
  close_checked(out, path);
}

void write_runs_table(const fs::path& path, const std::vector<RunResult>& runs) {
  auto out = open_out(path);
  out << "run_id,seed,scenario,mode,status,error_kind,t_gnss_loss,distance_m,final_attitude_deg,final_vertical_m,"
         "final_horizontal_m,final_horizontal_pct,time_updates,updates_9,updates_15,two_pass_epochs,file\n";
  for (const auto& r : runs) {
    out << r.run_id << ',' << r.seed << ',' << r.scenario << ',' << to_string(r.mode) << ','
        << (r.ok ? "ok" : "failed") << ',' << r.error_kind << ',';
    if (r.ok) {
      out << fmt17(r.t_gnss_loss) << ',' << fmt17(r.distance_m) << ',' << fmt17(r.final_att()) << ','
          << fmt17(r.final_vert()) << ',' << fmt17(r.final_hor()) << ',' << fmt17(r.final_hor_pct()) << ','
          << r.counters.time_updates << ',' << r.counters.updates_9 << ',' << r.counters.updates_15 << ','
          << r.counters.two_pass_epochs << ",runs/" << run_file_name(r) << '\n';
    } else {
      out << ",,,,,,,,,,\n";
    }
  }
  close_checked(out, path);
}

void write_aggregate(const fs::path& path, const std::vector<AggregateStats>& stats) {
  if (stats.empty()) {
    throw std::invalid_argument("write_aggregate: no statistics");
  }
  auto out = open_out(path);
  out << 't';
  for (const auto& s : stats) {
    for (const char* m : kMetrics) {
      const std::string p = to_string(s.mode) + "_" + m;
      out << ',' << p << "_mean," << p << "_lo," << p << "_hi";
    }
  }
  out << '\n';
  const std::size_t len = stats.front().t.size();
  for (std::size_t i = 0; i < len; ++i) {
    out << fmt17(stats.front().t[i]);
    for (const auto& s : stats) {
      const std::vector<double>* mean[] = {&s.att_mean, &s.vert_mean, &s.hor_mean};
      const std::vector<double>* sd[] = {&s.att_std, &s.vert_std, &s.hor_std};
      for (int k = 0; k < 3; ++k) {
        const double mu = (*mean[k])[i], sigma = (*sd[k])[i];
        out << ',' << fmt17(mu) << ',' << fmt17(mu - sigma) << ',' << fmt17(mu + sigma);
      }
    }
    out << '\n';
  }
  close_checked(out, path);
}

void write_summary(const fs::path& path, const std::vector<AggregateStats>& stats) {
  if (stats.empty()) {
    throw std::invalid_argument("write_summary: no statistics");
  }
  auto out = open_out(path);
  out << "scenario,stat,distance_m";
  for (const auto& s : stats) {
    const std::string p = to_string(s.mode);
    out << ',' << p << "_runs," << p << "_attitude_deg," << p << "_vertical_m," << p << "_horizontal_m," << p
        << "_horizontal_pct";
  }
  out << '\n';
  auto pick = [](const Stat& s, int k) { return k == 0 ? s.mean : k == 1 ? s.std : s.max; };
  const char* rows[] = {"mean", "std", "max"};
  for (int k = 0; k < 3; ++k) {
    out << stats.front().scenario << ',' << rows[k] << ',' << fmt17(pick(stats.front().distance, k));
    for (const auto& s : stats) {
      out << ',' << s.n_ok << ',' << fmt17(pick(s.final_att, k)) << ',' << fmt17(pick(s.final_vert, k)) << ','
          << fmt17(pick(s.final_hor, k)) << ',' << fmt17(pick(s.final_hor_pct, k));
    }
    out << '\n';
  }
  close_checked(out, path);
}

void emit_outputs(const MonteCarloResult& mc, const SimConfig& cfg, const ManifestInfo& info, const fs::path& dir,
                  TraceLevel trace) {
  for (const auto& r : mc.runs) {
    if (!r.ok) {
      continue;
    }
    write_run_series(dir / "runs" / run_file_name(r), r);
    if (trace != TraceLevel::None) {
      write_trace(dir / "traces" / run_file_name(r), r);
    }
  }
  write_runs_table(dir / "runs.csv", mc.runs);
  if (!mc.stats.empty()) {
    write_aggregate(dir / "aggregate.csv", mc.stats);
    write_summary(dir / "summary.csv", mc.stats);
  }

  nlohmann::ordered_json m;
  m["version"] = info.version;
  m["command"] = info.command;
  m["created"] = info.created;
  m["wall_time_s"] = info.wall_time_s;
  m["jobs"] = info.jobs;
  m["scenario"] = mc.scenario;
  m["base_seed"] = mc.base_seed;
  m["trace"] = to_string(trace);
  std::vector<std::string> modes;
  for (NavMode mode : mc.modes) {
    modes.push_back(to_string(mode));
  }
  m["modes"] = modes;
  std::vector<std::uint64_t> seeds;
  for (const auto& r : mc.runs) {
    if (seeds.empty() || seeds.back() != r.seed) {
      seeds.push_back(r.seed);
    }
  }
  m["seeds"] = seeds;
  auto failures = nlohmann::ordered_json::array();
  for (const auto& r : mc.runs) {
    if (!r.ok) {
      failures.push_back({{"seed", r.seed}, {"mode", to_string(r.mode)}, {"kind", r.error_kind}, {"error", r.error}});
    }
  }
  m["failures"] = failures;
  m["config"] = nlohmann::ordered_json::parse(sim_config_to_json(cfg));
  auto out = open_out(dir / "manifest.json");
  out << m.dump(2) << '\n';
  close_checked(out, dir / "manifest.json");
}

MonteCarloResult load_results(const fs::path& dir) {
  const fs::path runs_path = dir / "runs.csv";
  const Table t = read_table(runs_path);
  const std::size_t c_id = t.col("run_id", runs_path), c_seed = t.col("seed", runs_path),
                    c_sc = t.col("scenario", runs_path), c_mode = t.col("mode", runs_path),
                    c_status = t.col("status", runs_path), c_kind = t.col("error_kind", runs_path),
                    c_loss = t.col("t_gnss_loss", runs_path), c_dist = t.col("distance_m", runs_path),
                    c_file = t.col("file", runs_path);
  MonteCarloResult mc;
  for (const auto& row : t.rows) {
    RunResult r;
    r.run_id = std::stoi(row[c_id]);
    r.seed = std::stoull(row[c_seed]);
    r.scenario = std::stoi(row[c_sc]);
    r.mode = parse_mode(row[c_mode]);
    r.ok = row[c_status] == "ok";
    r.error_kind = row[c_kind];
    if (r.ok) {
      r.t_gnss_loss = to_double(row[c_loss], runs_path);
      r.distance_m = to_double(row[c_dist], runs_path);
      read_run_series(dir / row[c_file], r);
    }
    if (mc.runs.empty()) {
      mc.scenario = r.scenario;
      mc.base_seed = r.seed;
    }
    if (std::find(mc.modes.begin(), mc.modes.end(), r.mode) == mc.modes.end()) {
      mc.modes.push_back(r.mode);
    }
    mc.runs.push_back(std::move(r));
  }
  if (mc.runs.empty()) {
    throw IoError("no runs listed in " + runs_path.string());
  }
  for (NavMode m : mc.modes) {
    const bool any = std::any_of(mc.runs.begin(), mc.runs.end(),
                                 [&](const RunResult& r) { return r.ok && r.mode == m; });
    if (any) {
      mc.stats.push_back(aggregate(mc.runs, m));
    }
  }
  return mc;
}

void write_truth_csv(const fs::path& path, const std::vector<TruthSample>& samples) {
  auto out = open_out(path);
  out << "t,qw,qx,qy,qz,lon,lat,h,vn,ve,vd,wx,wy,wz,fx,fy,fz,bn,be,bd,wind_n,wind_e,wind_d,delta_p,delta_t\n";
  for (const auto& s : samples) {
    out << fmt17(s.t);
    const Eigen::Vector4d q = s.q_nb.wxyz();
    for (int i = 0; i < 4; ++i) {
      out << ',' << fmt17(q[i]);
    }
    put3(out, s.pos.as_vector());
    put3(out, s.v_ned);
    put3(out, s.w_nb_b);
    put3(out, s.f_ib_b);
    put3(out, s.b_real);
    put3(out, s.wind);
    out << ',' << fmt17(s.delta_p) << ',' << fmt17(s.delta_t) << '\n';
  }
  close_checked(out, path);
}

void write_sensor_csv(const fs::path& path, const std::vector<SensorFrame>& frames) {
  auto out = open_out(path);
  out << "index,t,gyro_x,gyro_y,gyro_z,accel_x,accel_y,accel_z,mag_x,mag_y,mag_z,baro_alt,source,"
         "lon,lat,h,vn,ve,vd,sd_lon,sd_lat,sd_h,sd_vn,sd_ve,sd_vd\n";
  for (const auto& f : frames) {
    out << f.index << ',' << fmt17(f.t);
    put3(out, f.gyro);
    put3(out, f.accel);
    put3(out, f.mag);
    out << ',' << (f.baro_alt ? fmt17(*f.baro_alt) : std::string());
    if (f.posvel) {
      out << ',' << (f.posvel->source == ObsSource::Gnss ? "gnss" : "vvs");
      put3(out, f.posvel->pos);
      put3(out, f.posvel->vel);
      put3(out, f.posvel->pos_sigma);
      put3(out, f.posvel->vel_sigma);
    } else {
      out << ",none,,,,,,,,,,,,";
    }
    out << '\n';
  }
  close_checked(out, path);
}

std::vector<SensorFrame> read_sensor_csv(const fs::path& path) {
  const Table t = read_table(path);
  if (t.header.size() != 25) {
    throw IoError("unexpected sensor CSV header in " + path.string());
  }
  auto vec3 = [&](const std::vector<std::string>& row, std::size_t c) {
    return Vec3(to_double(row[c], path), to_double(row[c + 1], path), to_double(row[c + 2], path));
  };
  std::vector<SensorFrame> frames;
  for (const auto& row : t.rows) {
    SensorFrame f;
    f.index = std::stoll(row[0]);
    f.t = to_double(row[1], path);
    f.gyro = vec3(row, 2);
    f.accel = vec3(row, 5);
    f.mag = vec3(row, 8);
    if (!row[11].empty()) {
      f.baro_alt = to_double(row[11], path);
    }
    if (row[12] != "none") {
      PosVelObs o;
      o.source = row[12] == "gnss" ? ObsSource::Gnss : ObsSource::Vvs;
      o.pos = vec3(row, 13);
      o.vel = vec3(row, 16);
      o.pos_sigma = vec3(row, 19);
      o.vel_sigma = vec3(row, 22);
      f.posvel = o;
    }
    frames.push_back(f);
  }
  return frames;
}

}  // namespace vins
