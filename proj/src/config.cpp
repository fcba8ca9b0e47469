#include "vins/config.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vins/errors.hpp"

namespace vins {
namespace {

using nlohmann::json;

struct Field {
  const char* section;
  const char* key;
  std::variant<double*, int*, bool*> ref;
};

std::vector<Field> fields(SimConfig& c) {
  auto& r = c.ranges;
  auto& s = c.sensors;
  auto& n = c.noise;
  auto& i = c.init;
  auto& v = c.vvs;
  auto& m = r.magnetic;
  return {
      {"scenario", "t_end_scenario1", &r.t_end_scenario1},
      {"scenario", "t_end_scenario2", &r.t_end_scenario2},
      {"scenario", "t_gnss_loss", &r.t_gnss_loss},
      {"scenario", "duration_scale", &r.duration_scale},
      {"scenario", "lat_min_deg", &r.lat_min_deg},
      {"scenario", "lat_max_deg", &r.lat_max_deg},
      {"scenario", "lon_min_deg", &r.lon_min_deg},
      {"scenario", "lon_max_deg", &r.lon_max_deg},
      {"scenario", "tas_min", &r.tas_min},
      {"scenario", "tas_max", &r.tas_max},
      {"scenario", "alt_min", &r.alt_min},
      {"scenario", "alt_max", &r.alt_max},
      {"scenario", "turn_min_deg", &r.turn_min_deg},
      {"scenario", "turn_max_deg", &r.turn_max_deg},
      {"scenario", "wind_max", &r.wind_max},
      {"scenario", "delta_p_max", &r.delta_p_max},
      {"scenario", "delta_t_max", &r.delta_t_max},
      {"scenario", "gust_min", &r.gust_min},
      {"scenario", "gust_max", &r.gust_max},
      {"scenario", "angle_min_deg", &r.angle_min_deg},
      {"scenario", "angle_max_deg", &r.angle_max_deg},
      {"scenario", "b_dev_sigma", &r.b_dev_sigma},
      {"magnetic", "dipole_b0", &m.dipole_b0},
      {"magnetic", "pole_lat", &m.pole_lat},
      {"magnetic", "pole_lon", &m.pole_lon},
      {"sensors", "gyro_white", &s.gyro_white},
      {"sensors", "accel_white", &s.accel_white},
      {"sensors", "mag_white", &s.mag_white},
      {"sensors", "baro_white", &s.baro_white},
      {"sensors", "gyro_bias", &s.gyro_bias},
      {"sensors", "accel_bias", &s.accel_bias},
      {"sensors", "mag_bias", &s.mag_bias},
      {"sensors", "gyro_rw", &s.gyro_rw},
      {"sensors", "accel_rw", &s.accel_rw},
      {"sensors", "mag_rw", &s.mag_rw},
      {"sensors", "gnss_pos_h", &s.gnss_pos_h},
      {"sensors", "gnss_pos_v", &s.gnss_pos_v},
      {"sensors", "gnss_vel", &s.gnss_vel},
      {"noise", "q_att", &n.q_att},
      {"noise", "q_omega", &n.q_omega},
      {"noise", "q_pos_gnss", &n.q_pos_gnss},
      {"noise", "q_pos_vvs", &n.q_pos_vvs},
      {"noise", "q_vel_gnss", &n.q_vel_gnss},
      {"noise", "q_vel_vvs", &n.q_vel_vvs},
      {"noise", "q_force", &n.q_force},
      {"noise", "q_e_gyr", &n.q_e_gyr},
      {"noise", "q_e_acc", &n.q_e_acc},
      {"noise", "q_e_mag", &n.q_e_mag},
      {"noise", "q_b_dev", &n.q_b_dev},
      {"noise", "r_gyro", &n.r_gyro},
      {"noise", "r_accel", &n.r_accel},
      {"noise", "r_mag", &n.r_mag},
      {"initial", "att", &i.att},
      {"initial", "omega", &i.omega},
      {"initial", "pos_h", &i.pos_h},
      {"initial", "pos_v", &i.pos_v},
      {"initial", "vel", &i.vel},
      {"initial", "force", &i.force},
      {"initial", "e_gyr", &i.e_gyr},
      {"initial", "e_acc", &i.e_acc},
      {"initial", "e_mag", &i.e_mag},
      {"initial", "b_dev", &i.b_dev},
      {"vvs", "pos_sigma_factor", &v.pos_sigma_factor},
      {"vvs", "vel_floor", &v.vel_floor},
      {"vvs", "window", &v.window},
      {"vvs", "drift", &v.vo.drift},
      {"vvs", "drift_tau", &v.vo.drift_tau},
      {"vvs", "white_pos", &v.vo.white_pos},
      {"vvs", "att_pull", &v.vo.att_pull},
      {"vvs", "att_noise", &v.vo.att_noise},
      {"vvs", "att_clamp", &v.vo.att_clamp},
      {"run", "baro_window", &c.baro_window},
      {"run", "check_psd", &c.check_psd},
      {"run", "gnss_always", &c.gnss_always},
  };
}

const char* kind_name(MagneticModelKind k) {
  return k == MagneticModelKind::Constant ? "constant" : "dipole";
}

}  // namespace

std::string sim_config_to_json(const SimConfig& cfg) {
  SimConfig c = cfg;
  json j = json::object();
  for (const Field& f : fields(c)) {
    std::visit([&](auto* p) { j[f.section][f.key] = *p; }, f.ref);
  }
  j["magnetic"]["kind"] = kind_name(c.ranges.magnetic.kind);
  const Vec3& b = c.ranges.magnetic.constant_ned;
  j["magnetic"]["constant_ned"] = {b[0], b[1], b[2]};
  return j.dump(2) + "\n";
}

SimConfig parse_sim_config(const std::string& text) {
  SimConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config: top level must be an object");
  }
  auto all = fields(c);
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) {
      throw ConfigError("config: section '" + section + "' must be an object");
    }
    for (const auto& [key, value] : body.items()) {
      if (section == "magnetic" && key == "kind") {
        if (value == "constant") {
          c.ranges.magnetic.kind = MagneticModelKind::Constant;
        } else if (value == "dipole") {
          c.ranges.magnetic.kind = MagneticModelKind::Dipole;
        } else {
          throw ConfigError("config: magnetic.kind must be 'constant' or 'dipole'");
        }
        continue;
      }
      if (section == "magnetic" && key == "constant_ned") {
        if (!value.is_array() || value.size() != 3 || !value[0].is_number() || !value[1].is_number() ||
            !value[2].is_number()) {
          throw ConfigError("config: magnetic.constant_ned must be an array of 3 numbers");
        }
        c.ranges.magnetic.constant_ned = {value[0].get<double>(), value[1].get<double>(), value[2].get<double>()};
        continue;
      }
      auto it = std::find_if(all.begin(), all.end(),
                             [&](const Field& f) { return section == f.section && key == f.key; });
      if (it == all.end()) {
        throw ConfigError("config: unknown key '" + section + "." + key + "'");
      }
      const std::string name = section + "." + key;
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, bool>) {
              if (!value.is_boolean()) {
                throw ConfigError("config: '" + name + "' must be a boolean");
              }
            } else if constexpr (std::is_same_v<T, int>) {
              if (!value.is_number_integer()) {
                throw ConfigError("config: '" + name + "' must be an integer");
              }
            } else {
              if (!value.is_number()) {
                throw ConfigError("config: '" + name + "' must be a number");
              }
            }
            *p = value.get<T>();
          },
          it->ref);
    }
  }
  c.validate();
  return c;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str());
}

}  // namespace vins
