#include "bts/config.hpp"

#include <set>
#include <stdexcept>

namespace bts {

using nlohmann::json;

json to_json(const SimConfig& c) {
    return {
        {"dt", c.dt},
        {"timeout", c.timeout},
        {"leaf_timeout", c.leaf_timeout},
        {"vehicle",
         {{"length", c.vehicle.length},
          {"width", c.vehicle.width},
          {"wheelbase", c.vehicle.wheelbase},
          {"v_max", c.vehicle.v_max},
          {"a_min", c.vehicle.a_min},
          {"a_max", c.vehicle.a_max},
          {"steer_max", c.vehicle.steer_max}}},
        {"pedestrian_size", c.pedestrian_size},
        {"pid",
         {{"k_ff", c.pid.k_ff},
          {"k_p", c.pid.k_p},
          {"k_i", c.pid.k_i},
          {"k_d", c.pid.k_d},
          {"integral_limit", c.pid.integral_limit}}},
        {"stanley", {{"k", c.stanley.k}, {"eps_v", c.stanley.eps_v}}},
        {"ego_cruise_speed", c.ego_cruise_speed},
        {"headway", c.headway},
        {"standstill", c.standstill},
        {"speed_unit", c.speed_unit == SpeedUnit::Kmh ? "kmh" : "mps"},
    };
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (!allowed.count(k)) throw std::invalid_argument("unknown sim config key '" + where + k + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

SimConfig sim_config_from_json(const json& j) {
    SimConfig c;
    if (j.is_null()) return c;
    reject_unknown(j,
                   {"dt", "timeout", "leaf_timeout", "vehicle", "pedestrian_size", "pid", "stanley", "ego_cruise_speed",
                    "headway", "standstill", "speed_unit"},
                   "");
    read(j, "dt", c.dt);
    read(j, "timeout", c.timeout);
    read(j, "leaf_timeout", c.leaf_timeout);
    read(j, "pedestrian_size", c.pedestrian_size);
    read(j, "ego_cruise_speed", c.ego_cruise_speed);
    read(j, "headway", c.headway);
    read(j, "standstill", c.standstill);
    if (j.contains("vehicle")) {
        const json& v = j.at("vehicle");
        reject_unknown(v, {"length", "width", "wheelbase", "v_max", "a_min", "a_max", "steer_max"}, "vehicle.");
        read(v, "length", c.vehicle.length);
        read(v, "width", c.vehicle.width);
        read(v, "wheelbase", c.vehicle.wheelbase);
        read(v, "v_max", c.vehicle.v_max);
        read(v, "a_min", c.vehicle.a_min);
        read(v, "a_max", c.vehicle.a_max);
        read(v, "steer_max", c.vehicle.steer_max);
    }
    if (j.contains("pid")) {
        const json& p = j.at("pid");
        reject_unknown(p, {"k_ff", "k_p", "k_i", "k_d", "integral_limit"}, "pid.");
        read(p, "k_ff", c.pid.k_ff);
        read(p, "k_p", c.pid.k_p);
        read(p, "k_i", c.pid.k_i);
        read(p, "k_d", c.pid.k_d);
        read(p, "integral_limit", c.pid.integral_limit);
    }
    if (j.contains("stanley")) {
        const json& s = j.at("stanley");
        reject_unknown(s, {"k", "eps_v"}, "stanley.");
        read(s, "k", c.stanley.k);
        read(s, "eps_v", c.stanley.eps_v);
    }
    if (j.contains("speed_unit")) {
        auto u = j.at("speed_unit").get<std::string>();
        if (u == "kmh") {
            c.speed_unit = SpeedUnit::Kmh;
        } else if (u == "mps") {
            c.speed_unit = SpeedUnit::Mps;
        } else {
            throw std::invalid_argument("speed_unit must be \"kmh\" or \"mps\"");
        }
    }
    if (!(c.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(c.timeout > 0.0)) throw std::invalid_argument("timeout must be positive");
    return c;
}

} // namespace bts
