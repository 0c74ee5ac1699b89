#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace bts {

struct VehicleParams {
    double length = 4.5;
    double width = 2.0;
    double wheelbase = 2.8;
    double v_max = 40.0;
    double a_min = -6.0;
    double a_max = 3.0;
    double steer_max = 0.6;
};

struct PidGains {
    double k_ff = 0.0;
    double k_p = 0.8;
    double k_i = 0.1;
    double k_d = 0.0;
    double integral_limit = 10.0; // |integral of error| bound, m
};

struct StanleyGains {
    double k = 2.5;
    double eps_v = 0.1;
};

enum class SpeedUnit { Kmh, Mps };

struct SimConfig {
    double dt = 0.05;
    double timeout = 120.0;
    double leaf_timeout = 30.0;
    VehicleParams vehicle;
    double pedestrian_size = 0.6;
    PidGains pid;
    StanleyGains stanley;
    double ego_cruise_speed = 20.0 / 3.6; // m/s
    double headway = 1.5;                 // s
    double standstill = 5.0;              // m
    SpeedUnit speed_unit = SpeedUnit::Kmh;

    // Factor converting m/s into the scenario's declared speed unit.
    double speed_to_unit() const { return speed_unit == SpeedUnit::Kmh ? 3.6 : 1.0; }
};

nlohmann::json to_json(const SimConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
SimConfig sim_config_from_json(const nlohmann::json& j);

} // namespace bts
