#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bts/config.hpp"
#include "bts/geometry.hpp"
#include "bts/map.hpp"

namespace bts {

struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    double speed = 0.0;
    double length = 4.5;
    double width = 2.0;

    Pose pose() const { return {x, y, heading}; }
    OrientedBox box() const { return {{x, y}, heading, length, width}; }
    bool operator==(const VehicleState&) const = default;
};

struct Controls {
    double accel = 0.0;
    double steer = 0.0;
    bool operator==(const Controls&) const = default;
};

// Kinematic bicycle, explicit Euler. Speed is clamped to [0, v_max]; steer to ±steer_max.
VehicleState step_vehicle(const VehicleState& s, double accel, double steer, double dt, const VehicleParams& p);

struct PidState {
    double integral = 0.0;
    double prev_error = 0.0;
    bool has_prev = false;
};

// Feed-forward PID on speed. Integration pauses while the output saturates
// in the direction of the error, and the integral is bounded by integral_limit.
double pid_speed_control(double target, double measured, PidState& state, double dt, const PidGains& gains,
                         const VehicleParams& limits);

// steer = heading_error + atan(k * e / (speed + eps_v)); `e` positive when the path lies to the left.
double stanley_law(double heading_error, double e, double speed, const StanleyGains& gains);

struct TrackingError {
    double heading_error = 0.0; // path heading minus vehicle heading, wrapped
    double cross_track = 0.0;   // front axle offset from the path, left of the path positive
    double s = 0.0;             // arc length of the front axle projection
};

TrackingError tracking_error(const Pose& pose, std::span<const Vec2> path, double wheelbase);

// Stanley steering against `path`, clamped to ±steer_max.
double stanley_steer(const Pose& pose, std::span<const Vec2> path, double speed, const StanleyGains& gains,
                     const VehicleParams& vehicle);

// Lateral offset of the cosine lane-change blend at longitudinal progress s.
double lane_change_offset(double s, double scale, double dy);

struct ControllerOutput {
    Controls controls;
    bool done = false;
};

class FollowLaneController {
public:
    FollowLaneController(const VehicleState& start, const LaneRec& lane, double target_speed, double distance);

    ControllerOutput step(const VehicleState& state, double dt, const SimConfig& cfg);
    double traveled() const { return traveled_; }
    const std::vector<Vec2>& path() const { return path_; }

private:
    std::vector<Vec2> path_;
    double target_speed_;
    double distance_;
    double start_s_;
    double traveled_ = 0.0;
    PidState pid_;
};

class ChangeLaneController {
public:
    // Returns nullopt when the lane has no neighbor in `direction` relative to the actor's travel.
    static std::optional<ChangeLaneController> create(const VehicleState& start, const MapGraph& map, const LaneRec& lane,
                                                      const std::string& direction, double scale, double target_speed);

    ControllerOutput step(const VehicleState& state, double dt, const SimConfig& cfg);
    const std::string& target_lane() const { return target_lane_; }
    const std::vector<Vec2>& path() const { return path_; }
    double lateral_shift() const { return dy_; }

private:
    ChangeLaneController() = default;

    std::vector<Vec2> source_path_;
    std::vector<Vec2> path_;
    std::string target_lane_;
    double scale_ = 0.0;
    double dy_ = 0.0;
    double target_speed_ = 0.0;
    double start_s_ = 0.0;
    PidState pid_;
};

struct LeadVehicle {
    std::string name;
    double gap = 0.0; // bumper-to-bumper distance along the ego path
};

// Closest vehicle ahead whose box intrudes into the ego lane.
std::optional<LeadVehicle> find_lead(const std::string& ego, const VehicleState& ego_state,
                                     std::span<const std::pair<std::string, VehicleState>> others,
                                     std::span<const Vec2> ego_path, double lane_width);

// Cruise speed reduced linearly to 0 as the gap shrinks from v*headway + standstill to standstill.
double acc_target_speed(double cruise, double ego_speed, std::optional<double> gap, double headway, double standstill);

class EgoPolicy {
public:
    EgoPolicy(const VehicleState& start, const LaneRec& lane, double lane_width);

    Controls step(const std::string& ego, const VehicleState& ego_state,
                  std::span<const std::pair<std::string, VehicleState>> others, double dt, const SimConfig& cfg);
    double last_target_speed() const { return last_target_; }

private:
    std::vector<Vec2> path_;
    double lane_width_;
    PidState pid_;
    double last_target_ = 0.0;
};

} // namespace bts
