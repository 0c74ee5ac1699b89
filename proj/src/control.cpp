#include "bts/control.hpp"

#include <algorithm>
#include <cmath>

namespace bts {

VehicleState step_vehicle(const VehicleState& s, double accel, double steer, double dt, const VehicleParams& p) {
    steer = std::clamp(steer, -p.steer_max, p.steer_max);
    VehicleState n = s;
    n.x = s.x + s.speed * std::cos(s.heading) * dt;
    n.y = s.y + s.speed * std::sin(s.heading) * dt;
    n.heading = normalize_angle(s.heading + (s.speed / p.wheelbase) * std::tan(steer) * dt);
    n.speed = std::clamp(s.speed + accel * dt, 0.0, p.v_max);
    return n;
}

double pid_speed_control(double target, double measured, PidState& state, double dt, const PidGains& g,
                         const VehicleParams& limits) {
    double e = target - measured;
    double deriv = state.has_prev ? (e - state.prev_error) / dt : 0.0;
    auto output = [&](double integral) { return g.k_ff * target + g.k_p * e + g.k_i * integral + g.k_d * deriv; };
    double candidate = std::clamp(state.integral + e * dt, -g.integral_limit, g.integral_limit);
    double u = output(candidate);
    bool saturating = (u > limits.a_max && e > 0.0) || (u < limits.a_min && e < 0.0);
    if (!saturating) state.integral = candidate;
    u = output(state.integral);
    state.prev_error = e;
    state.has_prev = true;
    return std::clamp(u, limits.a_min, limits.a_max);
}

double stanley_law(double heading_error, double e, double speed, const StanleyGains& gains) {
    return heading_error + std::atan(gains.k * e / (speed + gains.eps_v));
}

TrackingError tracking_error(const Pose& pose, std::span<const Vec2> path, double wheelbase) {
    Vec2 front{pose.x + 0.5 * wheelbase * std::cos(pose.heading), pose.y + 0.5 * wheelbase * std::sin(pose.heading)};
    auto proj = project_onto_polyline(path, front);
    return {normalize_angle(proj.heading - pose.heading), proj.lateral, proj.s};
}

double stanley_steer(const Pose& pose, std::span<const Vec2> path, double speed, const StanleyGains& gains,
                     const VehicleParams& vehicle) {
    if (path.size() < 2) return 0.0;
    TrackingError err = tracking_error(pose, path, vehicle.wheelbase);
    // Being left of the path means the path lies to the right: negate the left-positive offset.
    double steer = stanley_law(err.heading_error, -err.cross_track, speed, gains);
    return std::clamp(steer, -vehicle.steer_max, vehicle.steer_max);
}

double lane_change_offset(double s, double scale, double dy) {
    if (scale <= 0.0) return dy;
    double u = std::clamp(s / scale, 0.0, 1.0);
    return dy * (1.0 - std::cos(std::numbers::pi * u)) / 2.0;
}

FollowLaneController::FollowLaneController(const VehicleState& start, const LaneRec& lane, double target_speed,
                                           double distance)
    : path_(travel_path(lane, start.heading)), target_speed_(target_speed), distance_(distance) {
    start_s_ = project_onto_polyline(path_, {start.x, start.y}).s;
}

ControllerOutput FollowLaneController::step(const VehicleState& state, double dt, const SimConfig& cfg) {
    ControllerOutput out;
    traveled_ = project_onto_polyline(path_, {state.x, state.y}).s - start_s_;
    if (traveled_ >= distance_) {
        out.done = true;
        return out;
    }
    out.controls.accel = pid_speed_control(target_speed_, state.speed, pid_, dt, cfg.pid, cfg.vehicle);
    out.controls.steer = stanley_steer(state.pose(), path_, state.speed, cfg.stanley, cfg.vehicle);
    return out;
}

std::optional<ChangeLaneController> ChangeLaneController::create(const VehicleState& start, const MapGraph& map,
                                                                 const LaneRec& lane, const std::string& direction,
                                                                 double scale, double target_speed) {
    const LaneRec* target = neighbor_lane(map, lane, start.heading, direction);
    if (!target) return std::nullopt;
    ChangeLaneController c;
    c.target_lane_ = target->id;
    c.scale_ = scale;
    c.target_speed_ = target_speed;
    c.source_path_ = travel_path(lane, start.heading);
    std::vector<Vec2> target_path = travel_path(*target, start.heading);
    c.start_s_ = project_onto_polyline(c.source_path_, {start.x, start.y}).s;

    Pose origin = polyline_pose(c.source_path_, c.start_s_);
    c.dy_ = -project_onto_polyline(target_path, origin.position()).lateral;

    constexpr double kSpacing = 0.5;
    int n = std::max(2, static_cast<int>(std::ceil(scale / kSpacing)) + 1);
    for (int i = 0; i < n; ++i) {
        double ds = scale * i / (n - 1);
        Pose p = polyline_pose(c.source_path_, c.start_s_ + ds);
        double off = lane_change_offset(ds, scale, c.dy_);
        c.path_.push_back({p.x - off * std::sin(p.heading), p.y + off * std::cos(p.heading)});
    }
    double end_s = project_onto_polyline(target_path, c.path_.back()).s;
    double acc = 0.0;
    for (std::size_t i = 0; i < target_path.size(); ++i) {
        if (i > 0) acc += (target_path[i] - target_path[i - 1]).norm();
        if (acc > end_s + kSpacing) c.path_.push_back(target_path[i]);
    }
    if (c.path_.size() < 2) {
        Pose p = polyline_pose(target_path, end_s);
        c.path_.push_back({p.x + std::cos(p.heading), p.y + std::sin(p.heading)});
    }
    return c;
}

ControllerOutput ChangeLaneController::step(const VehicleState& state, double dt, const SimConfig& cfg) {
    ControllerOutput out;
    double progress = project_onto_polyline(source_path_, {state.x, state.y}).s - start_s_;
    if (progress >= scale_) {
        out.done = true;
        return out;
    }
    out.controls.accel = pid_speed_control(target_speed_, state.speed, pid_, dt, cfg.pid, cfg.vehicle);
    out.controls.steer = stanley_steer(state.pose(), path_, state.speed, cfg.stanley, cfg.vehicle);
    return out;
}

std::optional<LeadVehicle> find_lead(const std::string& ego, const VehicleState& ego_state,
                                     std::span<const std::pair<std::string, VehicleState>> others,
                                     std::span<const Vec2> ego_path, double lane_width) {
    constexpr double kIntrusionMargin = 0.3;
    double ego_s = project_onto_polyline(ego_path, {ego_state.x, ego_state.y}).s;
    std::optional<LeadVehicle> lead;
    for (const auto& [name, other] : others) {
        if (name == ego) continue;
        auto proj = project_onto_polyline(ego_path, {other.x, other.y});
        if (proj.s <= ego_s) continue;
        if (std::abs(proj.lateral) >= lane_width / 2.0 + other.width / 2.0 - kIntrusionMargin) continue;
        double gap = proj.s - ego_s - (ego_state.length + other.length) / 2.0;
        if (!lead || gap < lead->gap) lead = LeadVehicle{name, gap};
    }
    return lead;
}

double acc_target_speed(double cruise, double ego_speed, std::optional<double> gap, double headway, double standstill) {
    if (!gap) return cruise;
    double desired = ego_speed * headway + standstill;
    if (*gap >= desired) return cruise;
    if (*gap <= standstill) return 0.0;
    return cruise * (*gap - standstill) / (desired - standstill);
}

EgoPolicy::EgoPolicy(const VehicleState& start, const LaneRec& lane, double lane_width)
    : path_(travel_path(lane, start.heading)), lane_width_(lane_width) {}

Controls EgoPolicy::step(const std::string& ego, const VehicleState& ego_state,
                         std::span<const std::pair<std::string, VehicleState>> others, double dt, const SimConfig& cfg) {
    auto lead = find_lead(ego, ego_state, others, path_, lane_width_);
    std::optional<double> gap;
    if (lead) gap = lead->gap;
    last_target_ = acc_target_speed(cfg.ego_cruise_speed, ego_state.speed, gap, cfg.headway, cfg.standstill);
    Controls c;
    c.accel = pid_speed_control(last_target_, ego_state.speed, pid_, dt, cfg.pid, cfg.vehicle);
    c.steer = stanley_steer(ego_state.pose(), path_, ego_state.speed, cfg.stanley, cfg.vehicle);
    return c;
}

} // namespace bts
