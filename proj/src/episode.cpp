#include "bts/episode.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace bts {

const char* to_string(Termination t) {
    switch (t) {
    case Termination::Running: return "running";
    case Termination::RootSuccess: return "success";
    case Termination::RootFailure: return "failure";
    case Termination::Collision: return "collision";
    case Termination::OracleViolation: return "oracle_violation";
    case Termination::Timeout: return "timeout";
    }
    return "?";
}

namespace {

double initial_speed(const ActorDecl& decl, bool is_ego, const SimConfig& cfg) {
    for (const auto& [name, lit] : decl.attributes)
        if (name == "speed" && lit.kind == Literal::Kind::Number) return lit.number / cfg.speed_to_unit();
    return is_ego ? cfg.ego_cruise_speed : 0.0;
}

void collect_channels(const Expr& e, std::vector<std::pair<std::string, std::string>>& out) {
    if (e.kind == Expr::Kind::Attribute) {
        out.emplace_back(e.actors.at(0), e.name);
        return;
    }
    for (const auto& c : e.children) collect_channels(c, out);
}

} // namespace

Episode::Episode(std::shared_ptr<const ValidatedScenario> scenario, const MapGraph& map, const SimConfig& config,
                 std::uint64_t seed)
    : scenario_(std::move(scenario)), map_(map), config_(config), space_(extract_parameter_space(*scenario_)),
      bt_(scenario_->ast.execute) {
    values_.assign(space_.size(), std::numeric_limits<double>::quiet_NaN());
    executed_.assign(space_.size(), 0);

    std::mt19937_64 rng(seed);
    const auto& decls = scenario_->ast.init_block;
    std::map<std::string, Pose> placed;
    std::vector<bool> done(decls.size(), false);
    for (std::size_t pass = 0; pass < decls.size(); ++pass) {
        bool progress = false;
        for (std::size_t i = 0; i < decls.size(); ++i) {
            if (done[i]) continue;
            const auto& d = decls[i];
            if (d.position.kind == PositionSpec::Kind::Relative && !placed.count(d.position.anchor)) continue;
            placed[d.name] = resolve_position(d.position, map_, scenario_->bindings, placed, rng);
            done[i] = progress = true;
        }
        if (!progress) break;
    }
    for (std::size_t i = 0; i < decls.size(); ++i)
        if (!done[i]) throw PositionError("cannot place actor '" + decls[i].name + "'");

    for (const auto& d : decls) {
        order_.push_back(d.name);
        ActorState a;
        a.kind = d.kind;
        const Pose& p = placed.at(d.name);
        a.state.x = p.x;
        a.state.y = p.y;
        a.state.heading = p.heading;
        a.state.speed = initial_speed(d, d.kind == ActorKind::AutCar, config_);
        if (d.kind == ActorKind::Pedestrian) {
            a.state.length = a.state.width = config_.pedestrian_size;
        } else {
            a.state.length = config_.vehicle.length;
            a.state.width = config_.vehicle.width;
        }
        if (const LaneRec* lane = lane_for_pose(map_, p)) a.lane = lane->id;
        world_.actors.emplace(d.name, a);
    }

    const ActorState& ego = world_.actor(scenario_->ego);
    if (const LaneRec* lane = map_.find_lane(ego.lane)) {
        lane_width_ = lane->width;
        ego_policy_.emplace(ego.state, *lane, lane->width);
        ego_path_ = travel_path(*lane, ego.state.heading);
    }

    for (const auto& o : scenario_->ast.oracle_block) {
        if (o.kind == OracleDecl::Kind::Periodic) {
            periodic_.push_back(&o.expr);
        } else {
            collect_channels(o.expr, channels_);
        }
    }
    for (const auto& [actor, attr] : channels_) trace_.channels.push_back(actor + "." + attr);

    min_separation_ = ego_separation();
    record_row();
}

int Episode::current_step() const { return bt_.step_index(); }

void Episode::check_value(int slot, double v) const {
    const auto& s = space_.slots.at(static_cast<std::size_t>(slot));
    if (!(v >= s.lo && v <= s.hi)) {
        std::ostringstream os;
        os << "slot " << slot + 1 << " (" << s.actor << '.' << s.name << ") value " << v << " outside [" << s.lo
           << ", " << s.hi << ']';
        throw OutOfRange(slot + 1, os.str());
    }
}

void Episode::set_step_values(std::span<const double> values) {
    if (done()) throw Finished();
    int step = current_step();
    auto count = static_cast<std::size_t>(space_.step_counts.at(static_cast<std::size_t>(step - 1)));
    int offset = space_.step_offsets.at(static_cast<std::size_t>(step - 1));
    if (values.size() < count)
        throw OutOfRange(offset + static_cast<int>(values.size()) + 1,
                         "missing slot " + std::to_string(offset + static_cast<int>(values.size()) + 1));
    for (std::size_t i = 0; i < count; ++i) {
        check_value(offset + static_cast<int>(i), values[i]);
        values_[static_cast<std::size_t>(offset) + i] = values[i];
    }
}

void Episode::set_all_values(std::span<const double> values) {
    if (values.size() < values_.size())
        throw OutOfRange(static_cast<int>(values.size()) + 1, "missing slot " + std::to_string(values.size() + 1));
    if (values.size() > values_.size())
        throw OutOfRange(static_cast<int>(values_.size()) + 1,
                         "expected " + std::to_string(values_.size()) + " values, got " + std::to_string(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        check_value(static_cast<int>(i), values[i]);
        values_[i] = values[i];
    }
}

double Episode::ego_separation() const {
    const ActorState& ego = world_.actor(scenario_->ego);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [name, a] : world_.actors) {
        if (name == scenario_->ego) continue;
        best = std::min(best, box_distance(ego.state.box(), a.state.box()));
    }
    return best;
}

void Episode::record_row() {
    TraceRow row;
    row.time = world_.time;
    for (const auto& [name, a] : world_.actors)
        row.actors[name] = {a.state.x, a.state.y, a.state.heading, a.state.speed};
    EvalContext ctx{config_.speed_to_unit()};
    for (std::size_t i = 0; i < channels_.size(); ++i)
        row.channels[trace_.channels[i]] = read_channel(world_, channels_[i].first, channels_[i].second, ctx);
    trace_.rows.push_back(std::move(row));
}

void Episode::tick() {
    int step = bt_.step_index();
    if (step != last_step_started_) {
        last_step_started_ = step;
        if (static_cast<std::size_t>(step) <= space_.step_counts.size()) {
            int offset = space_.step_offsets[static_cast<std::size_t>(step - 1)];
            for (int i = 0; i < space_.step_counts[static_cast<std::size_t>(step - 1)]; ++i)
                executed_[static_cast<std::size_t>(offset + i)] = 1;
        }
        trace_.events.push_back({TraceEvent::Kind::StepStart, world_.time, step, 0, {}, {}});
    }

    BtEnvironment env{map_, config_, values_};
    TickResult tr = bt_.tick(world_, config_.dt, env);
    if (tr.status == TickStatus::Success) {
        termination_ = Termination::RootSuccess;
        return;
    }
    if (tr.status == TickStatus::Failure) {
        termination_ = Termination::RootFailure;
        return;
    }

    std::vector<std::pair<std::string, VehicleState>> others;
    for (const auto& name : order_)
        if (name != scenario_->ego) others.emplace_back(name, world_.actors.at(name).state);

    std::map<std::string, Controls> controls = std::move(tr.controls);
    const ActorState& ego = world_.actor(scenario_->ego);
    if (ego_policy_) controls[scenario_->ego] = ego_policy_->step(scenario_->ego, ego.state, others, config_.dt, config_);

    for (const auto& name : order_) {
        ActorState& a = world_.actors.at(name);
        if (a.kind == ActorKind::Pedestrian) continue;
        Controls c;
        if (auto it = controls.find(name); it != controls.end()) {
            c = it->second;
        } else if (const LaneRec* lane = map_.find_lane(a.lane)) {
            auto path = travel_path(*lane, a.state.heading);
            c.steer = stanley_steer(a.state.pose(), path, a.state.speed, config_.stanley, config_.vehicle);
        }
        a.state = step_vehicle(a.state, c.accel, c.steer, config_.dt, config_.vehicle);
    }
    world_.time += config_.dt;

    for (std::size_t i = 0; i < order_.size(); ++i) {
        for (std::size_t j = i + 1; j < order_.size(); ++j) {
            const auto& a = order_[i] < order_[j] ? order_[i] : order_[j];
            const auto& b = order_[i] < order_[j] ? order_[j] : order_[i];
            if (world_.collided_pairs.count({a, b})) continue;
            if (boxes_overlap(world_.actors.at(a).state.box(), world_.actors.at(b).state.box())) {
                world_.collided_pairs.insert({a, b});
                trace_.events.push_back({TraceEvent::Kind::Collision, world_.time, 0, 0, a, b});
                if (!first_collision_) first_collision_ = world_.time;
            }
        }
    }

    EvalContext ctx{config_.speed_to_unit()};
    bool violated = false;
    for (std::size_t i = 0; i < periodic_.size(); ++i) {
        if (eval_bool(*periodic_[i], world_, ctx)) {
            violated = true;
            trace_.events.push_back({TraceEvent::Kind::OracleViolation, world_.time, 0, static_cast<int>(i), {}, {}});
        }
    }
    min_separation_ = std::min(min_separation_, first_collision_ ? 0.0 : ego_separation());
    record_row();

    if (first_collision_) {
        termination_ = Termination::Collision;
    } else if (violated) {
        termination_ = Termination::OracleViolation;
    } else if (world_.time >= config_.timeout - 1e-9) {
        termination_ = Termination::Timeout;
    }
}

StepOutcome Episode::run_step() {
    if (done()) throw Finished();
    StepOutcome out;
    out.step_index = current_step();
    if (outcomes_.empty()) out.min_separation = ego_separation();
    std::size_t collisions_before = world_.collided_pairs.size();
    while (!done() && current_step() == out.step_index) {
        tick();
        if (termination_ == Termination::RootSuccess || termination_ == Termination::RootFailure) break;
        ++out.sim_ticks;
        out.min_separation = std::min(out.min_separation, ego_separation());
    }
    out.collided = world_.collided_pairs.size() > collisions_before;
    if (out.collided) out.min_separation = 0.0;
    outcomes_.push_back(out);
    return out;
}

void Episode::run_to_end() {
    while (!done()) run_step();
}

EpisodeResult Episode::result() const {
    EpisodeResult r;
    r.collided = first_collision_.has_value();
    r.first_collision_time = first_collision_;
    r.oracle_violated = std::any_of(trace_.events.begin(), trace_.events.end(), [](const TraceEvent& e) {
        return e.kind == TraceEvent::Kind::OracleViolation;
    });
    r.min_separation = r.collided ? 0.0 : min_separation_;
    r.executed_mask = executed_;
    r.step_outcomes = outcomes_;
    r.termination = termination_;
    r.duration = world_.time;
    r.trace = trace_;
    return r;
}

EpisodeResult run_episode(const BoundScenario& bound, const MapGraph& map, const SimConfig& config,
                          std::uint64_t seed) {
    Episode ep(bound.logical, map, config, seed);
    ep.set_all_values(bound.values);
    ep.run_to_end();
    return ep.result();
}

namespace {

nlohmann::json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::json event_json(const TraceEvent& e) {
    nlohmann::json j;
    j["t"] = e.time;
    switch (e.kind) {
    case TraceEvent::Kind::Collision:
        j["type"] = "collision";
        j["actors"] = {e.a, e.b};
        break;
    case TraceEvent::Kind::StepStart:
        j["type"] = "step";
        j["step"] = e.step;
        break;
    case TraceEvent::Kind::OracleViolation:
        j["type"] = "oracle_violation";
        j["oracle"] = e.oracle;
        break;
    }
    return j;
}

} // namespace

void write_trace_jsonl(std::ostream& os, const Trace& trace) {
    for (const auto& row : trace.rows) {
        nlohmann::json j;
        j["t"] = row.time;
        nlohmann::json actors = nlohmann::json::object();
        for (const auto& [name, a] : row.actors)
            actors[name] = {{"x", a.x}, {"y", a.y}, {"heading", a.heading}, {"speed", a.speed}};
        j["actors"] = std::move(actors);
        nlohmann::json rec = nlohmann::json::object();
        for (const auto& [k, v] : row.channels) rec[k] = v;
        j["rec"] = std::move(rec);
        os << j.dump() << '\n';
    }
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : trace.events) events.push_back(event_json(e));
    os << nlohmann::json{{"events", events}}.dump() << '\n';
}

Trace read_trace_jsonl(std::istream& is) {
    Trace trace;
    std::string line;
    bool have_events = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (have_events) throw std::runtime_error("trace has rows after the events line");
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.contains("events")) {
            for (const auto& e : j.at("events")) {
                TraceEvent ev;
                ev.time = e.at("t").get<double>();
                auto type = e.at("type").get<std::string>();
                if (type == "collision") {
                    ev.kind = TraceEvent::Kind::Collision;
                    ev.a = e.at("actors").at(0).get<std::string>();
                    ev.b = e.at("actors").at(1).get<std::string>();
                } else if (type == "step") {
                    ev.kind = TraceEvent::Kind::StepStart;
                    ev.step = e.at("step").get<int>();
                } else if (type == "oracle_violation") {
                    ev.kind = TraceEvent::Kind::OracleViolation;
                    ev.oracle = e.at("oracle").get<int>();
                } else {
                    throw std::runtime_error("unknown trace event '" + type + "'");
                }
                trace.events.push_back(std::move(ev));
            }
            have_events = true;
            continue;
        }
        TraceRow row;
        row.time = j.at("t").get<double>();
        for (const auto& [name, a] : j.at("actors").items())
            row.actors[name] = {a.at("x").get<double>(), a.at("y").get<double>(), a.at("heading").get<double>(),
                                a.at("speed").get<double>()};
        for (const auto& [k, v] : j.at("rec").items()) row.channels[k] = v.get<double>();
        if (trace.rows.empty())
            for (const auto& [k, v] : row.channels) trace.channels.push_back(k);
        trace.rows.push_back(std::move(row));
    }
    if (!have_events) throw std::runtime_error("trace is missing its events line");
    return trace;
}

std::string trace_to_jsonl(const Trace& trace) {
    std::ostringstream os;
    write_trace_jsonl(os, trace);
    return os.str();
}

nlohmann::json to_json(const EpisodeResult& r, bool include_trace) {
    nlohmann::json j;
    j["collided"] = r.collided;
    j["first_collision_time"] = r.first_collision_time ? nlohmann::json(*r.first_collision_time) : nlohmann::json(nullptr);
    j["oracle_violated"] = r.oracle_violated;
    j["min_separation"] = number_or_null(r.min_separation);
    j["termination"] = to_string(r.termination);
    j["duration"] = r.duration;
    j["executed_mask"] = r.executed_mask;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.step_outcomes)
        steps.push_back({{"step", s.step_index},
                         {"min_separation", number_or_null(s.min_separation)},
                         {"collided", s.collided},
                         {"sim_ticks", s.sim_ticks}});
    j["steps"] = std::move(steps);
    if (include_trace) j["trace_rows"] = r.trace.rows.size();
    return j;
}

} // namespace bts
