#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bts/bt.hpp"
#include "bts/config.hpp"
#include "bts/map.hpp"
#include "bts/scenario.hpp"
#include "bts/world.hpp"

namespace bts {

struct TraceActor {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    double speed = 0.0; // m/s
    bool operator==(const TraceActor&) const = default;
};

struct TraceRow {
    double time = 0.0;
    std::map<std::string, TraceActor> actors;
    std::map<std::string, double> channels;
    bool operator==(const TraceRow&) const = default;
};

struct TraceEvent {
    enum class Kind { Collision, StepStart, OracleViolation };
    Kind kind = Kind::Collision;
    double time = 0.0;
    int step = 0;         // StepStart
    int oracle = 0;       // OracleViolation, 0-based index among periodic oracles
    std::string a, b;     // Collision
    bool operator==(const TraceEvent&) const = default;
};

struct Trace {
    std::vector<std::string> channels; // record oracle channels, e.g. "car2.speed"
    std::vector<TraceRow> rows;
    std::vector<TraceEvent> events;
    bool operator==(const Trace&) const = default;
};

void write_trace_jsonl(std::ostream& os, const Trace& trace);
std::string trace_to_jsonl(const Trace& trace);
Trace read_trace_jsonl(std::istream& is);

struct StepOutcome {
    int step_index = 1;
    double min_separation = std::numeric_limits<double>::infinity();
    bool collided = false;
    int sim_ticks = 0;
    bool operator==(const StepOutcome&) const = default;
};

enum class Termination { Running, RootSuccess, RootFailure, Collision, OracleViolation, Timeout };
const char* to_string(Termination t);

struct EpisodeResult {
    bool collided = false;
    std::optional<double> first_collision_time;
    bool oracle_violated = false;
    double min_separation = std::numeric_limits<double>::infinity(); // ego to nearest other actor, hull distance
    std::vector<std::uint8_t> executed_mask;
    std::vector<StepOutcome> step_outcomes;
    Termination termination = Termination::Running;
    double duration = 0.0;
    Trace trace;
    bool operator==(const EpisodeResult&) const = default;
};

// A single simulation that can be advanced one behavior-tree step at a time.
// Before each run_step() the values of the current step's slots must be set.
class Episode {
public:
    Episode(std::shared_ptr<const ValidatedScenario> scenario, const MapGraph& map, const SimConfig& config,
            std::uint64_t seed);

    const ParameterSpace& space() const { return space_; }
    const WorldState& world() const { return world_; }
    const MapGraph& map() const { return map_; }
    const SimConfig& config() const { return config_; }
    const std::string& ego() const { return scenario_->ego; }

    bool done() const { return termination_ != Termination::Running; }
    int current_step() const; // 1-based; only meaningful while !done()

    // Binds the current step's slots from the leading values; surplus entries are ignored.
    void set_step_values(std::span<const double> values);
    // Binds every slot at once (used by whole-vector runs).
    void set_all_values(std::span<const double> values);

    StepOutcome run_step();
    void run_to_end();

    EpisodeResult result() const;
    std::string bt_dump() const { return bt_.dump(); }

    // Ego's lane centerline in travel order; used by observation encoders.
    const std::vector<Vec2>& ego_path() const { return ego_path_; }
    double lane_width() const { return lane_width_; }

private:
    void tick();
    void record_row();
    double ego_separation() const;
    void check_value(int slot, double v) const;

    std::shared_ptr<const ValidatedScenario> scenario_;
    const MapGraph& map_;
    SimConfig config_;
    ParameterSpace space_;
    BtInstance bt_;
    WorldState world_;
    std::vector<double> values_;
    std::vector<std::uint8_t> executed_;
    std::vector<std::string> order_; // actor iteration order (declaration order)
    std::optional<EgoPolicy> ego_policy_;
    std::vector<Vec2> ego_path_;
    double lane_width_ = 3.5;
    std::vector<const Expr*> periodic_;
    std::vector<std::pair<std::string, std::string>> channels_;
    Trace trace_;
    std::vector<StepOutcome> outcomes_;
    Termination termination_ = Termination::Running;
    std::optional<double> first_collision_;
    double min_separation_ = std::numeric_limits<double>::infinity();
    int last_step_started_ = 0;
};

EpisodeResult run_episode(const BoundScenario& bound, const MapGraph& map, const SimConfig& config,
                          std::uint64_t seed);

nlohmann::json to_json(const EpisodeResult& r, bool include_trace = false);

} // namespace bts
