#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bts/ast.hpp"
#include "bts/config.hpp"
#include "bts/control.hpp"
#include "bts/map.hpp"
#include "bts/scenario.hpp"
#include "bts/world.hpp"

namespace bts {

enum class TickStatus { Running, Success, Failure };
const char* to_string(TickStatus s);

struct TickResult {
    TickStatus status = TickStatus::Running;
    std::map<std::string, Controls> controls; // only actors with an active action
};

// What a tick may read: the map, tuning, and the slot values of steps that have started.
struct BtEnvironment {
    const MapGraph& map;
    const SimConfig& config;
    std::span<const double> values;
};

class BtInstance {
public:
    // Slot indices are assigned in canonical order, so `values` in BtEnvironment
    // follow ParameterSpace ordering. A leaf reads its slots on its first tick.
    explicit BtInstance(const BtAstNode& root);

    TickResult tick(WorldState& world, double dt, const BtEnvironment& env);

    // 1-based ordinal of the root child currently running; steps_total()+1 once the root finished.
    int step_index() const;
    int steps_total() const { return steps_total_; }
    bool finished() const { return status_ != TickStatus::Running; }
    TickStatus status() const { return status_; }
    int serial_cursor() const; // 1-based cursor of the root serial, 1 for other roots
    std::string dump() const;

private:
    enum class Phase { Idle, Waiting, Active, Succeeded, Failed };

    struct Leaf {
        std::string actor;
        std::string action;
        std::vector<ParamBinding> params;
        std::optional<Expr> pre;
        std::optional<Expr> post;
        std::vector<int> slots;
        Phase phase = Phase::Idle;
        double start_time = 0.0;
        double target_speed = 0.0; // m/s
        double distance = 0.0;     // m
        std::string direction;
        std::variant<std::monostate, FollowLaneController, ChangeLaneController> controller;
    };

    struct Node {
        BtAstNode::Kind kind = BtAstNode::Kind::Serial;
        std::vector<std::size_t> children;
        std::size_t cursor = 0;
        std::vector<TickStatus> child_status;
        TickStatus status = TickStatus::Running;
        Leaf leaf;
    };

    std::size_t build(const BtAstNode& n, int& next_slot);
    TickStatus tick_node(std::size_t id, WorldState& world, double dt, const BtEnvironment& env, TickResult& out);
    TickStatus tick_leaf(Leaf& leaf, WorldState& world, double dt, const BtEnvironment& env, TickResult& out);
    void materialize(Leaf& leaf, const BtEnvironment& env);
    void dump_node(std::size_t id, int depth, std::string& out) const;

    std::vector<Node> nodes_;
    std::size_t root_ = 0;
    int steps_total_ = 1;
    TickStatus status_ = TickStatus::Running;
};

BtInstance instantiate(const BoundScenario& scenario);

class Finished : public std::logic_error {
public:
    Finished() : std::logic_error("behavior tree already finished") {}
};

struct StepMask {
    int step_index = 1;
    std::vector<std::uint8_t> bits; // length P_max
};

// Mask of the current step, padded to the space's maximum slots per step.
StepMask current_step_mask(const BtInstance& instance, const ParameterSpace& space);
StepMask step_mask(int step, const ParameterSpace& space);

} // namespace bts
