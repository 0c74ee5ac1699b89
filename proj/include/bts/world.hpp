#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "bts/ast.hpp"
#include "bts/control.hpp"

namespace bts {

struct ActorState {
    ActorKind kind = ActorKind::Car;
    VehicleState state;
    std::string lane; // current lane id, empty when off the map
};

struct WorldState {
    double time = 0.0;
    std::map<std::string, ActorState> actors;
    std::set<std::pair<std::string, std::string>> collided_pairs; // (a, b) with a < b

    bool is_collided(const std::string& actor) const;
    const ActorState& actor(const std::string& name) const;
};

class UnknownActor : public std::runtime_error {
public:
    explicit UnknownActor(const std::string& name) : std::runtime_error("unknown actor '" + name + "'") {}
};

struct ConditionValue {
    enum class Kind { Bool, Number, Text };
    Kind kind = Kind::Bool;
    bool truth = false;
    double number = 0.0;
    std::string text;
};

struct EvalContext {
    double speed_to_unit = 3.6; // m/s -> declared speed unit
};

// distance() is center-to-center in meters; actor.speed is reported in the declared unit.
// && and || short-circuit. Interval nodes must have been bound beforehand.
ConditionValue eval_condition(const Expr& expr, const WorldState& world, const EvalContext& ctx);
bool eval_bool(const Expr& expr, const WorldState& world, const EvalContext& ctx);

// Value of a record channel such as ego.speed.
double read_channel(const WorldState& world, const std::string& actor, const std::string& attribute,
                    const EvalContext& ctx);

} // namespace bts
