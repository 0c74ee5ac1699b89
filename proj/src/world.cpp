#include "bts/world.hpp"

#include <cmath>

namespace bts {

bool WorldState::is_collided(const std::string& actor) const {
    for (const auto& [a, b] : collided_pairs)
        if (a == actor || b == actor) return true;
    return false;
}

const ActorState& WorldState::actor(const std::string& name) const {
    auto it = actors.find(name);
    if (it == actors.end()) throw UnknownActor(name);
    return it->second;
}

double read_channel(const WorldState& world, const std::string& actor, const std::string& attribute,
                    const EvalContext& ctx) {
    const VehicleState& s = world.actor(actor).state;
    if (attribute == "speed") return s.speed * ctx.speed_to_unit;
    if (attribute == "x") return s.x;
    if (attribute == "y") return s.y;
    if (attribute == "heading") return s.heading;
    throw std::invalid_argument("unknown channel '" + attribute + "'");
}

namespace {

ConditionValue boolean(bool b) {
    ConditionValue v;
    v.kind = ConditionValue::Kind::Bool;
    v.truth = b;
    return v;
}

ConditionValue number(double x) {
    ConditionValue v;
    v.kind = ConditionValue::Kind::Number;
    v.number = x;
    return v;
}

bool compare(CompareOp op, double a, double b) {
    switch (op) {
    case CompareOp::Lt: return a < b;
    case CompareOp::Gt: return a > b;
    case CompareOp::Le: return a <= b;
    case CompareOp::Ge: return a >= b;
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return a != b;
    }
    return false;
}

} // namespace

ConditionValue eval_condition(const Expr& e, const WorldState& world, const EvalContext& ctx) {
    switch (e.kind) {
    case Expr::Kind::Number: return number(e.number);
    case Expr::Kind::Interval: throw std::logic_error("interval threshold evaluated before binding");
    case Expr::Kind::Text: {
        ConditionValue v;
        v.kind = ConditionValue::Kind::Text;
        v.text = e.name;
        return v;
    }
    case Expr::Kind::Attribute: return number(read_channel(world, e.actors.at(0), e.name, ctx));
    case Expr::Kind::Call:
        if (e.name == "distance") {
            const VehicleState& a = world.actor(e.actors.at(0)).state;
            const VehicleState& b = world.actor(e.actors.at(1)).state;
            return number(std::hypot(a.x - b.x, a.y - b.y));
        }
        if (e.name == "isCollided") {
            world.actor(e.actors.at(0));
            return boolean(world.is_collided(e.actors.at(0)));
        }
        throw std::invalid_argument("unknown function '" + e.name + "'");
    case Expr::Kind::Compare: {
        ConditionValue l = eval_condition(e.children[0], world, ctx);
        ConditionValue r = eval_condition(e.children[1], world, ctx);
        if (l.kind == ConditionValue::Kind::Text || r.kind == ConditionValue::Kind::Text) {
            bool eq = l.text == r.text;
            return boolean(e.op == CompareOp::Eq ? eq : e.op == CompareOp::Ne ? !eq : false);
        }
        return boolean(compare(e.op, l.number, r.number));
    }
    case Expr::Kind::And:
        return boolean(eval_bool(e.children[0], world, ctx) && eval_bool(e.children[1], world, ctx));
    case Expr::Kind::Or:
        return boolean(eval_bool(e.children[0], world, ctx) || eval_bool(e.children[1], world, ctx));
    case Expr::Kind::Not: return boolean(!eval_bool(e.children[0], world, ctx));
    }
    return boolean(false);
}

bool eval_bool(const Expr& expr, const WorldState& world, const EvalContext& ctx) {
    ConditionValue v = eval_condition(expr, world, ctx);
    if (v.kind == ConditionValue::Kind::Bool) return v.truth;
    if (v.kind == ConditionValue::Kind::Number) return v.number != 0.0;
    return !v.text.empty();
}

} // namespace bts
