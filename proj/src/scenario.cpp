#include "bts/scenario.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace bts {

bool ActionParamSchema::accepts(const std::string& n) const {
    return n == name || std::find(aliases.begin(), aliases.end(), n) != aliases.end();
}

const ActionParamSchema* ActionSchema::find(const std::string& param) const {
    for (const auto& p : params)
        if (p.accepts(param)) return &p;
    return nullptr;
}

const std::vector<ActionSchema>& action_schemas() {
    static const std::vector<ActionSchema> schemas = [] {
        ActionParamSchema speed{"targetSpeed", {}, true, ParamUnit::Speed, 30.0, {}, false};
        ActionParamSchema distance{"distance", {"scale"}, true, ParamUnit::Length, 50.0, {}, false};
        ActionParamSchema direction{"direction", {}, false, ParamUnit::None, std::nullopt, {"left", "right"}, true};
        return std::vector<ActionSchema>{
            {"followLane", {speed, distance}},
            {"changeLane", {direction, speed, distance}},
        };
    }();
    return schemas;
}

const ActionSchema* find_action(const std::string& name) {
    for (const auto& s : action_schemas())
        if (s.name == name) return &s;
    return nullptr;
}

bool is_channel(const std::string& attribute) {
    return attribute == "speed" || attribute == "x" || attribute == "y" || attribute == "heading";
}

const char* to_string(SlotOrigin o) {
    switch (o) {
    case SlotOrigin::ActionParam: return "param";
    case SlotOrigin::PreThreshold: return "pre";
    case SlotOrigin::PostThreshold: return "post";
    }
    return "?";
}

namespace {

enum class Ty { Bool, Num, Text, Bad };

class Validator {
public:
    Validator(const ScenarioAst& ast, const MapGraph& map) : ast_(ast), map_(map) {}

    ValidationResult run() {
        check_map_block();
        check_actors();
        check_node(ast_.execute, true);
        check_oracles();
        ValidationResult r;
        r.diagnostics = std::move(diags_);
        bool has_error = std::any_of(r.diagnostics.begin(), r.diagnostics.end(),
                                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
        if (!has_error) r.scenario = ValidatedScenario{ast_, bindings_, ego_};
        return r;
    }

private:
    void error(const SourceSpan& span, std::string msg) {
        Diagnostic d;
        d.span = span;
        d.message = std::move(msg);
        diags_.push_back(std::move(d));
    }

    void check_map_block() {
        std::set<std::string> names;
        for (const auto& decl : ast_.map_block) {
            if (!names.insert(decl.name).second) error(decl.span, "duplicate map object name '" + decl.name + "'");
            if (decl.kind != MapObjectKind::Junction) continue;
            for (const auto& c : decl.constraints) {
                if (c.bare_text || c.path.empty()) continue;
                const auto& last = c.path.back();
                bool own_type = last.name == "type" && (c.path.size() == 1 || (c.path.size() == 2 && c.path[0].name == decl.name));
                if (own_type && (c.value.kind != Literal::Kind::Text || !is_junction_type(c.value.text)))
                    error(c.span, "junction type must be one of \"+\", \"T\", \"X\", \"Y\", \"unknown\"");
            }
        }
        try {
            bindings_ = match_map_objects(ast_.map_block, map_);
        } catch (const NoMatch& e) {
            SourceSpan span = ast_.span;
            for (const auto& decl : ast_.map_block)
                if (decl.name == e.decl()) span = decl.span;
            error(span, e.what());
        }
    }

    void check_actors() {
        int cars_under_test = 0;
        for (const auto& a : ast_.init_block) {
            if (actors_.count(a.name)) {
                error(a.span, "duplicate actor name '" + a.name + "'");
            }
            if (a.kind == ActorKind::AutCar) {
                if (++cars_under_test == 2) error(a.span, "multiple cars under test (Aut_Car) declared");
                if (cars_under_test == 1) ego_ = a.name;
            }
            const auto& pos = a.position;
            if (pos.kind == PositionSpec::Kind::Relative) {
                if (!actors_.count(pos.anchor))
                    error(pos.span, "relative_to anchor '" + pos.anchor + "' must name a previously declared actor");
            } else if (pos.kind == PositionSpec::Kind::AbsoluteLane) {
                auto it = bindings_.ids.find(pos.lane);
                bool bound = it != bindings_.ids.end() && bindings_.kinds.at(pos.lane) == MapObjectKind::Lane;
                if (!bound && !map_.find_lane(pos.lane))
                    error(pos.span, "absolute_position lane '" + pos.lane + "' is neither a declared Lane nor a map lane id");
            }
            actors_.emplace(a.name, a.kind);
        }
        if (cars_under_test == 0) error(ast_.span, "no car under test (Aut_Car) declared");
    }

    void check_node(const BtAstNode& n, bool root) {
        (void)root;
        if (n.kind != BtAstNode::Kind::Action) {
            if (n.children.empty())
                error(n.span, std::string(n.kind == BtAstNode::Kind::Serial ? "serial" : "parallel") +
                                  " composite needs at least one child");
            for (const auto& c : n.children) check_node(c, false);
            return;
        }
        auto it = actors_.find(n.actor);
        if (it == actors_.end()) {
            error(n.span, "unknown actor '" + n.actor + "'");
        } else if (it->second == ActorKind::AutCar) {
            error(n.span, "actor '" + n.actor + "' is the car under test and is driven by the system under test; it cannot be scripted");
        } else if (it->second == ActorKind::Pedestrian) {
            error(n.span, "pedestrian '" + n.actor + "' has no actions");
        }
        const ActionSchema* schema = find_action(n.action);
        if (!schema) {
            error(n.span, "unknown action '" + n.action + "'");
        } else {
            check_params(n, *schema);
        }
        if (n.pre) expect_bool(*n.pre, "pre-condition");
        if (n.post) expect_bool(*n.post, "post-condition");
    }

    void check_params(const BtAstNode& n, const ActionSchema& schema) {
        std::set<std::string> seen;
        for (const auto& p : n.params) {
            const ActionParamSchema* ps = schema.find(p.name);
            if (!ps) {
                error(p.span, "action '" + schema.name + "' has no parameter '" + p.name + "'");
                continue;
            }
            if (!seen.insert(ps->name).second) {
                error(p.span, "parameter '" + p.name + "' given more than once");
                continue;
            }
            if (ps->numeric) {
                if (p.value.kind == ParamValue::Kind::Text)
                    error(p.span, "parameter '" + p.name + "' expects a number or an interval");
                if (p.value.kind == ParamValue::Kind::Interval && p.value.lo > p.value.hi)
                    error(p.span, "interval lower bound exceeds upper bound");
                double lo = p.value.kind == ParamValue::Kind::Interval ? p.value.lo : p.value.value;
                if (p.value.kind != ParamValue::Kind::Text && lo < 0.0)
                    error(p.span, "parameter '" + p.name + "' must be non-negative");
            } else {
                if (p.value.kind != ParamValue::Kind::Text) {
                    error(p.span, "parameter '" + p.name + "' expects a text value");
                } else if (!ps->allowed_values.empty() &&
                           std::find(ps->allowed_values.begin(), ps->allowed_values.end(), p.value.text) ==
                               ps->allowed_values.end()) {
                    error(p.span, "invalid value \"" + p.value.text + "\" for parameter '" + p.name + "'");
                }
            }
        }
        for (const auto& ps : schema.params)
            if (ps.required && !seen.count(ps.name))
                error(n.span, "action '" + schema.name + "' requires parameter '" + ps.name + "'");
    }

    void check_actor_ref(const std::string& name, const SourceSpan& span) {
        if (!actors_.count(name)) error(span, "unknown actor '" + name + "'");
    }

    Ty type_of(const Expr& e, bool interval_ok) {
        switch (e.kind) {
        case Expr::Kind::Number: return Ty::Num;
        case Expr::Kind::Interval:
            if (!interval_ok) error(e.span, "an interval threshold may only appear as a comparison operand");
            if (e.lo > e.hi) error(e.span, "interval lower bound exceeds upper bound");
            return Ty::Num;
        case Expr::Kind::Text: return Ty::Text;
        case Expr::Kind::Attribute:
            check_actor_ref(e.actors.at(0), e.span);
            if (!is_channel(e.name)) {
                error(e.span, "unknown attribute '" + e.name + "'");
                return Ty::Bad;
            }
            return Ty::Num;
        case Expr::Kind::Call:
            for (const auto& a : e.actors) check_actor_ref(a, e.span);
            if (e.name == "distance") {
                if (e.actors.size() != 2) error(e.span, "distance() takes exactly two actors");
                return Ty::Num;
            }
            if (e.name == "isCollided") {
                if (e.actors.size() != 1) error(e.span, "isCollided() applies to exactly one actor");
                return Ty::Bool;
            }
            error(e.span, "unknown function '" + e.name + "'");
            return Ty::Bad;
        case Expr::Kind::Compare: {
            Ty l = type_of(e.children[0], true);
            Ty r = type_of(e.children[1], true);
            if (l == Ty::Bad || r == Ty::Bad) return Ty::Bool;
            bool ordered = e.op != CompareOp::Eq && e.op != CompareOp::Ne;
            if (l != r || l == Ty::Bool || (ordered && l != Ty::Num))
                error(e.span, "comparison operands have incompatible types");
            return Ty::Bool;
        }
        case Expr::Kind::And:
        case Expr::Kind::Or:
        case Expr::Kind::Not:
            for (const auto& c : e.children)
                if (Ty t = type_of(c, false); t != Ty::Bool && t != Ty::Bad) error(c.span, "operand must be a boolean");
            return Ty::Bool;
        }
        return Ty::Bad;
    }

    void expect_bool(const Expr& e, const char* what) {
        Ty t = type_of(e, false);
        if (t != Ty::Bool && t != Ty::Bad) error(e.span, std::string(what) + " must be a boolean expression");
    }

    void check_oracles() {
        for (const auto& o : ast_.oracle_block) {
            if (o.kind == OracleDecl::Kind::Periodic) {
                expect_bool(o.expr, "periodic oracle");
            } else if (o.expr.kind != Expr::Kind::Attribute) {
                error(o.expr.span, "record oracle must name a channel such as actor.speed");
            } else {
                type_of(o.expr, false);
            }
        }
    }

    const ScenarioAst& ast_;
    const MapGraph& map_;
    MapBindings bindings_;
    std::map<std::string, ActorKind> actors_;
    std::string ego_;
    std::vector<Diagnostic> diags_;
};

ParamUnit unit_of(const BtAstNode& leaf, SlotOrigin origin, const std::string& name) {
    if (origin != SlotOrigin::ActionParam) return name == "distance" ? ParamUnit::Length : name == "speed" ? ParamUnit::Speed : ParamUnit::None;
    if (const ActionSchema* s = find_action(leaf.action))
        if (const ActionParamSchema* p = s->find(name)) return p->unit;
    return ParamUnit::None;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

ValidationResult validate(const ScenarioAst& ast, const MapGraph& map) { return Validator(ast, map).run(); }

std::span<const ParameterSlot> ParameterSpace::step_slots(int step) const {
    if (step < 1 || step > steps_total) return {};
    auto off = static_cast<std::size_t>(step_offsets[static_cast<std::size_t>(step - 1)]);
    auto cnt = static_cast<std::size_t>(step_counts[static_cast<std::size_t>(step - 1)]);
    return std::span<const ParameterSlot>(slots).subspan(off, cnt);
}

int count_steps(const BtAstNode& root) {
    return root.kind == BtAstNode::Kind::Serial ? static_cast<int>(root.children.size()) : 1;
}

ParameterSpace extract_parameter_space(const ScenarioAst& ast) {
    ParameterSpace space;
    space.steps_total = count_steps(ast.execute);
    space.step_counts.assign(static_cast<std::size_t>(space.steps_total), 0);
    visit_intervals(ast.execute, [&](int step, const BtAstNode& leaf, SlotOrigin origin, const std::string& name,
                                     const auto& holder) {
        ParameterSlot s;
        s.slot_index = static_cast<int>(space.slots.size());
        s.step_index = step;
        s.actor = leaf.actor;
        s.action = leaf.action;
        s.origin = origin;
        s.name = name;
        s.lo = holder.lo;
        s.hi = holder.hi;
        s.unit = unit_of(leaf, origin, name);
        space.slots.push_back(std::move(s));
        ++space.step_counts[static_cast<std::size_t>(step - 1)];
    });
    int offset = 0;
    for (int c : space.step_counts) {
        space.step_offsets.push_back(offset);
        offset += c;
        space.max_slots_per_step = std::max(space.max_slots_per_step, c);
    }
    return space;
}

ParameterSpace extract_parameter_space(const ValidatedScenario& scenario) {
    return extract_parameter_space(scenario.ast);
}

BoundScenario bind_parameters(std::shared_ptr<const ValidatedScenario> scenario, std::span<const double> values) {
    ParameterSpace space = extract_parameter_space(*scenario);
    if (values.size() != space.size()) {
        int missing = static_cast<int>(std::min(values.size(), space.size()));
        throw OutOfRange(missing, values.size() < space.size()
                                      ? "missing slot " + std::to_string(missing + 1)
                                      : "expected " + std::to_string(space.size()) + " values, got " +
                                            std::to_string(values.size()));
    }
    for (const auto& s : space.slots) {
        double v = values[static_cast<std::size_t>(s.slot_index)];
        if (!(v >= s.lo && v <= s.hi))
            throw OutOfRange(s.slot_index, "slot " + std::to_string(s.slot_index + 1) + " (" + s.name + ") value " +
                                               fmt(v) + " outside [" + fmt(s.lo) + ", " + fmt(s.hi) + "]");
    }
    BoundScenario bound;
    bound.concrete = scenario->ast;
    bound.values.assign(values.begin(), values.end());
    std::size_t i = 0;
    visit_intervals(bound.concrete.execute, [&](int, BtAstNode&, SlotOrigin, const std::string&, auto& holder) {
        double v = values[i++];
        if constexpr (std::is_same_v<std::decay_t<decltype(holder)>, ParamValue>) {
            holder.kind = ParamValue::Kind::Fixed;
            holder.value = v;
            holder.lo = holder.hi = 0.0;
        } else {
            holder.kind = Expr::Kind::Number;
            holder.number = v;
            holder.lo = holder.hi = 0.0;
        }
    });
    bound.logical = std::move(scenario);
    return bound;
}

BoundScenario bind_parameters(const ValidatedScenario& scenario, std::span<const double> values) {
    return bind_parameters(std::make_shared<const ValidatedScenario>(scenario), values);
}

std::vector<double> midpoint_values(const ParameterSpace& space) {
    std::vector<double> v;
    v.reserve(space.size());
    for (const auto& s : space.slots) v.push_back(s.lo + 0.5 * (s.hi - s.lo));
    return v;
}

} // namespace bts
