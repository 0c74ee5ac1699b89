#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bts/ast.hpp"
#include "bts/map.hpp"

namespace bts {

enum class ParamUnit { None, Speed, Length };

struct ActionParamSchema {
    std::string name;
    std::vector<std::string> aliases;
    bool numeric = true;
    ParamUnit unit = ParamUnit::None;
    std::optional<double> default_value;     // numeric defaults
    std::vector<std::string> allowed_values; // text parameters
    bool required = false;

    bool accepts(const std::string& n) const;
};

struct ActionSchema {
    std::string name;
    std::vector<ActionParamSchema> params;

    const ActionParamSchema* find(const std::string& param) const;
};

// Built-in action library: followLane and changeLane.
const std::vector<ActionSchema>& action_schemas();
const ActionSchema* find_action(const std::string& name);

// Attributes readable in conditions and record oracles.
bool is_channel(const std::string& attribute);

struct ValidatedScenario {
    ScenarioAst ast;
    MapBindings bindings;
    std::string ego;
};

struct ValidationResult {
    std::optional<ValidatedScenario> scenario;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return scenario.has_value(); }
};

ValidationResult validate(const ScenarioAst& ast, const MapGraph& map);

enum class SlotOrigin { ActionParam, PreThreshold, PostThreshold };
const char* to_string(SlotOrigin o);

struct ParameterSlot {
    int slot_index = 0; // 0-based, canonical order
    int step_index = 1; // 1-based child ordinal of the root serial
    std::string actor;
    std::string action;
    SlotOrigin origin = SlotOrigin::ActionParam;
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
    ParamUnit unit = ParamUnit::None;

    bool operator==(const ParameterSlot&) const = default;
};

struct ParameterSpace {
    std::vector<ParameterSlot> slots;
    int steps_total = 0;
    int max_slots_per_step = 0;
    std::vector<int> step_counts;  // per step, index t-1
    std::vector<int> step_offsets; // first slot index of each step

    std::size_t size() const { return slots.size(); }
    bool empty() const { return slots.empty(); }
    std::span<const ParameterSlot> step_slots(int step) const;

    bool operator==(const ParameterSpace&) const = default;
};

// Number of steps: the root serial's children, or 1 for any other root.
int count_steps(const BtAstNode& root);

ParameterSpace extract_parameter_space(const ScenarioAst& ast);
ParameterSpace extract_parameter_space(const ValidatedScenario& scenario);

class OutOfRange : public std::out_of_range {
public:
    OutOfRange(int slot_index, const std::string& msg) : std::out_of_range(msg), slot_index_(slot_index) {}
    int slot_index() const { return slot_index_; }

private:
    int slot_index_;
};

struct BoundScenario {
    std::shared_ptr<const ValidatedScenario> logical;
    ScenarioAst concrete; // every interval replaced by its value
    std::vector<double> values;
};

// Values follow the canonical slot order; each must lie within its slot's bounds.
BoundScenario bind_parameters(std::shared_ptr<const ValidatedScenario> scenario, std::span<const double> values);
BoundScenario bind_parameters(const ValidatedScenario& scenario, std::span<const double> values);

std::vector<double> midpoint_values(const ParameterSpace& space);

// Visits every interval occurrence in canonical slot order. `fn` receives
// (step, leaf, origin, name, holder) where holder is a ParamValue& or an Expr&.
template <typename Node, typename Fn>
void visit_intervals(Node& root, Fn&& fn);

namespace detail {

template <typename ExprT, typename Fn>
void visit_expr_intervals(ExprT& e, const std::string& name, Fn&& fn) {
    if (e.kind == Expr::Kind::Interval) {
        fn(e, name);
        return;
    }
    std::string lhs_name = name;
    if (e.kind == Expr::Kind::Compare && !e.children.empty()) {
        const auto& lhs = e.children.front();
        if (lhs.kind == Expr::Kind::Call || lhs.kind == Expr::Kind::Attribute) lhs_name = lhs.name;
    }
    for (auto& c : e.children) visit_expr_intervals(c, lhs_name, fn);
}

template <typename Node, typename Fn>
void visit_node_intervals(Node& n, int step, Fn& fn) {
    if (n.kind != BtAstNode::Kind::Action) {
        for (auto& c : n.children) visit_node_intervals(c, step, fn);
        return;
    }
    for (auto& p : n.params)
        if (p.value.kind == ParamValue::Kind::Interval) fn(step, n, SlotOrigin::ActionParam, p.name, p.value);
    if (n.pre)
        visit_expr_intervals(*n.pre, std::string("threshold"), [&](auto& e, const std::string& nm) {
            fn(step, n, SlotOrigin::PreThreshold, nm, e);
        });
    if (n.post)
        visit_expr_intervals(*n.post, std::string("threshold"), [&](auto& e, const std::string& nm) {
            fn(step, n, SlotOrigin::PostThreshold, nm, e);
        });
}

} // namespace detail

template <typename Node, typename Fn>
void visit_intervals(Node& root, Fn&& fn) {
    if (root.kind == BtAstNode::Kind::Serial) {
        int step = 1;
        for (auto& child : root.children) detail::visit_node_intervals(child, step++, fn);
    } else {
        detail::visit_node_intervals(root, 1, fn);
    }
}

} // namespace bts
