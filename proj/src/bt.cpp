#include "bts/bt.hpp"

#include <cmath>
#include <sstream>
#include <type_traits>

namespace bts {

const char* to_string(TickStatus s) {
    switch (s) {
    case TickStatus::Running: return "RUNNING";
    case TickStatus::Success: return "SUCCESS";
    case TickStatus::Failure: return "FAILURE";
    }
    return "?";
}

BtInstance::BtInstance(const BtAstNode& root) {
    int next_slot = 0;
    root_ = build(root, next_slot);
    steps_total_ = count_steps(root);
}

std::size_t BtInstance::build(const BtAstNode& n, int& next_slot) {
    std::size_t id = nodes_.size();
    nodes_.emplace_back();
    nodes_[id].kind = n.kind;
    if (n.kind == BtAstNode::Kind::Action) {
        Leaf leaf;
        leaf.actor = n.actor;
        leaf.action = n.action;
        leaf.params = n.params;
        leaf.pre = n.pre;
        leaf.post = n.post;
        BtAstNode copy = n;
        auto assign = [&](int, BtAstNode&, SlotOrigin, const std::string&, auto&) { leaf.slots.push_back(next_slot++); };
        detail::visit_node_intervals(copy, 1, assign);
        nodes_[id].leaf = std::move(leaf);
        return id;
    }
    std::vector<std::size_t> children;
    for (const auto& c : n.children) children.push_back(build(c, next_slot));
    nodes_[id].children = std::move(children);
    nodes_[id].child_status.assign(nodes_[id].children.size(), TickStatus::Running);
    return id;
}

int BtInstance::serial_cursor() const {
    const Node& r = nodes_[root_];
    return r.kind == BtAstNode::Kind::Serial ? static_cast<int>(r.cursor) + 1 : 1;
}

int BtInstance::step_index() const {
    if (finished()) return steps_total_ + 1;
    return serial_cursor();
}

TickResult BtInstance::tick(WorldState& world, double dt, const BtEnvironment& env) {
    if (!(dt > 0.0)) throw std::invalid_argument("tick requires dt > 0");
    TickResult out;
    if (finished()) {
        out.status = status_;
        return out;
    }
    status_ = tick_node(root_, world, dt, env, out);
    out.status = status_;
    return out;
}

TickStatus BtInstance::tick_node(std::size_t id, WorldState& world, double dt, const BtEnvironment& env,
                                 TickResult& out) {
    Node& n = nodes_[id];
    if (n.status != TickStatus::Running) return n.status;
    switch (n.kind) {
    case BtAstNode::Kind::Action:
        n.status = tick_leaf(n.leaf, world, dt, env, out);
        break;
    case BtAstNode::Kind::Serial: {
        // One child per tick; the next child starts on the following tick.
        TickStatus s = tick_node(n.children[n.cursor], world, dt, env, out);
        if (s == TickStatus::Failure) {
            n.status = TickStatus::Failure;
        } else if (s == TickStatus::Success) {
            if (n.cursor + 1 == n.children.size()) {
                n.status = TickStatus::Success;
            } else {
                ++n.cursor;
            }
        }
        break;
    }
    case BtAstNode::Kind::Parallel: {
        bool all_done = true;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (n.child_status[i] == TickStatus::Running) n.child_status[i] = tick_node(n.children[i], world, dt, env, out);
            if (n.child_status[i] == TickStatus::Failure) {
                n.status = TickStatus::Failure;
                return n.status;
            }
            if (n.child_status[i] != TickStatus::Success) all_done = false;
        }
        if (all_done) n.status = TickStatus::Success;
        break;
    }
    }
    return n.status;
}

void BtInstance::materialize(Leaf& leaf, const BtEnvironment& env) {
    BtAstNode tmp;
    tmp.kind = BtAstNode::Kind::Action;
    tmp.params = leaf.params;
    tmp.pre = leaf.pre;
    tmp.post = leaf.post;
    std::size_t k = 0;
    auto bind = [&](int, BtAstNode&, SlotOrigin, const std::string&, auto& holder) {
        auto slot = static_cast<std::size_t>(leaf.slots.at(k++));
        if (slot >= env.values.size() || std::isnan(env.values[slot]))
            throw std::logic_error("slot " + std::to_string(slot + 1) + " read before its step was bound");
        double v = env.values[slot];
        if constexpr (std::is_same_v<std::decay_t<decltype(holder)>, ParamValue>) {
            holder.kind = ParamValue::Kind::Fixed;
            holder.value = v;
        } else {
            holder.kind = Expr::Kind::Number;
            holder.number = v;
        }
    };
    detail::visit_node_intervals(tmp, 1, bind);
    leaf.params = std::move(tmp.params);
    leaf.pre = std::move(tmp.pre);
    leaf.post = std::move(tmp.post);

    const ActionSchema* schema = find_action(leaf.action);
    if (!schema) throw std::logic_error("unknown action '" + leaf.action + "'");
    double speed_unit = env.config.speed_to_unit();
    for (const auto& ps : schema->params) {
        const ParamBinding* given = nullptr;
        for (const auto& p : leaf.params)
            if (ps.accepts(p.name)) given = &p;
        if (ps.name == "targetSpeed") {
            leaf.target_speed = (given ? given->value.value : *ps.default_value) / speed_unit;
        } else if (ps.name == "distance") {
            leaf.distance = given ? given->value.value : *ps.default_value;
        } else if (ps.name == "direction") {
            leaf.direction = given ? given->value.text : "left";
        }
    }
}

TickStatus BtInstance::tick_leaf(Leaf& leaf, WorldState& world, double dt, const BtEnvironment& env, TickResult& out) {
    EvalContext ctx{env.config.speed_to_unit()};
    if (leaf.phase == Phase::Idle) {
        materialize(leaf, env);
        leaf.start_time = world.time;
        leaf.phase = Phase::Waiting;
    }
    if (world.time - leaf.start_time >= env.config.leaf_timeout - 1e-9) {
        leaf.phase = Phase::Failed;
        return TickStatus::Failure;
    }
    auto it = world.actors.find(leaf.actor);
    if (it == world.actors.end()) throw UnknownActor(leaf.actor);
    ActorState& actor = it->second;

    if (leaf.phase == Phase::Waiting) {
        if (leaf.pre && !eval_bool(*leaf.pre, world, ctx)) return TickStatus::Running;
        leaf.phase = Phase::Active;
        const LaneRec* lane = env.map.find_lane(actor.lane);
        if (!lane) lane = lane_for_pose(env.map, actor.state.pose());
        if (!lane) {
            leaf.phase = Phase::Failed;
            return TickStatus::Failure;
        }
        if (leaf.action == "followLane") {
            leaf.controller.emplace<FollowLaneController>(actor.state, *lane, leaf.target_speed, leaf.distance);
        } else if (leaf.action == "changeLane") {
            auto c = ChangeLaneController::create(actor.state, env.map, *lane, leaf.direction, leaf.distance,
                                                  leaf.target_speed);
            if (!c) {
                leaf.phase = Phase::Failed;
                return TickStatus::Failure;
            }
            leaf.controller.emplace<ChangeLaneController>(std::move(*c));
        }
    }

    // A post-condition, when present, is the only way the action terminates successfully.
    if (leaf.post && eval_bool(*leaf.post, world, ctx)) {
        if (auto* cl = std::get_if<ChangeLaneController>(&leaf.controller)) actor.lane = cl->target_lane();
        leaf.phase = Phase::Succeeded;
        return TickStatus::Success;
    }
    ControllerOutput step;
    if (auto* fl = std::get_if<FollowLaneController>(&leaf.controller)) {
        step = fl->step(actor.state, dt, env.config);
    } else if (auto* cl = std::get_if<ChangeLaneController>(&leaf.controller)) {
        step = cl->step(actor.state, dt, env.config);
        if (step.done) actor.lane = cl->target_lane();
    }
    if (step.done && !leaf.post) {
        leaf.phase = Phase::Succeeded;
        return TickStatus::Success;
    }
    if (!step.done) out.controls[leaf.actor] = step.controls;
    return TickStatus::Running;
}

void BtInstance::dump_node(std::size_t id, int depth, std::string& out) const {
    const Node& n = nodes_[id];
    std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    std::ostringstream os;
    if (n.kind == BtAstNode::Kind::Action) {
        static const char* phases[] = {"idle", "waiting", "active", "succeeded", "failed"};
        os << pad << n.leaf.actor << '.' << n.leaf.action << " [" << phases[static_cast<int>(n.leaf.phase)] << "] "
           << to_string(n.status) << '\n';
        out += os.str();
        return;
    }
    os << pad << (n.kind == BtAstNode::Kind::Serial ? "serial" : "parallel");
    if (n.kind == BtAstNode::Kind::Serial) os << " (cursor " << n.cursor + 1 << '/' << n.children.size() << ')';
    os << ' ' << to_string(n.status) << '\n';
    out += os.str();
    for (std::size_t c : n.children) dump_node(c, depth + 1, out);
}

std::string BtInstance::dump() const {
    std::string out;
    dump_node(root_, 0, out);
    return out;
}

BtInstance instantiate(const BoundScenario& scenario) { return BtInstance(scenario.logical->ast.execute); }

StepMask step_mask(int step, const ParameterSpace& space) {
    StepMask m;
    m.step_index = step;
    m.bits.assign(static_cast<std::size_t>(space.max_slots_per_step), 0);
    auto n = space.step_slots(step).size();
    for (std::size_t i = 0; i < n; ++i) m.bits[i] = 1;
    return m;
}

StepMask current_step_mask(const BtInstance& instance, const ParameterSpace& space) {
    if (instance.finished()) throw Finished();
    return step_mask(instance.step_index(), space);
}

} // namespace bts
