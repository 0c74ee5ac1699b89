#include "bts/td3.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bts {

using nlohmann::json;

json to_json(const Td3Config& c) {
    return {
        {"episodes", c.episodes},
        {"explore_sigma", c.explore_sigma},
        {"batch_size", c.batch_size},
        {"collision_reward", c.collision_reward},
        {"tau", c.tau},
        {"gamma", c.gamma},
        {"noise_clip", c.noise_clip},
        {"target_sigma", c.target_sigma},
        {"buffer_size", c.buffer_size},
        {"policy_delay", c.policy_delay},
        {"warmup", c.warmup},
        {"updates_per_step", c.updates_per_step},
        {"hidden", c.hidden},
        {"learning_rate", c.learning_rate},
        {"shaping_distance", c.shaping_distance},
        {"eval_sigma", c.eval_sigma},
        {"eval_episodes", c.eval_episodes},
        {"mask_enabled", c.mask_enabled},
    };
}

Td3Config td3_config_from_json(const json& j, Td3Config c) {
    if (j.is_null()) return c;
    json known = to_json(c);
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (!known.contains(k)) throw std::invalid_argument("unknown search config key '" + k + "'");
    }
    auto read = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    read("episodes", c.episodes);
    read("explore_sigma", c.explore_sigma);
    read("batch_size", c.batch_size);
    read("collision_reward", c.collision_reward);
    read("tau", c.tau);
    read("gamma", c.gamma);
    read("noise_clip", c.noise_clip);
    read("target_sigma", c.target_sigma);
    read("buffer_size", c.buffer_size);
    read("policy_delay", c.policy_delay);
    read("warmup", c.warmup);
    read("updates_per_step", c.updates_per_step);
    read("hidden", c.hidden);
    read("learning_rate", c.learning_rate);
    read("shaping_distance", c.shaping_distance);
    read("eval_sigma", c.eval_sigma);
    read("eval_episodes", c.eval_episodes);
    read("mask_enabled", c.mask_enabled);
    if (c.batch_size <= 0 || c.policy_delay <= 0 || c.buffer_size == 0 || c.updates_per_step <= 0)
        throw std::invalid_argument("batch_size, policy_delay, updates_per_step and buffer_size must be positive");
    if (c.tau < 0.0 || c.tau > 1.0) throw std::invalid_argument("tau must lie in [0, 1]");
    return c;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
    if (n > items_.size()) throw InsufficientBuffer("cannot sample " + std::to_string(n) + " of " +
                                                    std::to_string(items_.size()) + " transitions");
    // Floyd's algorithm
    std::set<std::size_t> chosen;
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t j = items_.size() - n; j < items_.size(); ++j) {
        std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
        if (!chosen.insert(t).second) {
            chosen.insert(j);
            out.push_back(j);
        } else {
            out.push_back(t);
        }
    }
    return out;
}

namespace {

std::vector<Activation> hidden_acts(std::size_t n, Activation last) {
    std::vector<Activation> a(n, Activation::Relu);
    a.push_back(last);
    return a;
}

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
}

Eigen::MatrixXd stack(const std::vector<const Transition*>& batch, Eigen::VectorXd Transition::*field) {
    const Eigen::Index rows = (batch.front()->*field).size();
    Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = batch[i]->*field;
    return m;
}

} // namespace

Td3Agent::Td3Agent(int state_dim, int action_dim, const Td3Config& config, std::uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim), config_(config), rng_(seed) {
    std::mt19937_64 init(seed ^ 0x5eedULL);
    actor = Mlp(layer_sizes(state_dim, config.hidden, action_dim), hidden_acts(config.hidden.size(), Activation::Tanh),
                init);
    critic1 = Mlp(layer_sizes(state_dim + action_dim, config.hidden, 1),
                  hidden_acts(config.hidden.size(), Activation::Identity), init);
    critic2 = Mlp(layer_sizes(state_dim + action_dim, config.hidden, 1),
                  hidden_acts(config.hidden.size(), Activation::Identity), init);
    actor_target = actor;
    critic1_target = critic1;
    critic2_target = critic2;
    actor_opt_ = Adam(actor, config.learning_rate);
    critic1_opt_ = Adam(critic1, config.learning_rate);
    critic2_opt_ = Adam(critic2, config.learning_rate);
}

Eigen::VectorXd Td3Agent::policy(const Eigen::VectorXd& s) const { return actor.forward(s); }

Eigen::VectorXd Td3Agent::select_action(const Eigen::VectorXd& s, const Eigen::VectorXd& m, double sigma,
                                        std::mt19937_64& rng) const {
    Eigen::VectorXd a = policy(s);
    if (sigma > 0.0) {
        std::normal_distribution<double> n(0.0, sigma);
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += n(rng);
    }
    return a.cwiseMax(-1.0).cwiseMin(1.0).cwiseProduct(m);
}

Eigen::MatrixXd Td3Agent::critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) const {
    Eigen::MatrixXd x(s.rows() + a.rows(), s.cols());
    x.topRows(s.rows()) = s;
    x.bottomRows(a.rows()) = a;
    return x;
}

Eigen::VectorXd Td3Agent::targets(const std::vector<const Transition*>& batch) {
    Eigen::MatrixXd s2 = stack(batch, &Transition::s2);
    Eigen::MatrixXd m2 = stack(batch, &Transition::m2);
    Eigen::MatrixXd a2 = actor_target.forward(s2);
    std::normal_distribution<double> n(0.0, config_.target_sigma);
    for (Eigen::Index i = 0; i < a2.size(); ++i)
        a2(i) += std::clamp(n(rng_), -config_.noise_clip, config_.noise_clip);
    a2 = a2.cwiseMax(-1.0).cwiseMin(1.0).cwiseProduct(m2);
    Eigen::MatrixXd x2 = critic_input(s2, a2);
    Eigen::MatrixXd q1 = critic1_target.forward(x2);
    Eigen::MatrixXd q2 = critic2_target.forward(x2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto k = static_cast<Eigen::Index>(i);
        y(k) = batch[i]->done ? batch[i]->r : batch[i]->r + config_.gamma * std::min(q1(0, k), q2(0, k));
    }
    return y;
}

Eigen::MatrixXd Td3Agent::actor_output_gradient(const std::vector<const Transition*>& batch) const {
    Eigen::MatrixXd s = stack(batch, &Transition::s);
    Eigen::MatrixXd m = stack(batch, &Transition::m);
    Eigen::MatrixXd a = actor.forward(s).cwiseProduct(m);
    Mlp::Cache cache;
    critic1.forward(critic_input(s, a), cache);
    Mlp::Gradients scratch = critic1.zero_gradients();
    Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, s.cols(), -1.0 / static_cast<double>(s.cols()));
    Eigen::MatrixXd dx = critic1.backward(cache, dq, scratch);
    return dx.bottomRows(action_dim_).cwiseProduct(m);
}

void Td3Agent::soft_update() {
    actor_target.soft_update_from(actor, config_.tau);
    critic1_target.soft_update_from(critic1, config_.tau);
    critic2_target.soft_update_from(critic2, config_.tau);
}

UpdateStats Td3Agent::update(const std::vector<const Transition*>& batch) {
    if (batch.empty()) throw InsufficientBuffer("empty batch");
    UpdateStats stats;
    Eigen::VectorXd y = targets(batch);
    Eigen::MatrixXd s = stack(batch, &Transition::s);
    Eigen::MatrixXd a = stack(batch, &Transition::a);
    Eigen::MatrixXd x = critic_input(s, a);
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    auto fit = [&](Mlp& critic, Adam& opt) {
        Mlp::Cache cache;
        Eigen::MatrixXd q = critic.forward(x, cache);
        Eigen::MatrixXd err = q - y.transpose();
        Mlp::Gradients g = critic.zero_gradients();
        critic.backward(cache, 2.0 * inv_b * err, g);
        opt.step(critic, g);
        return err.squaredNorm() * inv_b;
    };
    stats.critic1_loss = fit(critic1, critic1_opt_);
    stats.critic2_loss = fit(critic2, critic2_opt_);
    ++updates_;

    if (updates_ % config_.policy_delay == 0) {
        Eigen::MatrixXd m = stack(batch, &Transition::m);
        Mlp::Cache actor_cache;
        Eigen::MatrixXd pi = actor.forward(s, actor_cache);
        Eigen::MatrixXd xa = critic_input(s, pi.cwiseProduct(m));
        Mlp::Cache critic_cache;
        Eigen::MatrixXd q = critic1.forward(xa, critic_cache);
        Mlp::Gradients unused = critic1.zero_gradients();
        Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, s.cols(), -inv_b);
        Eigen::MatrixXd dx = critic1.backward(critic_cache, dq, unused);
        Eigen::MatrixXd da = dx.bottomRows(action_dim_).cwiseProduct(m);
        Mlp::Gradients g = actor.zero_gradients();
        actor.backward(actor_cache, da, g);
        actor_opt_.step(actor, g);
        stats.actor_loss = -q.mean();
        ++actor_updates_;
        soft_update();
    }
    return stats;
}

UpdateStats Td3Agent::update(const ReplayBuffer& buffer, std::mt19937_64& rng) {
    auto idx = buffer.sample_indices(static_cast<std::size_t>(config_.batch_size), rng);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(&buffer.at(i));
    return update(batch);
}

double denormalize(double a, const ParameterSlot& slot) {
    double v = slot.lo + (a + 1.0) / 2.0 * (slot.hi - slot.lo);
    return std::clamp(v, slot.lo, slot.hi);
}

Eigen::VectorXd encode_state(const Episode& episode, int step) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(kStateDim);
    const WorldState& w = episode.world();
    const VehicleState& ego = w.actor(episode.ego()).state;
    const double v_max = episode.config().vehicle.v_max;
    const VehicleState* adv = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [name, a] : w.actors) {
        if (name == episode.ego()) continue;
        double d = std::hypot(a.state.x - ego.x, a.state.y - ego.y);
        if (d < best) {
            best = d;
            adv = &a.state;
        }
    }
    s(2) = ego.speed / v_max;
    s(4) = 1.0;
    if (adv) {
        s(0) = (adv->x - ego.x) / 100.0;
        s(1) = (adv->y - ego.y) / 20.0;
        s(3) = adv->speed / v_max;
        double dth = normalize_angle(adv->heading - ego.heading);
        s(4) = std::cos(dth);
        s(5) = std::sin(dth);
        const auto& path = episode.ego_path();
        if (path.size() >= 2) s(6) = -project_onto_polyline(path, {adv->x, adv->y}).lateral / episode.lane_width();
    }
    const int total = std::max(1, episode.space().steps_total);
    s(7) = static_cast<double>(step) / total;
    if (step >= 1 && step <= kStepCap) s(7 + step) = 1.0;
    return s;
}

Eigen::VectorXd step_mask_vector(int step, const ParameterSpace& space, bool mask_enabled) {
    const int p = std::max(1, space.max_slots_per_step);
    if (!mask_enabled) return Eigen::VectorXd::Ones(p);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
    if (step >= 1 && step <= static_cast<int>(space.step_counts.size()))
        m.head(space.step_counts[static_cast<std::size_t>(step - 1)]).setOnes();
    return m;
}

double compute_reward(const StepOutcome& outcome, double collision_reward, double shaping_distance) {
    if (outcome.collided) return collision_reward;
    if (!std::isfinite(outcome.min_separation)) return 0.0;
    return std::max(0.0, 1.0 - outcome.min_separation / shaping_distance);
}

} // namespace bts
