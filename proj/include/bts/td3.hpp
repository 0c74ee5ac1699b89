#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bts/episode.hpp"
#include "bts/mlp.hpp"
#include "bts/scenario.hpp"

namespace bts {

inline constexpr int kStepCap = 8;
inline constexpr int kStateDim = 8 + kStepCap;

struct Td3Config {
    int episodes = 300;          // E
    double explore_sigma = 1.0;  // sigma
    int batch_size = 64;         // N
    double collision_reward = 10.0; // C
    double tau = 0.005;
    double gamma = 0.99;
    double noise_clip = 0.5;     // c
    double target_sigma = 0.2;
    std::size_t buffer_size = 100000;
    int policy_delay = 2;        // d
    std::size_t warmup = 200;
    int updates_per_step = 30; // gradient updates per environment step
    std::vector<int> hidden = {64, 64};
    double learning_rate = 3e-4;
    double shaping_distance = 20.0; // d0
    double eval_sigma = 0.1;
    int eval_episodes = 100;
    bool mask_enabled = true;
};

nlohmann::json to_json(const Td3Config& c);
Td3Config td3_config_from_json(const nlohmann::json& j, Td3Config base = {});

struct Transition {
    Eigen::VectorXd s;
    Eigen::VectorXd a; // stored as a ⊙ m
    Eigen::VectorXd m;
    double r = 0.0;
    Eigen::VectorXd s2;
    Eigen::VectorXd m2;
    bool done = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_.at(i); }
    // Distinct indices drawn uniformly.
    std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

class InsufficientBuffer : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UpdateStats {
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    std::optional<double> actor_loss;
};

class Td3Agent {
public:
    Td3Agent(int state_dim, int action_dim, const Td3Config& config, std::uint64_t seed);

    int action_dim() const { return action_dim_; }
    const Td3Config& config() const { return config_; }

    Eigen::VectorXd policy(const Eigen::VectorXd& s) const; // raw π(s), in [-1, 1]
    // clip(π(s) + N(0, sigma²), -1, 1) ⊙ m
    Eigen::VectorXd select_action(const Eigen::VectorXd& s, const Eigen::VectorXd& m, double sigma,
                                  std::mt19937_64& rng) const;

    // One TD3 update on the given transitions.
    UpdateStats update(const std::vector<const Transition*>& batch);
    UpdateStats update(const ReplayBuffer& buffer, std::mt19937_64& rng);

    // Bellman targets y = r + γ(1-done)·min(Q1', Q2') with smoothed target actions.
    Eigen::VectorXd targets(const std::vector<const Transition*>& batch);
    // dQ1/d(actor output) for the actor step, already multiplied by the mask.
    Eigen::MatrixXd actor_output_gradient(const std::vector<const Transition*>& batch) const;
    void soft_update();

    long update_count() const { return updates_; }
    long actor_update_count() const { return actor_updates_; }

    Mlp actor, critic1, critic2;
    Mlp actor_target, critic1_target, critic2_target;

private:
    Eigen::MatrixXd critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) const;

    int state_dim_;
    int action_dim_;
    Td3Config config_;
    Adam actor_opt_, critic1_opt_, critic2_opt_;
    std::mt19937_64 rng_;
    long updates_ = 0;
    long actor_updates_ = 0;
};

double denormalize(double a, const ParameterSlot& slot);

// Observation at the start of `step`: relative pose and speed of the nearest other actor.
Eigen::VectorXd encode_state(const Episode& episode, int step);

Eigen::VectorXd step_mask_vector(int step, const ParameterSpace& space, bool mask_enabled);

double compute_reward(const StepOutcome& outcome, double collision_reward, double shaping_distance);

} // namespace bts
