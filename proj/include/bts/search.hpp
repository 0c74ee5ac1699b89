#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bts/config.hpp"
#include "bts/episode.hpp"
#include "bts/map.hpp"
#include "bts/scenario.hpp"
#include "bts/td3.hpp"

namespace bts {

struct SearchProblem {
    std::shared_ptr<const ValidatedScenario> scenario;
    std::shared_ptr<const MapGraph> map;
    SimConfig sim;
};

struct EpisodeRecord {
    int episode = 0; // 1-based
    double ret = 0.0;
    bool collided = false;
    double min_separation = 0.0;
    std::vector<double> values; // full slot vector; unexecuted slots hold midpoints
    std::uint64_t sim_seed = 0;
    bool error = false;
};

struct SearchReport {
    std::string algorithm;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::vector<EpisodeRecord> episodes;
    std::optional<int> stability_index;
    std::optional<double> collision_rate;      // over the search episodes
    std::optional<double> eval_collision_rate; // static-policy rate (td3) or search rate (baselines)
    std::optional<double> eval_sigma;
    double wall_seconds = 0.0;
    int errors = 0;
};

nlohmann::json to_json(const SearchReport& r);
SearchReport search_report_from_json(const nlohmann::json& j);
std::string returns_csv(const SearchReport& r);

struct SearchResult {
    SearchReport report;
    std::optional<Td3Agent> agent;
    std::size_t transitions_stored = 0;
};

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode_index);

// Masked TD3 over the per-step parameters.
SearchResult run_search(const SearchProblem& problem, const Td3Config& config, std::uint64_t seed);

// Fraction of M noisy-policy episodes that collide.
double evaluate_policy(const Td3Agent& agent, const SearchProblem& problem, int episodes, double sigma,
                       std::uint64_t seed, bool mask_enabled = true);

class TooShort : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kStabilityWindow = 20;
inline constexpr int kStabilitySpan = 50;
inline constexpr double kStabilityBand = 0.05;

// Smallest 1-based episode e such that, from e to the end of the curve (at least kStabilitySpan more
// episodes), the trailing moving average stays within ±kStabilityBand·(max−min) of its final value.
std::optional<int> iterations_to_stability(const std::vector<double>& returns);

// Replays one episode of a report with full trace.
EpisodeResult replay_episode(const SearchProblem& problem, const EpisodeRecord& record);

} // namespace bts
