#include "bts/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace bts {

using nlohmann::json;

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode_index) { return seed ^ episode_index; }

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Rollout {
    double ret = 0.0;
    EpisodeResult result;
    std::vector<double> values;
};

// Runs one episode choosing each step's action with `choose(state, mask)`.
template <typename Choose, typename Observe>
Rollout rollout(const SearchProblem& problem, const ParameterSpace& space, std::uint64_t sim_seed, bool mask_enabled,
                double collision_reward, double shaping, Choose&& choose, Observe&& observe) {
    Episode ep(problem.scenario, *problem.map, problem.sim, sim_seed);
    Rollout out;
    out.values = midpoint_values(space);
    Eigen::VectorXd s = encode_state(ep, ep.current_step());
    while (!ep.done()) {
        int t = ep.current_step();
        Eigen::VectorXd m = step_mask_vector(t, space, mask_enabled);
        Eigen::VectorXd a = choose(s, m);
        auto slots = space.step_slots(t);
        std::vector<double> vals;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            vals.push_back(denormalize(a(static_cast<Eigen::Index>(i)), slots[i]));
            out.values[static_cast<std::size_t>(slots[i].slot_index)] = vals.back();
        }
        ep.set_step_values(vals);
        StepOutcome o = ep.run_step();
        double r = compute_reward(o, collision_reward, shaping);
        out.ret += r;
        bool done = ep.done();
        int next = done ? t + 1 : ep.current_step();
        Eigen::VectorXd s2 = encode_state(ep, next);
        Eigen::VectorXd m2 = done ? Eigen::VectorXd::Zero(m.size()) : step_mask_vector(next, space, mask_enabled);
        observe(Transition{s, a, m, r, s2, m2, done});
        s = std::move(s2);
    }
    out.result = ep.result();
    return out;
}

} // namespace

SearchResult run_search(const SearchProblem& problem, const Td3Config& config, std::uint64_t seed) {
    const ParameterSpace space = extract_parameter_space(*problem.scenario);
    if (space.empty()) throw std::invalid_argument("parameter space is empty");
    auto start = std::chrono::steady_clock::now();
    const int action_dim = std::max(1, space.max_slots_per_step);

    SearchResult res;
    res.agent.emplace(kStateDim, action_dim, config, seed);
    Td3Agent& agent = *res.agent;
    ReplayBuffer buffer(config.buffer_size);
    std::mt19937_64 act_rng(seed * 0x9E3779B97F4A7C15ULL + 1);
    std::mt19937_64 sample_rng(seed * 0x9E3779B97F4A7C15ULL + 2);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const std::size_t learn_after = std::max(config.warmup, static_cast<std::size_t>(config.batch_size));

    SearchReport& report = res.report;
    report.algorithm = config.mask_enabled ? "td3" : "td3-nomask";
    report.seed = seed;
    report.config = to_json(config);
    int collisions = 0;
    for (int e = 0; e < config.episodes; ++e) {
        EpisodeRecord rec;
        rec.episode = e + 1;
        rec.sim_seed = episode_seed(seed, static_cast<std::uint64_t>(e));
        try {
            auto choose = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& m) -> Eigen::VectorXd {
                if (buffer.size() < config.warmup) {
                    Eigen::VectorXd a(m.size());
                    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = uniform(act_rng);
                    return a.cwiseProduct(m);
                }
                return agent.select_action(s, m, config.explore_sigma, act_rng);
            };
            auto observe = [&](Transition t) {
                buffer.push(std::move(t));
                ++res.transitions_stored;
                if (buffer.size() >= learn_after)
                    for (int k = 0; k < config.updates_per_step; ++k) agent.update(buffer, sample_rng);
            };
            Rollout r = rollout(problem, space, rec.sim_seed, config.mask_enabled, config.collision_reward,
                                config.shaping_distance, choose, observe);
            rec.ret = r.ret;
            rec.collided = r.result.collided;
            rec.min_separation = r.result.min_separation;
            rec.values = std::move(r.values);
        } catch (const std::exception&) {
            rec.error = true;
            ++report.errors;
        }
        collisions += rec.collided;
        report.episodes.push_back(std::move(rec));
    }
    if (!report.episodes.empty()) report.collision_rate = static_cast<double>(collisions) / report.episodes.size();
    std::vector<double> returns;
    for (const auto& r : report.episodes) returns.push_back(r.ret);
    if (returns.size() >= static_cast<std::size_t>(kStabilityWindow + kStabilitySpan))
        report.stability_index = iterations_to_stability(returns);
    if (config.eval_episodes > 0) {
        report.eval_sigma = config.eval_sigma;
        report.eval_collision_rate = evaluate_policy(agent, problem, config.eval_episodes, config.eval_sigma,
                                                     seed + 0x10000ULL, config.mask_enabled);
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

double evaluate_policy(const Td3Agent& agent, const SearchProblem& problem, int episodes, double sigma,
                       std::uint64_t seed, bool mask_enabled) {
    if (episodes <= 0) throw std::invalid_argument("evaluation needs at least one episode");
    const ParameterSpace space = extract_parameter_space(*problem.scenario);
    std::mt19937_64 rng(seed);
    int collided = 0;
    for (int i = 0; i < episodes; ++i) {
        auto choose = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& m) {
            return agent.select_action(s, m, sigma, rng);
        };
        Rollout r = rollout(problem, space, episode_seed(seed, static_cast<std::uint64_t>(i)), mask_enabled,
                            agent.config().collision_reward, agent.config().shaping_distance, choose,
                            [](const Transition&) {});
        collided += r.result.collided;
    }
    return static_cast<double>(collided) / episodes;
}

std::optional<int> iterations_to_stability(const std::vector<double>& returns) {
    const std::size_t n = returns.size();
    if (n < static_cast<std::size_t>(kStabilityWindow + kStabilitySpan))
        throw TooShort("stability needs at least " + std::to_string(kStabilityWindow + kStabilitySpan) + " episodes");
    std::vector<double> ma(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += returns[k];
        if (k >= static_cast<std::size_t>(kStabilityWindow)) sum -= returns[k - kStabilityWindow];
        ma[k] = sum / static_cast<double>(std::min<std::size_t>(k + 1, kStabilityWindow));
    }
    auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
    const double band = kStabilityBand * (*hi - *lo) + 1e-12 * std::max(1.0, std::abs(*hi));
    const double final_ma = ma.back();
    // Scan backwards for the longest tail that stays inside the band.
    std::size_t first = n;
    while (first > 0 && std::abs(ma[first - 1] - final_ma) <= band) --first;
    if (n - first < static_cast<std::size_t>(kStabilitySpan) + 1) return std::nullopt;
    return static_cast<int>(first) + 1;
}

EpisodeResult replay_episode(const SearchProblem& problem, const EpisodeRecord& record) {
    BoundScenario bound = bind_parameters(problem.scenario, record.values);
    return run_episode(bound, *problem.map, problem.sim, record.sim_seed);
}

json to_json(const SearchReport& r) {
    json eps = json::array();
    for (const auto& e : r.episodes) {
        json j{{"episode", e.episode},
               {"return", e.ret},
               {"collided", e.collided},
               {"min_separation", std::isfinite(e.min_separation) ? json(e.min_separation) : json(nullptr)},
               {"values", e.values},
               {"sim_seed", e.sim_seed}};
        if (e.error) j["error"] = true;
        eps.push_back(std::move(j));
    }
    return {
        {"algorithm", r.algorithm},
        {"seed", r.seed},
        {"config", r.config},
        {"episodes", eps},
        {"episode_count", r.episodes.size()},
        {"stability_index", r.stability_index ? json(*r.stability_index) : json(nullptr)},
        {"collision_rate", optional_json(r.collision_rate)},
        {"eval_collision_rate", optional_json(r.eval_collision_rate)},
        {"eval_sigma", optional_json(r.eval_sigma)},
        {"wall_seconds", r.wall_seconds},
        {"errors", r.errors},
    };
}

SearchReport search_report_from_json(const json& j) {
    SearchReport r;
    r.algorithm = j.at("algorithm").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.value("config", json::object());
    for (const auto& e : j.at("episodes")) {
        EpisodeRecord rec;
        rec.episode = e.at("episode").get<int>();
        rec.ret = e.at("return").get<double>();
        rec.collided = e.at("collided").get<bool>();
        rec.min_separation = e.at("min_separation").is_null() ? std::numeric_limits<double>::infinity()
                                                              : e.at("min_separation").get<double>();
        rec.values = e.value("values", std::vector<double>{});
        rec.sim_seed = e.value("sim_seed", std::uint64_t{0});
        rec.error = e.value("error", false);
        r.episodes.push_back(std::move(rec));
    }
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<double>();
    };
    if (j.contains("stability_index") && !j.at("stability_index").is_null())
        r.stability_index = j.at("stability_index").get<int>();
    r.collision_rate = opt("collision_rate");
    r.eval_collision_rate = opt("eval_collision_rate");
    r.eval_sigma = opt("eval_sigma");
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.errors = j.value("errors", 0);
    return r;
}

std::string returns_csv(const SearchReport& r) {
    std::ostringstream os;
    os << std::setprecision(17) << "episode,return,collided\n";
    for (const auto& e : r.episodes) os << e.episode << ',' << e.ret << ',' << (e.collided ? 1 : 0) << '\n';
    return os.str();
}

} // namespace bts
