#include "bts/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bts {

std::vector<double> discretize(double lo, double hi, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("discretization step must be positive");
    if (lo > hi) throw std::invalid_argument("interval lower bound exceeds upper bound");
    std::vector<double> out;
    const double tol = 1e-9 * std::max(1.0, std::abs(hi));
    for (long k = 0;; ++k) {
        double v = lo + static_cast<double>(k) * step;
        if (v > hi + tol) break;
        out.push_back(std::min(v, hi));
    }
    if (hi - out.back() > tol) out.push_back(hi);
    return out;
}

LevelTable discretize(const ParameterSpace& space, double step) {
    LevelTable t;
    for (const auto& s : space.slots) t.push_back(discretize(s.lo, s.hi, step));
    return t;
}

namespace {

class PairTracker {
public:
    explicit PairTracker(const LevelTable& levels) : levels_(levels), n_(levels.size()) {
        offsets_.assign(n_ * n_, 0);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) {
                offsets_[i * n_ + j] = total;
                total += levels[i].size() * levels[j].size();
            }
        covered_.assign(total, false);
        remaining_ = total;
    }

    bool covered(std::size_t i, int a, std::size_t j, int b) const { return covered_[index(i, a, j, b)]; }
    void cover(std::size_t i, int a, std::size_t j, int b) {
        auto k = index(i, a, j, b);
        if (!covered_[k]) {
            covered_[k] = true;
            --remaining_;
        }
    }
    std::size_t remaining() const { return remaining_; }

    std::size_t uncovered_with(std::size_t i, int a) const {
        std::size_t c = 0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (j == i) continue;
            for (int b = 0; b < static_cast<int>(levels_[j].size()); ++b) c += !covered(i, a, j, b);
        }
        return c;
    }

private:
    std::size_t index(std::size_t i, int a, std::size_t j, int b) const {
        if (i > j) {
            std::swap(i, j);
            std::swap(a, b);
        }
        return offsets_[i * n_ + j] + static_cast<std::size_t>(a) * levels_[j].size() + static_cast<std::size_t>(b);
    }

    const LevelTable& levels_;
    std::size_t n_;
    std::vector<std::size_t> offsets_;
    std::vector<bool> covered_;
    std::size_t remaining_ = 0;
};

template <typename T>
T pick_random(const std::vector<T>& v, std::mt19937_64& rng) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

} // namespace

CoveringArray pairwise_cover(const LevelTable& levels, std::uint64_t seed) {
    for (const auto& l : levels)
        if (l.empty()) throw std::invalid_argument("every slot needs at least one level");
    CoveringArray array;
    const std::size_t n = levels.size();
    if (n == 0) {
        array.rows.emplace_back();
        return array;
    }
    if (n == 1) {
        for (int a = 0; a < static_cast<int>(levels[0].size()); ++a) array.rows.push_back({a});
        return array;
    }

    constexpr int kCandidates = 20;
    std::mt19937_64 rng(seed);
    PairTracker tracker(levels);
    while (tracker.remaining() > 0) {
        // Seed factor-level: the one taking part in the most uncovered pairs.
        std::size_t best_count = 0;
        std::vector<std::pair<std::size_t, int>> seeds;
        for (std::size_t i = 0; i < n; ++i)
            for (int a = 0; a < static_cast<int>(levels[i].size()); ++a) {
                std::size_t c = tracker.uncovered_with(i, a);
                if (c > best_count) {
                    best_count = c;
                    seeds.clear();
                }
                if (c == best_count && c > 0) seeds.emplace_back(i, a);
            }

        std::vector<int> best_row;
        std::size_t best_gain = 0;
        for (int cand = 0; cand < kCandidates; ++cand) {
            auto [first, level] = pick_random(seeds, rng);
            std::vector<int> row(n, -1);
            row[first] = level;
            std::vector<std::size_t> order;
            for (std::size_t i = 0; i < n; ++i)
                if (i != first) order.push_back(i);
            std::shuffle(order.begin(), order.end(), rng);
            std::vector<std::size_t> assigned{first};
            std::size_t gain = 0;
            for (std::size_t f : order) {
                std::vector<std::size_t> gains(levels[f].size(), 0);
                for (std::size_t b = 0; b < gains.size(); ++b)
                    for (std::size_t k : assigned) gains[b] += !tracker.covered(k, row[k], f, static_cast<int>(b));
                std::size_t top = *std::max_element(gains.begin(), gains.end());
                std::vector<int> ties;
                for (std::size_t b = 0; b < gains.size(); ++b)
                    if (gains[b] == top) ties.push_back(static_cast<int>(b));
                row[f] = pick_random(ties, rng);
                gain += top;
                assigned.push_back(f);
            }
            if (gain > best_gain) {
                best_gain = gain;
                best_row = row;
            }
        }
        if (best_gain == 0) throw std::logic_error("pairwise construction stalled");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) tracker.cover(i, best_row[i], j, best_row[j]);
        array.rows.push_back(std::move(best_row));
    }

    if (uncovered_pairs(levels, array) != 0) throw std::logic_error("covering array failed verification");
    return array;
}

std::size_t uncovered_pairs(const LevelTable& levels, const CoveringArray& array) {
    std::size_t missing = 0;
    const std::size_t n = levels.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            std::vector<bool> seen(levels[i].size() * levels[j].size(), false);
            for (const auto& row : array.rows) {
                if (row.size() != n) throw std::invalid_argument("covering array row has the wrong width");
                seen[static_cast<std::size_t>(row[i]) * levels[j].size() + static_cast<std::size_t>(row[j])] = true;
            }
            missing += static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
        }
    return missing;
}

std::string pict_model(const ParameterSpace& space, const LevelTable& levels) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto& s = space.slots.at(i);
        os << 's' << s.slot_index + 1 << '_' << s.actor << '_' << s.name << ':';
        for (std::size_t k = 0; k < levels[i].size(); ++k) os << (k ? ", " : " ") << levels[i][k];
        os << '\n';
    }
    return os.str();
}

LevelTable parse_pict_model(const std::string& text) {
    LevelTable t;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("model line without ':'");
        std::vector<double> levels;
        std::istringstream vs(line.substr(colon + 1));
        std::string item;
        while (std::getline(vs, item, ',')) levels.push_back(std::stod(item));
        if (levels.empty()) throw std::invalid_argument("factor without values");
        t.push_back(std::move(levels));
    }
    return t;
}

EpisodeRecord evaluate_values(const SearchProblem& problem, const std::vector<double>& values, std::uint64_t sim_seed,
                              const BaselineOptions& options) {
    EpisodeRecord rec;
    rec.values = values;
    rec.sim_seed = sim_seed;
    EpisodeResult r = run_episode(bind_parameters(problem.scenario, values), *problem.map, problem.sim, sim_seed);
    for (const auto& o : r.step_outcomes) rec.ret += compute_reward(o, options.collision_reward, options.shaping_distance);
    rec.collided = r.collided;
    rec.min_separation = r.min_separation;
    return rec;
}

namespace {

void finish(SearchReport& report, std::chrono::steady_clock::time_point start) {
    int collisions = 0;
    std::vector<double> returns;
    for (const auto& e : report.episodes) {
        collisions += e.collided;
        returns.push_back(e.ret);
    }
    if (!report.episodes.empty()) {
        report.collision_rate = static_cast<double>(collisions) / report.episodes.size();
        report.eval_collision_rate = report.collision_rate;
    }
    if (returns.size() >= static_cast<std::size_t>(kStabilityWindow + kStabilitySpan))
        report.stability_index = iterations_to_stability(returns);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void run_row(const SearchProblem& problem, SearchReport& report, const std::vector<double>& values,
             std::uint64_t sim_seed, const BaselineOptions& options) {
    EpisodeRecord rec;
    try {
        rec = evaluate_values(problem, values, sim_seed, options);
    } catch (const std::exception&) {
        rec.values = values;
        rec.sim_seed = sim_seed;
        rec.error = true;
        ++report.errors;
    }
    rec.episode = static_cast<int>(report.episodes.size()) + 1;
    report.episodes.push_back(std::move(rec));
}

} // namespace

SearchReport random_search(const SearchProblem& problem, int episodes, std::uint64_t seed,
                           const BaselineOptions& options) {
    const ParameterSpace space = extract_parameter_space(*problem.scenario);
    if (space.empty()) throw std::invalid_argument("parameter space is empty");
    if (episodes < 0) throw std::invalid_argument("episode count must be non-negative");
    auto start = std::chrono::steady_clock::now();
    SearchReport report;
    report.algorithm = "random";
    report.seed = seed;
    report.config = {{"episodes", episodes},
                     {"collision_reward", options.collision_reward},
                     {"shaping_distance", options.shaping_distance}};
    std::mt19937_64 rng(seed);
    for (int e = 0; e < episodes; ++e) {
        std::vector<double> values;
        for (const auto& s : space.slots) values.push_back(std::uniform_real_distribution<double>(s.lo, s.hi)(rng));
        run_row(problem, report, values, episode_seed(seed, static_cast<std::uint64_t>(e)), options);
    }
    finish(report, start);
    return report;
}

SearchReport combinatorial_search(const SearchProblem& problem, double step, std::uint64_t seed,
                                  const BaselineOptions& options) {
    const ParameterSpace space = extract_parameter_space(*problem.scenario);
    if (space.empty()) throw std::invalid_argument("parameter space is empty");
    auto start = std::chrono::steady_clock::now();
    LevelTable levels = discretize(space, step);
    CoveringArray array = pairwise_cover(levels, seed);
    SearchReport report;
    report.algorithm = "pairwise";
    report.seed = seed;
    report.config = {{"ct_step", step},
                     {"rows", array.rows.size()},
                     {"collision_reward", options.collision_reward},
                     {"shaping_distance", options.shaping_distance}};
    for (std::size_t r = 0; r < array.rows.size(); ++r) {
        std::vector<double> values;
        for (std::size_t i = 0; i < levels.size(); ++i)
            values.push_back(levels[i][static_cast<std::size_t>(array.rows[r][i])]);
        run_row(problem, report, values, episode_seed(seed, r), options);
    }
    finish(report, start);
    return report;
}

} // namespace bts
