#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bts/scenario.hpp"
#include "bts/search.hpp"

namespace bts {

using LevelTable = std::vector<std::vector<double>>; // per slot, ascending

struct CoveringArray {
    std::vector<std::vector<int>> rows; // level indices, one entry per slot
    int strength = 2;
};

// lo, lo+step, ... within [lo, hi], with hi appended when the stride misses it.
std::vector<double> discretize(double lo, double hi, double step);
LevelTable discretize(const ParameterSpace& space, double step = 2.0);

// Greedy one-row-at-a-time construction. Throws if the result fails verification.
CoveringArray pairwise_cover(const LevelTable& levels, std::uint64_t seed);

// Number of level pairs (across distinct slots) that no row covers.
std::size_t uncovered_pairs(const LevelTable& levels, const CoveringArray& array);

// Text model with one "name: v1, v2, ..." line per slot.
std::string pict_model(const ParameterSpace& space, const LevelTable& levels);
LevelTable parse_pict_model(const std::string& text);

struct BaselineOptions {
    double collision_reward = 10.0;
    double shaping_distance = 20.0;
};

SearchReport random_search(const SearchProblem& problem, int episodes, std::uint64_t seed,
                           const BaselineOptions& options = {});

SearchReport combinatorial_search(const SearchProblem& problem, double step, std::uint64_t seed,
                                  const BaselineOptions& options = {});

// Runs one full-vector episode and sums the per-step rewards.
EpisodeRecord evaluate_values(const SearchProblem& problem, const std::vector<double>& values, std::uint64_t sim_seed,
                              const BaselineOptions& options);

} // namespace bts
