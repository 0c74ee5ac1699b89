#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bts/episode.hpp"
#include "bts/map.hpp"
#include "bts/parser.hpp"
#include "bts/scenario.hpp"
#include "bts/search.hpp"

namespace bts::testing {

inline std::filesystem::path source_dir() { return BTS_SOURCE_DIR; }

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string scenario_text(const std::string& name) { return read_text(source_dir() / "scenarios" / name); }

inline std::shared_ptr<const ValidatedScenario> validated(const std::string& source, const MapGraph& map) {
    ValidationResult vr = validate(parse(source), map);
    if (!vr.ok()) {
        std::string msg;
        for (const auto& d : vr.diagnostics) msg += format_diagnostic("<test>", d) + "\n";
        throw std::runtime_error("validation failed:\n" + msg);
    }
    return std::make_shared<const ValidatedScenario>(std::move(*vr.scenario));
}

// Scenario file plus the straight map its Road declaration names.
inline SearchProblem load_problem(const std::string& file, const std::string& kind) {
    SearchProblem p;
    p.map = std::make_shared<const MapGraph>(generate_map(kind, 1000.0, 3.5));
    p.scenario = validated(scenario_text(file), *p.map);
    return p;
}

inline SearchProblem overtaking() { return load_problem("overtaking.bts", "two_lane_two_way"); }
inline SearchProblem cut_in() { return load_problem("cut_in.bts", "two_lane_one_way"); }

// Wraps execute-block statements into a runnable scenario on a straight road.
inline std::string shell(const std::string& init, const std::string& execute, const std::string& oracle = "",
                         const std::string& road = "two_lane_two_way") {
    return "scenario s(){ map{ Road road with \"" + road + "\"; } init{ Aut_Car ego; " + init + " } execute{ " +
           execute + " } oracle{ " + oracle + " } }";
}

} // namespace bts::testing
