#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "bts/baseline.hpp"
#include "bts/episode.hpp"
#include "bts/mlp.hpp"
#include "bts/parser.hpp"
#include "bts/search.hpp"
#include "bts/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 1, kParams = 2, kInternal = 3 };

// Carries an exit code up to main.
struct CliError {
    int code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError{kInput, "cannot open '" + path + "'"};
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError{kInput, "cannot write '" + path.string() + "'"};
    out << text;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

struct Config {
    std::string path;
    bts::SimConfig sim;
    json search = json::object();
};

Config load_config(const std::string& flag_path) {
    Config c;
    c.path = flag_path;
    if (c.path.empty())
        if (const char* env = std::getenv("BTS_CONFIG")) c.path = env;
    if (c.path.empty()) return c;
    try {
        json j = json::parse(read_file(c.path));
        for (const auto& [k, v] : j.items()) {
            (void)v;
            if (k != "sim" && k != "search") throw std::invalid_argument("unknown config section '" + k + "'");
        }
        c.sim = bts::sim_config_from_json(j.value("sim", json()));
        c.search = j.value("search", json::object());
        bts::td3_config_from_json(c.search);
    } catch (const CliError& e) {
        throw CliError{kParams, e.message};
    } catch (const std::exception& e) {
        throw CliError{kParams, c.path + ": " + e.what()};
    }
    return c;
}

struct Loaded {
    std::string scenario_path;
    std::string scenario_text;
    std::string map_path; // empty when generated
    std::shared_ptr<const bts::MapGraph> map;
    std::shared_ptr<const bts::ValidatedScenario> scenario;
};

// Parses and validates; prints diagnostics and throws exit 1 on any error.
Loaded load_scenario(const std::string& path, const std::string& map_path) {
    Loaded l;
    l.scenario_path = path;
    l.scenario_text = read_file(path);
    bts::ParseResult pr = bts::parse_scenario(l.scenario_text);
    bool failed = false;
    for (const auto& d : pr.diagnostics) {
        std::cerr << bts::format_diagnostic(path, d) << '\n';
        failed = failed || d.severity == bts::Severity::Error;
    }
    if (failed || !pr.ast) throw CliError{kInput, ""};

    try {
        if (!map_path.empty()) {
            l.map_path = map_path;
            l.map = std::make_shared<const bts::MapGraph>(bts::load_map(map_path));
        } else {
            std::string kind = bts::map_kind_hint(pr.ast->map_block).value_or("two_lane_two_way");
            l.map = std::make_shared<const bts::MapGraph>(bts::generate_map(kind, 1000.0, 3.5));
        }
    } catch (const std::exception& e) {
        throw CliError{kInput, e.what()};
    }

    bts::ValidationResult vr = bts::validate(*pr.ast, *l.map);
    for (const auto& d : vr.diagnostics) std::cerr << bts::format_diagnostic(path, d) << '\n';
    if (!vr.ok()) throw CliError{kInput, ""};
    l.scenario = std::make_shared<const bts::ValidatedScenario>(std::move(*vr.scenario));
    return l;
}

const char* unit_name(bts::ParamUnit u) {
    switch (u) {
    case bts::ParamUnit::Speed: return "km/h";
    case bts::ParamUnit::Length: return "m";
    case bts::ParamUnit::None: return "";
    }
    return "";
}

json space_json(const bts::ParameterSpace& space) {
    json slots = json::array();
    for (const auto& s : space.slots)
        slots.push_back({{"slot", s.slot_index + 1},
                         {"step", s.step_index},
                         {"actor", s.actor},
                         {"action", s.action},
                         {"origin", bts::to_string(s.origin)},
                         {"name", s.name},
                         {"lo", s.lo},
                         {"hi", s.hi},
                         {"unit", unit_name(s.unit)}});
    return {{"steps_total", space.steps_total},
            {"max_slots_per_step", space.max_slots_per_step},
            {"step_counts", space.step_counts},
            {"slots", slots}};
}

int cmd_parse(const std::string& file, const std::string& format, const std::string& map_path) {
    Loaded l = load_scenario(file, map_path);
    bts::ParameterSpace space = bts::extract_parameter_space(*l.scenario);
    const auto& ast = l.scenario->ast;
    if (format == "json") {
        json actors = json::array();
        for (const auto& a : ast.init_block) actors.push_back({{"name", a.name}, {"kind", bts::to_string(a.kind)}});
        json j{{"scenario", ast.name}, {"ego", l.scenario->ego}, {"actors", actors}, {"space", space_json(space)}};
        std::cout << j.dump(2) << '\n';
        return kOk;
    }
    std::cout << "scenario " << ast.name << '\n';
    std::cout << "  map objects: " << ast.map_block.size() << ", actors: " << ast.init_block.size()
              << " (ego: " << l.scenario->ego << "), oracles: " << ast.oracle_block.size() << '\n';
    std::cout << "  steps T=" << space.steps_total << ", slots=" << space.size()
              << ", max slots per step P=" << space.max_slots_per_step << '\n';
    std::cout << "  per-step counts:";
    for (int c : space.step_counts) std::cout << ' ' << c;
    std::cout << "\n\n";
    std::cout << std::left << std::setw(6) << "slot" << std::setw(6) << "step" << std::setw(12) << "actor"
              << std::setw(12) << "action" << std::setw(16) << "name" << "bounds\n";
    for (const auto& s : space.slots) {
        std::ostringstream b;
        b << '[' << s.lo << ", " << s.hi << ']';
        if (*unit_name(s.unit)) b << ' ' << unit_name(s.unit);
        std::string name = s.name;
        if (s.origin != bts::SlotOrigin::ActionParam)
            name += s.origin == bts::SlotOrigin::PreThreshold ? " (pre)" : " (post)";
        std::cout << std::left << std::setw(6) << s.slot_index + 1 << std::setw(6) << s.step_index << std::setw(12)
                  << s.actor << std::setw(12) << s.action << std::setw(16) << name << b.str() << '\n';
    }
    return kOk;
}

std::vector<double> read_params(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const CliError& e) {
        throw CliError{kParams, e.message};
    } catch (const std::exception& e) {
        throw CliError{kParams, path + ": " + e.what()};
    }
    if (j.is_object() && j.contains("values")) j = j.at("values");
    if (!j.is_array()) throw CliError{kParams, path + ": expected an array of slot values"};
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw CliError{kParams, path + ": slot values must be numbers"};
        v.push_back(x.get<double>());
    }
    return v;
}

struct RunOptions {
    std::string file, map, params, trace, config;
    bool params_mid = false;
    bool dump_bt = false;
    std::uint64_t seed = 0;
};

int cmd_run(const RunOptions& o) {
    Config cfg = load_config(o.config);
    Loaded l = load_scenario(o.file, o.map);
    bts::ParameterSpace space = bts::extract_parameter_space(*l.scenario);
    std::vector<double> values;
    if (!o.params.empty()) {
        values = read_params(o.params);
    } else {
        values = bts::midpoint_values(space);
    }
    bts::BoundScenario bound;
    try {
        bound = bts::bind_parameters(l.scenario, values);
    } catch (const bts::OutOfRange& e) {
        throw CliError{kParams, e.what()};
    }
    bts::Episode ep(l.scenario, *l.map, cfg.sim, o.seed);
    ep.set_all_values(bound.values);
    ep.run_to_end();
    bts::EpisodeResult r = ep.result();
    if (!o.trace.empty()) {
        std::ofstream out(o.trace, std::ios::binary);
        if (!out) throw CliError{kInput, "cannot write '" + o.trace + "'"};
        bts::write_trace_jsonl(out, r.trace);
    }
    if (o.dump_bt) std::cout << ep.bt_dump();
    std::cout << "collided: " << (r.collided ? "true" : "false") << '\n';
    std::cout << "min_separation: ";
    if (std::isfinite(r.min_separation)) {
        std::cout << r.min_separation << " m\n";
    } else {
        std::cout << "none\n";
    }
    std::cout << "duration: " << r.duration << " s (" << r.trace.rows.size() << " trace rows)\n";
    std::cout << "termination: " << bts::to_string(r.termination) << '\n';
    return kOk;
}

struct SearchOptions {
    std::string file, map, algo = "td3", out, config;
    int episodes = -1;
    std::uint64_t seed = 0;
    bool no_mask = false;
    double ct_step = 2.0;
    int keep_traces = 0;
};

int cmd_search(const SearchOptions& o) {
    Config cfg = load_config(o.config);
    Loaded l = load_scenario(o.file, o.map);
    bts::Td3Config td3;
    try {
        td3 = bts::td3_config_from_json(cfg.search);
    } catch (const std::exception& e) {
        throw CliError{kParams, e.what()};
    }
    if (o.episodes >= 0) td3.episodes = o.episodes;
    if (o.no_mask) td3.mask_enabled = false;
    if (!(o.ct_step > 0.0)) throw CliError{kParams, "--ct-step must be positive"};
    if (bts::extract_parameter_space(*l.scenario).empty()) throw CliError{kParams, "parameter space is empty"};

    fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError{kInput, "cannot create '" + o.out + "': " + ec.message()};

    json manifest{{"tool", "bts"},
                  {"version", bts::kVersion},
                  {"scenario", l.scenario_path},
                  {"scenario_sha256", sha256_hex(l.scenario_text)},
                  {"map", l.map_path.empty() ? json(nullptr) : json(l.map_path)},
                  {"map_sha256", sha256_hex(bts::map_to_json(*l.map).dump())},
                  {"config", cfg.path.empty() ? json(nullptr) : json(cfg.path)},
                  {"config_sha256", cfg.path.empty() ? json(nullptr) : json(sha256_hex(read_file(cfg.path)))},
                  {"sim_config", bts::to_json(cfg.sim)},
                  {"seed", o.seed},
                  {"algorithm", o.algo},
                  {"output", o.out}};
    if (o.algo == "td3") {
        manifest["mask_enabled"] = td3.mask_enabled;
        manifest["search_config"] = bts::to_json(td3);
    } else if (o.algo == "random") {
        manifest["episodes"] = td3.episodes;
    } else if (o.algo == "pairwise") {
        manifest["ct_step"] = o.ct_step;
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    bts::SearchProblem problem{l.scenario, l.map, cfg.sim};
    bts::BaselineOptions baseline{td3.collision_reward, td3.shaping_distance};
    bts::SearchReport report;
    std::optional<bts::Td3Agent> agent;
    if (o.algo == "td3") {
        bts::SearchResult res = bts::run_search(problem, td3, o.seed);
        report = std::move(res.report);
        agent = std::move(res.agent);
    } else if (o.algo == "random") {
        report = bts::random_search(problem, td3.episodes, o.seed, baseline);
    } else {
        report = bts::combinatorial_search(problem, o.ct_step, o.seed, baseline);
        std::cout << "covering array rows: " << report.episodes.size() << '\n';
    }
    for (const auto& e : report.episodes)
        if (e.error) std::cerr << "episode " << e.episode << ": simulation error\n";

    write_file(dir / "report.json", bts::to_json(report).dump(2) + "\n");
    write_file(dir / "returns.csv", bts::returns_csv(report));
    if (agent) {
        std::ofstream w(dir / "agent.weights", std::ios::binary);
        bts::write_weights(w, {&agent->actor, &agent->critic1, &agent->critic2});
    }
    if (o.keep_traces > 0) {
        std::vector<const bts::EpisodeRecord*> ranked;
        for (const auto& e : report.episodes)
            if (!e.error) ranked.push_back(&e);
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](auto* a, auto* b) { return a->min_separation < b->min_separation; });
        if (ranked.size() > static_cast<std::size_t>(o.keep_traces)) ranked.resize(static_cast<std::size_t>(o.keep_traces));
        fs::create_directories(dir / "traces");
        for (const auto* e : ranked) {
            bts::EpisodeResult r = bts::replay_episode(problem, *e);
            std::ofstream t(dir / "traces" / ("episode_" + std::to_string(e->episode) + ".jsonl"), std::ios::binary);
            bts::write_trace_jsonl(t, r.trace);
        }
    }

    std::cout << "algorithm: " << report.algorithm << ", episodes: " << report.episodes.size() << '\n';
    if (report.collision_rate) std::cout << "search collision rate: " << *report.collision_rate << '\n';
    if (report.eval_collision_rate) {
        std::cout << "eval collision rate: " << *report.eval_collision_rate;
        if (report.eval_sigma) std::cout << " (sigma_eval " << *report.eval_sigma << ')';
        std::cout << '\n';
    }
    std::cout << "stability index: "
              << (report.stability_index ? std::to_string(*report.stability_index) : std::string("none")) << '\n';
    return kOk;
}

bts::SearchReport load_report(const fs::path& dir) {
    fs::path p = dir / "report.json";
    if (!fs::exists(p)) throw CliError{kInput, dir.string() + ": no report.json"};
    try {
        bts::SearchReport r = bts::search_report_from_json(json::parse(read_file(p.string())));
        fs::path csv = dir / "returns.csv";
        if (fs::exists(csv)) {
            std::istringstream is(read_file(csv.string()));
            std::string line;
            std::getline(is, line);
            std::size_t rows = 0;
            while (std::getline(is, line))
                if (!line.empty()) ++rows;
            if (rows != r.episodes.size()) throw std::runtime_error("returns.csv disagrees with report.json");
        }
        return r;
    } catch (const CliError&) {
        throw;
    } catch (const std::exception& e) {
        throw CliError{kInput, p.string() + ": " + e.what()};
    }
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& csv_path) {
    struct Group {
        std::vector<std::uint64_t> seeds;
        std::vector<double> rates;
        std::vector<double> stability;
    };
    std::vector<std::string> order;
    std::map<std::string, Group> groups;
    for (const auto& d : dirs) {
        bts::SearchReport r = load_report(d);
        if (!groups.count(r.algorithm)) order.push_back(r.algorithm);
        Group& g = groups[r.algorithm];
        g.seeds.push_back(r.seed);
        if (r.eval_collision_rate) g.rates.push_back(*r.eval_collision_rate);
        if (r.stability_index) g.stability.push_back(*r.stability_index);
    }
    auto mean = [](const std::vector<double>& v) {
        return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        double m = mean(v), s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size() - 1));
    };
    std::ostringstream csv;
    csv << "algorithm,seeds,runs,collision_rate_mean,collision_rate_std,stability_mean\n";
    std::cout << std::left << std::setw(14) << "algorithm" << std::setw(16) << "seeds" << std::setw(24)
              << "collision rate" << "stability\n";
    for (const auto& name : order) {
        const Group& g = groups[name];
        std::ostringstream seeds;
        for (std::size_t i = 0; i < g.seeds.size(); ++i) seeds << (i ? " " : "") << g.seeds[i];
        std::ostringstream rate;
        rate << std::fixed << std::setprecision(3) << mean(g.rates) << " +- " << stddev(g.rates);
        std::ostringstream stab;
        if (g.stability.empty()) {
            stab << "none";
        } else {
            stab << std::fixed << std::setprecision(1) << mean(g.stability);
        }
        std::cout << std::left << std::setw(14) << name << std::setw(16) << seeds.str() << std::setw(24) << rate.str()
                  << stab.str() << '\n';
        csv << name << ',' << seeds.str() << ',' << g.seeds.size() << ',' << mean(g.rates) << ',' << stddev(g.rates)
            << ',' << (g.stability.empty() ? std::string() : std::to_string(mean(g.stability))) << '\n';
    }
    if (!csv_path.empty()) write_file(csv_path, csv.str());
    return kOk;
}

int cmd_eval(const std::string& file, const std::string& map, const std::string& weights, const std::string& config,
             int episodes, double sigma, std::uint64_t seed, bool no_mask) {
    Config cfg = load_config(config);
    Loaded l = load_scenario(file, map);
    std::ifstream in(weights, std::ios::binary);
    if (!in) throw CliError{kInput, "cannot open '" + weights + "'"};
    std::vector<bts::Mlp> nets;
    try {
        nets = bts::read_weights(in);
    } catch (const std::exception& e) {
        throw CliError{kInput, weights + ": " + e.what()};
    }
    if (nets.empty()) throw CliError{kInput, weights + ": no networks"};
    bts::ParameterSpace space = bts::extract_parameter_space(*l.scenario);
    bts::Td3Config td3 = bts::td3_config_from_json(cfg.search);
    const int action_dim = std::max(1, space.max_slots_per_step);
    if (nets[0].sizes().front() != bts::kStateDim || nets[0].sizes().back() != action_dim)
        throw CliError{kParams, weights + ": actor shape does not fit this scenario"};
    td3.hidden.assign(nets[0].sizes().begin() + 1, nets[0].sizes().end() - 1);
    bts::Td3Agent agent(bts::kStateDim, action_dim, td3, seed);
    agent.actor = nets[0];
    if (episodes <= 0) throw CliError{kParams, "--episodes must be positive"};
    bts::SearchProblem problem{l.scenario, l.map, cfg.sim};
    double rate = bts::evaluate_policy(agent, problem, episodes, sigma, seed, !no_mask);
    std::cout << "eval collision rate: " << rate << " (" << episodes << " episodes, sigma_eval " << sigma << ")\n";
    return kOk;
}

int cmd_inspect(const std::string& path) {
    std::string text = read_file(path);
    try {
        if (text.rfind("BTSW", 0) == 0) {
            std::istringstream is(text);
            auto nets = bts::read_weights(is);
            std::cout << "weights: " << nets.size() << " networks\n";
            for (const auto& n : nets) {
                std::cout << " ";
                for (int s : n.sizes()) std::cout << ' ' << s;
                std::cout << " (" << n.parameter_count() << " parameters)\n";
            }
            return kOk;
        }
        if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
            std::istringstream is(text);
            bts::Trace t = bts::read_trace_jsonl(is);
            std::cout << "trace: " << t.rows.size() << " rows, " << t.events.size() << " events";
            if (!t.rows.empty()) std::cout << ", t_end " << t.rows.back().time << " s";
            std::cout << '\n';
            return kOk;
        }
        json j = json::parse(text);
        if (j.contains("lanes")) {
            bts::MapGraph m = bts::map_from_json(j);
            std::cout << "map: " << m.junctions.size() << " junctions, " << m.roads.size() << " roads, "
                      << m.lanes.size() << " lanes, " << m.objects.size() << " objects\n";
        } else if (j.contains("episodes") && j.contains("algorithm")) {
            bts::SearchReport r = bts::search_report_from_json(j);
            std::cout << "report: " << r.algorithm << ", seed " << r.seed << ", " << r.episodes.size() << " episodes\n";
        } else if (j.contains("tool") && j.contains("scenario_sha256")) {
            std::cout << "manifest: " << j.at("algorithm").get<std::string>() << ", seed " << j.at("seed") << '\n';
        } else {
            throw std::runtime_error("unrecognized file");
        }
    } catch (const std::exception& e) {
        throw CliError{kInput, path + ": " + e.what()};
    }
    return kOk;
}

int cmd_map_gen(const std::string& kind, double length, double width, const std::string& out) {
    bts::MapGraph m;
    try {
        m = bts::generate_map(kind, length, width);
    } catch (const std::exception& e) {
        throw CliError{kParams, e.what()};
    }
    if (out.empty()) {
        std::cout << bts::map_to_json(m).dump(2) << '\n';
    } else {
        bts::save_map(m, out);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Behavior-tree scenario language, simulator and critical-scenario search"};
    app.set_version_flag("--version", std::string("bts ") + bts::kVersion + " (trace format " +
                                          std::to_string(bts::kTraceFormat) + ", report format " +
                                          std::to_string(bts::kReportFormat) + ", weights format " +
                                          std::to_string(bts::kWeightsFormat) + ")");
    app.require_subcommand(1);

    std::string parse_file, parse_format = "text", parse_map;
    auto* parse = app.add_subcommand("parse", "Parse and validate a scenario, print its parameter space");
    parse->add_option("file", parse_file, "Scenario file")->required();
    parse->add_option("--format", parse_format, "Output format")->check(CLI::IsMember({"text", "json"}));
    parse->add_option("--map", parse_map, "Map JSON file");

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run one concrete scenario");
    run->add_option("file", run_opts.file, "Scenario file")->required();
    auto* params = run->add_option("--params", run_opts.params, "JSON array of slot values");
    run->add_flag("--params-mid", run_opts.params_mid, "Use interval midpoints (default)")->excludes(params);
    run->add_option("--map", run_opts.map, "Map JSON file");
    run->add_option("--seed", run_opts.seed, "Simulation seed");
    run->add_option("--trace", run_opts.trace, "Write the trace as JSONL");
    run->add_option("--config", run_opts.config, "Config JSON (default $BTS_CONFIG)");
    run->add_flag("--dump-bt", run_opts.dump_bt, "Print the final behavior-tree state");

    SearchOptions search_opts;
    auto* search = app.add_subcommand("search", "Search the parameter space for collisions");
    search->add_option("file", search_opts.file, "Scenario file")->required();
    search->add_option("--algo", search_opts.algo, "Search algorithm")
        ->check(CLI::IsMember({"td3", "random", "pairwise"}));
    search->add_option("--episodes", search_opts.episodes, "Episode budget");
    search->add_option("--seed", search_opts.seed, "Seed");
    search->add_option("--out", search_opts.out, "Output directory")->required();
    search->add_option("--map", search_opts.map, "Map JSON file");
    search->add_option("--config", search_opts.config, "Config JSON (default $BTS_CONFIG)");
    search->add_flag("--no-mask", search_opts.no_mask, "Disable the per-step action mask");
    search->add_option("--ct-step", search_opts.ct_step, "Pairwise discretization stride");
    search->add_option("--keep-traces", search_opts.keep_traces, "Keep traces of the N closest episodes");

    std::vector<std::string> report_dirs;
    std::string report_csv;
    auto* report = app.add_subcommand("report", "Compare search run directories");
    report->add_option("dirs", report_dirs, "Run directories")->required();
    report->add_option("--csv", report_csv, "Also write the table as CSV");

    std::string eval_file, eval_map, eval_weights, eval_config;
    int eval_episodes = 100;
    double eval_sigma = 0.1;
    std::uint64_t eval_seed = 0;
    bool eval_no_mask = false;
    auto* eval = app.add_subcommand("eval", "Evaluate a saved agent");
    eval->add_option("file", eval_file, "Scenario file")->required();
    eval->add_option("--weights", eval_weights, "agent.weights file")->required();
    eval->add_option("--map", eval_map, "Map JSON file");
    eval->add_option("--config", eval_config, "Config JSON (default $BTS_CONFIG)");
    eval->add_option("--episodes", eval_episodes, "Evaluation episodes");
    eval->add_option("--sigma", eval_sigma, "Evaluation noise");
    eval->add_option("--seed", eval_seed, "Seed");
    eval->add_flag("--no-mask", eval_no_mask, "Agent was trained without the mask");

    std::string inspect_file;
    auto* inspect = app.add_subcommand("inspect", "Summarize a file written by this tool");
    inspect->add_option("file", inspect_file, "Trace, weights, report, manifest or map file")->required();

    std::string map_kind = "two_lane_two_way", map_out;
    double map_length = 1000.0, map_width = 3.5;
    auto* map = app.add_subcommand("map", "Map utilities");
    map->require_subcommand(1);
    auto* gen = map->add_subcommand("gen", "Generate a straight multi-lane road");
    gen->add_option("--kind", map_kind, "two_lane_two_way, two_lane_one_way or four_lane_two_way");
    gen->add_option("--length", map_length, "Road length in meters");
    gen->add_option("--lane-width", map_width, "Lane width in meters");
    gen->add_option("--out", map_out, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kParams;
    }

    try {
        if (*parse) return cmd_parse(parse_file, parse_format, parse_map);
        if (*run) return cmd_run(run_opts);
        if (*search) return cmd_search(search_opts);
        if (*report) return cmd_report(report_dirs, report_csv);
        if (*eval)
            return cmd_eval(eval_file, eval_map, eval_weights, eval_config, eval_episodes, eval_sigma, eval_seed,
                            eval_no_mask);
        if (*inspect) return cmd_inspect(inspect_file);
        if (*gen) return cmd_map_gen(map_kind, map_length, map_width, map_out);
    } catch (const CliError& e) {
        if (!e.message.empty()) std::cerr << "error: " << e.message << '\n';
        return e.code;
    } catch (const bts::OutOfRange& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kParams;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kInternal;
}
