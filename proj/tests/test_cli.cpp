#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using bts::testing::read_text;
using bts::testing::source_dir;

struct Output {
    int code = -1;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        std::random_device rd;
        dir_ = fs::temp_directory_path() / ("bts_cli_" + std::to_string(rd()));
        fs::create_directories(dir_);
        write("small.json", R"({"search": {"warmup": 16, "batch_size": 16, "updates_per_step": 2,
                                           "hidden": [16, 16], "eval_episodes": 5}})");
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

    Output bts(const std::string& args, const std::string& env = "") const {
        fs::path out = path("stdout.txt"), err = path("stderr.txt");
        std::string cmd = env + " '" + std::string(BTS_CLI) + "' " + args + " > '" + out.string() + "' 2> '" +
                          err.string() + "'";
        int status = std::system(cmd.c_str());
        Output o;
        o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        o.out = read_text(out);
        o.err = read_text(err);
        return o;
    }

    static std::string scenario(const std::string& name) { return (source_dir() / "scenarios" / name).string(); }

    fs::path dir_;
};

TEST_F(Cli, VersionAndHelp) {
    Output v = bts("--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find("bts 0.1.0"), std::string::npos);
    EXPECT_EQ(bts("--help").code, 0);
    EXPECT_EQ(bts("").code, 2);
    EXPECT_EQ(bts("frobnicate").code, 2);
}

TEST_F(Cli, ParseTextAndJson) {
    Output t = bts("parse " + scenario("overtaking.bts"));
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("slots=12"), std::string::npos);
    EXPECT_NE(t.out.find("km/h"), std::string::npos);
    Output j = bts("parse --format json " + scenario("overtaking.bts"));
    ASSERT_EQ(j.code, 0);
    auto doc = nlohmann::json::parse(j.out);
    EXPECT_EQ(doc.at("space").at("slots").size(), 12u);
    EXPECT_EQ(doc.at("space").at("step_counts"), (std::vector<int>{3, 2, 3, 2, 2}));
}

TEST_F(Cli, SyntaxErrorExitsOne) {
    write("bad.bts", "scenario s(){ map{ Road road with \"two_lane_two_way\"; } init{ Aut_Car ego; ");
    Output o = bts("parse " + path("bad.bts").string());
    EXPECT_EQ(o.code, 1);
    EXPECT_NE(o.err.find("bad.bts:"), std::string::npos);
    EXPECT_EQ(bts("parse " + path("missing.bts").string()).code, 1);
}

TEST_F(Cli, RunWithShortParamsExitsTwo) {
    write("eleven.json", "[30, 30, 11, 30, 40, 30, 30, 15, 30, 40, 30]");
    Output o = bts("run " + scenario("overtaking.bts") + " --params " + path("eleven.json").string());
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("missing slot 12"), std::string::npos);
    write("wide.json", "[300, 30, 11, 30, 40, 30, 30, 15, 30, 40, 30, 40]");
    EXPECT_EQ(bts("run " + scenario("overtaking.bts") + " --params " + path("wide.json").string()).code, 2);
    write("garbage.json", "{nope");
    EXPECT_EQ(bts("run " + scenario("overtaking.bts") + " --params " + path("garbage.json").string()).code, 2);
}

TEST_F(Cli, RunTracesAreIdentical) {
    std::string base = "run " + scenario("overtaking.bts") + " --seed 3 --trace ";
    ASSERT_EQ(bts(base + path("a.jsonl").string()).code, 0);
    Output second = bts(base + path("b.jsonl").string());
    ASSERT_EQ(second.code, 0);
    EXPECT_EQ(read_text(path("a.jsonl")), read_text(path("b.jsonl")));
    EXPECT_NE(second.out.find("termination:"), std::string::npos);
    Output insp = bts("inspect " + path("a.jsonl").string());
    EXPECT_EQ(insp.code, 0);
    EXPECT_NE(insp.out.find("trace:"), std::string::npos);
}

TEST_F(Cli, SearchArtifactsAndInspect) {
    std::string out = path("td3").string();
    Output s = bts("search " + scenario("overtaking.bts") + " --algo td3 --episodes 20 --seed 1 --keep-traces 2 --out " +
                   out + " --config " + path("small.json").string());
    ASSERT_EQ(s.code, 0) << s.err;
    for (const char* f : {"manifest.json", "report.json", "returns.csv", "agent.weights"})
        EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
    auto manifest = nlohmann::json::parse(read_text(fs::path(out) / "manifest.json"));
    EXPECT_EQ(manifest.at("mask_enabled"), true);
    EXPECT_EQ(manifest.at("scenario_sha256").get<std::string>().size(), 64u);
    int traces = 0;
    for (const auto& e : fs::directory_iterator(fs::path(out) / "traces")) {
        ++traces;
        EXPECT_EQ(bts("inspect " + e.path().string()).code, 0);
    }
    EXPECT_EQ(traces, 2);
    for (const char* f : {"manifest.json", "report.json", "agent.weights"})
        EXPECT_EQ(bts("inspect " + (fs::path(out) / f).string()).code, 0) << f;

    Output e = bts("eval " + scenario("overtaking.bts") + " --weights " + (fs::path(out) / "agent.weights").string() +
                   " --episodes 5");
    EXPECT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.out.find("eval collision rate"), std::string::npos);
    Output wrong = bts("eval " + scenario("cut_in.bts") + " --weights " + (fs::path(out) / "agent.weights").string());
    EXPECT_EQ(wrong.code, 2);
}

TEST_F(Cli, NoMaskRecordedInManifest) {
    std::string out = path("nomask").string();
    ASSERT_EQ(bts("search " + scenario("overtaking.bts") + " --algo td3 --episodes 10 --no-mask --out " + out +
                  " --config " + path("small.json").string())
                  .code,
              0);
    auto manifest = nlohmann::json::parse(read_text(fs::path(out) / "manifest.json"));
    EXPECT_EQ(manifest.at("mask_enabled"), false);
}

TEST_F(Cli, PairwisePrintsRows) {
    Output o = bts("search " + scenario("cut_in.bts") + " --algo pairwise --out " + path("pw").string());
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("covering array rows: 304"), std::string::npos) << o.out;
    auto report = nlohmann::json::parse(read_text(path("pw") / "report.json"));
    EXPECT_EQ(report.at("episodes").size(), 304u);
}

TEST_F(Cli, ReportComparesRuns) {
    std::string cfg = " --config " + path("small.json").string();
    ASSERT_EQ(bts("search " + scenario("cut_in.bts") + " --algo td3 --episodes 10 --out " + path("r1").string() + cfg)
                  .code,
              0);
    ASSERT_EQ(bts("search " + scenario("cut_in.bts") + " --algo random --episodes 10 --out " + path("r2").string()).code,
              0);
    ASSERT_EQ(bts("search " + scenario("cut_in.bts") + " --algo pairwise --ct-step 10 --out " + path("r3").string())
                  .code,
              0);
    Output three = bts("report " + path("r1").string() + " " + path("r2").string() + " " + path("r3").string() +
                       " --csv " + path("table.csv").string());
    ASSERT_EQ(three.code, 0) << three.err;
    for (const char* algo : {"td3", "random", "pairwise"}) EXPECT_NE(three.out.find(algo), std::string::npos);
    std::string csv = read_text(path("table.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

    EXPECT_EQ(bts("report " + path("r2").string()).code, 0);
    EXPECT_EQ(bts("report " + path("r1").string() + " " + path("nowhere").string()).code, 1);

    write("r2/returns.csv", "episode,return,collided\n1,0,0\n");
    EXPECT_EQ(bts("report " + path("r2").string()).code, 1);
}

TEST_F(Cli, ConfigFromEnvironment) {
    write("bad.json", R"({"search": {"episodez": 3}})");
    std::string cmd = "search " + scenario("cut_in.bts") + " --algo td3 --episodes 5 --out " + path("env").string();
    EXPECT_EQ(bts(cmd, "BTS_CONFIG='" + path("bad.json").string() + "'").code, 2);
    EXPECT_EQ(bts(cmd, "BTS_CONFIG='" + path("small.json").string() + "'").code, 0);
    auto manifest = nlohmann::json::parse(read_text(path("env") / "manifest.json"));
    EXPECT_EQ(manifest.at("config"), path("small.json").string());
    write("section.json", R"({"solver": {}})");
    EXPECT_EQ(bts("run " + scenario("cut_in.bts") + " --config " + path("section.json").string()).code, 2);
}

TEST_F(Cli, MapGenRoundTrip) {
    ASSERT_EQ(bts("map gen --kind four_lane_two_way --length 500 --out " + path("m.json").string()).code, 0);
    Output insp = bts("inspect " + path("m.json").string());
    EXPECT_EQ(insp.code, 0);
    EXPECT_NE(insp.out.find("4 lanes"), std::string::npos) << insp.out;
    EXPECT_EQ(bts("map gen --kind spiral").code, 2);
    Output run = bts("run " + scenario("cut_in.bts") + " --map " + (source_dir() / "maps/two_lane_one_way.json").string());
    EXPECT_EQ(run.code, 0) << run.err;
}

} // namespace
