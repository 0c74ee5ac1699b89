#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "bts/lexer.hpp"
#include "bts/parser.hpp"
#include "bts/scenario.hpp"
#include "support.hpp"

namespace bts {
namespace {

using testing::scenario_text;
using testing::shell;

std::vector<TokenKind> kinds(const std::vector<Token>& toks) {
    std::vector<TokenKind> out;
    for (const auto& t : toks) out.push_back(t.kind);
    return out;
}

TEST(Lexer, SmallestDeclaration) {
    auto toks = tokenize("Car car;");
    EXPECT_EQ(kinds(toks), (std::vector{TokenKind::Keyword, TokenKind::Identifier, TokenKind::Semicolon, TokenKind::End}));
    EXPECT_EQ(toks[0].text, "Car");
    EXPECT_EQ(toks[1].text, "car");
}

TEST(Lexer, IntervalToken) {
    auto toks = tokenize("distance=[0:1000]");
    ASSERT_EQ(toks.size(), 4u);
    EXPECT_EQ(toks[0].kind, TokenKind::Identifier);
    EXPECT_EQ(toks[1].kind, TokenKind::Assign);
    EXPECT_EQ(toks[2].kind, TokenKind::Interval);
    EXPECT_EQ(toks[2].number, 0.0);
    EXPECT_EQ(toks[2].second, 1000.0);
}

TEST(Lexer, CommaIntervalAlias) {
    auto toks = tokenize("[10,20]");
    ASSERT_EQ(toks[0].kind, TokenKind::Interval);
    EXPECT_EQ(toks[0].number, 10.0);
    EXPECT_EQ(toks[0].second, 20.0);
}

TEST(Lexer, Coordinate) {
    auto toks = tokenize("1@2");
    ASSERT_EQ(toks[0].kind, TokenKind::Coordinate);
    EXPECT_EQ(toks[0].number, 1.0);
    EXPECT_EQ(toks[0].second, 2.0);
}

TEST(Lexer, IllegalCharacterHasSpan) {
    try {
        tokenize("Car $car;");
        FAIL() << "expected LexError";
    } catch (const LexError& e) {
        EXPECT_EQ(e.span().line, 1);
        EXPECT_EQ(e.span().column, 5);
    }
    LexResult r = lex("Car $ car # x;");
    EXPECT_EQ(r.diagnostics.size(), 2u);
    EXPECT_EQ(r.tokens.back().kind, TokenKind::End);
}

TEST(Lexer, LineComments) {
    auto toks = tokenize("Car a; // trailing\nCar b;");
    EXPECT_EQ(toks.size(), 7u);
    EXPECT_EQ(toks[3].span.line, 2);
}

TEST(Parser, OvertakingStructure) {
    ScenarioAst ast = parse(scenario_text("overtaking.bts"));
    EXPECT_EQ(ast.name, "overtaking");
    ASSERT_EQ(ast.execute.kind, BtAstNode::Kind::Serial);
    ASSERT_EQ(ast.execute.children.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& c = ast.execute.children[i];
        EXPECT_EQ(c.kind, BtAstNode::Kind::Action);
        EXPECT_FALSE(c.pre);
        EXPECT_EQ(c.post.has_value(), i == 0 || i == 2) << "child " << i + 1;
    }
    ASSERT_EQ(ast.init_block.size(), 2u);
    EXPECT_EQ(ast.init_block[1].kind, ActorKind::AutCar);
    EXPECT_EQ(ast.init_block[1].position.kind, PositionSpec::Kind::Relative);
    EXPECT_EQ(ast.init_block[1].position.front_distance, 20.0);
}

TEST(Parser, NestedComposites) {
    BtAstNode n = parse_bt_fragment("serial(){ parallel(){ a.followLane(); b.followLane(); } }");
    ASSERT_EQ(n.kind, BtAstNode::Kind::Serial);
    ASSERT_EQ(n.children.size(), 1u);
    ASSERT_EQ(n.children[0].kind, BtAstNode::Kind::Parallel);
    ASSERT_EQ(n.children[0].children.size(), 2u);
    EXPECT_EQ(n.children[0].children[0].actor, "a");
    EXPECT_EQ(n.children[0].children[1].actor, "b");
}

TEST(Parser, CompositeWithoutParens) {
    BtAstNode a = parse_bt_fragment("serial{ parallel{ a.followLane(); } }");
    BtAstNode b = parse_bt_fragment("serial(){ parallel(){ a.followLane(); } }");
    EXPECT_EQ(a, b);
}

TEST(Parser, UnknownActionIsNotASyntaxError) {
    const std::string src = "scenario s(){ map{} init{} execute{ serial(){ c.fly(); } } oracle{} }";
    ParseResult pr = parse_scenario(src);
    ASSERT_TRUE(pr.ast) << (pr.diagnostics.empty() ? "" : pr.diagnostics[0].message);
    ValidationResult vr = validate(*pr.ast, generate_map("two_lane_two_way", 100, 3.5));
    EXPECT_FALSE(vr.ok());
    EXPECT_TRUE(std::any_of(vr.diagnostics.begin(), vr.diagnostics.end(),
                            [](const Diagnostic& d) { return d.message.find("unknown action 'fly'") != std::string::npos; }));
}

TEST(Parser, GuardsAttachAsPreAndPost) {
    BtAstNode n = parse_bt_fragment("[distance(car1,car2)<100] car1.followLane(targetSpeed=60) [distance(car1,car2)>300];");
    ASSERT_EQ(n.kind, BtAstNode::Kind::Action);
    ASSERT_TRUE(n.pre);
    ASSERT_TRUE(n.post);
    EXPECT_EQ(n.pre->kind, Expr::Kind::Compare);
    EXPECT_EQ(n.pre->op, CompareOp::Lt);
    EXPECT_EQ(n.post->op, CompareOp::Gt);
    EXPECT_EQ(n.post->children[1].number, 300.0);
}

TEST(Parser, CollectsMultipleDiagnostics) {
    const std::string src = "scenario s(){ map{} init{ Car a Car b; Car ; } execute{ a.followLane(); } oracle{} }";
    ParseResult pr = parse_scenario(src);
    EXPECT_FALSE(pr.ast);
    EXPECT_GE(pr.diagnostics.size(), 2u);
    for (const auto& d : pr.diagnostics) {
        EXPECT_LE(d.span.offset + static_cast<std::size_t>(d.span.length), src.size());
        EXPECT_FALSE(d.expected.empty());
    }
}

TEST(Parser, DiagnosticFormat) {
    ParseResult pr = parse_scenario("scenario s{");
    ASSERT_FALSE(pr.diagnostics.empty());
    std::string text = format_diagnostic("f.bts", pr.diagnostics[0]);
    EXPECT_EQ(text.rfind("f.bts:1:", 0), 0u) << text;
    EXPECT_NE(text.find("error: "), std::string::npos);
}

std::vector<std::filesystem::path> corpus() {
    std::vector<std::filesystem::path> files;
    for (const char* dir : {"scenarios", "tests/data/snippets"})
        for (const auto& e : std::filesystem::directory_iterator(testing::source_dir() / dir))
            if (e.path().extension() == ".bts") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

TEST(Parser, PrettyPrintRoundTrip) {
    auto files = corpus();
    ASSERT_GE(files.size(), 10u);
    for (const auto& f : files) {
        ScenarioAst a = parse(testing::read_text(f));
        std::string printed = pretty_print(a);
        ScenarioAst b = parse(printed);
        EXPECT_EQ(a, b) << f;
        EXPECT_EQ(pretty_print(b), printed) << f;
    }
}

TEST(Validate, OvertakingHasNoDiagnostics) {
    ValidationResult vr = validate(parse(scenario_text("overtaking.bts")), generate_map("two_lane_two_way", 1000, 3.5));
    EXPECT_TRUE(vr.ok());
    EXPECT_TRUE(vr.diagnostics.empty());
    EXPECT_EQ(vr.scenario->ego, "ego");
}

TEST(Validate, TwoCarsUnderTest) {
    auto ast = parse(shell("Aut_Car other; Car c;", "c.followLane();"));
    ValidationResult vr = validate(ast, generate_map("two_lane_two_way", 100, 3.5));
    ASSERT_FALSE(vr.ok());
    EXPECT_NE(vr.diagnostics[0].message.find("multiple cars under test"), std::string::npos);
}

TEST(Validate, EgoCannotBeScripted) {
    auto ast = parse(shell("", "ego.followLane();", ""));
    ValidationResult vr = validate(ast, generate_map("two_lane_two_way", 100, 3.5));
    ASSERT_FALSE(vr.ok());
    EXPECT_NE(vr.diagnostics[0].message.find("car under test"), std::string::npos);
}

TEST(Validate, ReportsEachProblem) {
    auto ast = parse(shell("Car c;", "serial(){ c.followLane(speed=3); x.followLane(); c.changeLane(direction=\"up\"); }",
                           "periodic: ego.speed;"));
    ValidationResult vr = validate(ast, generate_map("two_lane_two_way", 100, 3.5));
    EXPECT_FALSE(vr.ok());
    EXPECT_EQ(vr.diagnostics.size(), 4u);
}

TEST(Validate, IntervalBoundsOrdered) {
    auto ast = parse(shell("Car c;", "c.followLane(distance=[10:5]);"));
    EXPECT_FALSE(validate(ast, generate_map("two_lane_two_way", 100, 3.5)).ok());
}

TEST(Validate, MissingRoad) {
    auto ast = parse("scenario s(){ map{ Junction j with type == \"+\"; } init{ Aut_Car ego; Car c; } execute{ c.followLane(); } oracle{} }");
    ValidationResult vr = validate(ast, generate_map("two_lane_two_way", 100, 3.5));
    ASSERT_FALSE(vr.ok());
    EXPECT_NE(vr.diagnostics[0].message.find("no map object matches 'j'"), std::string::npos);
}

TEST(Validate, SnippetShellsAreClean) {
    MapGraph crossroad = load_map((testing::source_dir() / "maps" / "crossroad.json").string());
    MapGraph two_way = generate_map("two_lane_two_way", 1000, 3.5);
    MapGraph one_way = generate_map("two_lane_one_way", 1000, 3.5);
    for (const auto& e : std::filesystem::directory_iterator(testing::source_dir() / "tests/data/snippets")) {
        ScenarioAst ast = parse(testing::read_text(e.path()));
        auto hint = map_kind_hint(ast.map_block);
        const MapGraph& map = !hint ? crossroad : *hint == "two_lane_one_way" ? one_way : two_way;
        ValidationResult vr = validate(ast, map);
        EXPECT_TRUE(vr.ok()) << e.path();
        EXPECT_TRUE(vr.diagnostics.empty()) << e.path();
    }
}

TEST(ParameterSpace, Overtaking) {
    ParameterSpace s = extract_parameter_space(parse(scenario_text("overtaking.bts")));
    ASSERT_EQ(s.size(), 12u);
    EXPECT_EQ(s.steps_total, 5);
    EXPECT_EQ(s.max_slots_per_step, 3);
    EXPECT_EQ(s.step_counts, (std::vector<int>{3, 2, 3, 2, 2}));
    const std::vector<std::pair<double, double>> bounds = {{25, 45}, {20, 50}, {5, 10}, {5, 15}, {30, 40}, {30, 40},
                                                           {50, 80}, {5, 10}, {6, 9},  {10, 20}, {10, 20}, {25, 30}};
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(s.slots[i].slot_index, static_cast<int>(i));
        EXPECT_EQ(s.slots[i].lo, bounds[i].first) << i;
        EXPECT_EQ(s.slots[i].hi, bounds[i].second) << i;
    }
    EXPECT_EQ(s.slots[2].origin, SlotOrigin::PostThreshold);
    EXPECT_EQ(s.slots[7].origin, SlotOrigin::PostThreshold);
    EXPECT_EQ(s.slots[0].name, "targetSpeed");
    EXPECT_EQ(s.slots[0].unit, ParamUnit::Speed);
    int pre_post = 0;
    for (const auto& sl : s.slots) pre_post += sl.origin != SlotOrigin::ActionParam;
    EXPECT_EQ(pre_post, 2);
}

TEST(ParameterSpace, FixedParamsOnly) {
    ParameterSpace s = extract_parameter_space(
        parse(shell("Car c;", "serial(){ c.followLane(distance=10); c.followLane(); c.followLane(targetSpeed=3); }")));
    EXPECT_TRUE(s.empty());
    EXPECT_EQ(s.steps_total, 3);
    EXPECT_EQ(s.max_slots_per_step, 0);
}

TEST(ParameterSpace, SingleLeaf) {
    ParameterSpace s = extract_parameter_space(parse(shell("Car c;", "c.followLane(distance=[0:1000]);")));
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.slots[0].step_index, 1);
    EXPECT_EQ(s.slots[0].name, "distance");
    EXPECT_EQ(s.slots[0].lo, 0.0);
    EXPECT_EQ(s.slots[0].hi, 1000.0);
    EXPECT_EQ(s.steps_total, 1);
}

TEST(ParameterSpace, PreThresholdPrecedesPost) {
    ParameterSpace s = extract_parameter_space(parse(shell(
        "Car c;", "[distance(c,ego)<[1:2]] c.followLane(targetSpeed=[3:4]) [distance(c,ego)>[5:6]];")));
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.slots[0].origin, SlotOrigin::ActionParam);
    EXPECT_EQ(s.slots[1].origin, SlotOrigin::PreThreshold);
    EXPECT_EQ(s.slots[2].origin, SlotOrigin::PostThreshold);
}

TEST(ParameterSpace, NestedCompositesShareStep) {
    ParameterSpace s = extract_parameter_space(parse(testing::read_text(
        testing::source_dir() / "tests/data/snippets/composition.bts")));
    EXPECT_EQ(s.steps_total, 2);
    EXPECT_EQ(s.step_counts, (std::vector<int>{4, 1}));
    EXPECT_EQ(s.slots[2].actor, "car2");
}

TEST(ParameterSpace, Deterministic) {
    auto ast = parse(scenario_text("overtaking.bts"));
    EXPECT_EQ(extract_parameter_space(ast), extract_parameter_space(parse(scenario_text("overtaking.bts"))));
}

TEST(Bind, MidpointsAndRange) {
    auto p = testing::overtaking();
    ParameterSpace s = extract_parameter_space(*p.scenario);
    auto mid = midpoint_values(s);
    BoundScenario b = bind_parameters(p.scenario, mid);
    const auto& p0 = b.concrete.execute.children[0].params[0];
    EXPECT_EQ(p0.name, "targetSpeed");
    EXPECT_EQ(p0.value.kind, ParamValue::Kind::Fixed);
    EXPECT_EQ(p0.value.value, 35.0);
    EXPECT_TRUE(extract_parameter_space(b.concrete).empty());

    mid[2] = 4.9;
    try {
        bind_parameters(p.scenario, mid);
        FAIL() << "expected OutOfRange";
    } catch (const OutOfRange& e) {
        EXPECT_EQ(e.slot_index(), 2);
    }
    EXPECT_THROW(bind_parameters(p.scenario, std::vector<double>(11, 30.0)), OutOfRange);
}

TEST(Bind, ZeroSlotIdentity) {
    MapGraph m = generate_map("two_lane_two_way", 100, 3.5);
    auto v = testing::validated(shell("Car c;", "c.followLane(distance=10);"), m);
    BoundScenario b = bind_parameters(v, std::vector<double>{});
    EXPECT_EQ(b.concrete, v->ast);
}

} // namespace
} // namespace bts
