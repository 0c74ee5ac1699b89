#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bts {

// 1-based line/column; spans never compare unequal so that defaulted
// equality on AST nodes is structural.
struct SourceSpan {
    int line = 1;
    int column = 1;
    int length = 0;
    std::size_t offset = 0;

    bool operator==(const SourceSpan&) const { return true; }
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
    Severity severity = Severity::Error;
    SourceSpan span;
    std::string message;
    std::vector<std::string> expected;

    bool operator==(const Diagnostic&) const = default;
};

const char* to_string(Severity s);

// Literal value on the right-hand side of `attr == value`.
struct Literal {
    enum class Kind { Number, Text, Coordinate, Identifier };
    Kind kind = Kind::Number;
    double number = 0.0;
    double x = 0.0;
    double y = 0.0;
    std::string text;

    static Literal make_number(double v) { Literal l; l.kind = Kind::Number; l.number = v; return l; }
    static Literal make_text(std::string s) { Literal l; l.kind = Kind::Text; l.text = std::move(s); return l; }
    static Literal make_ident(std::string s) { Literal l; l.kind = Kind::Identifier; l.text = std::move(s); return l; }
    static Literal make_coordinate(double x, double y) { Literal l; l.kind = Kind::Coordinate; l.x = x; l.y = y; return l; }

    bool operator==(const Literal&) const = default;
};

enum class MapObjectKind {
    Junction,
    Road,
    Lane,
    Crosswalk,
    Signal,
    StopSign,
    YieldSign,
    ClearArea,
    SpeedBump,
    ParkingSpace,
    Overlap,
};

inline constexpr int kMapObjectKindCount = 11;

const char* to_string(MapObjectKind k);
std::optional<MapObjectKind> map_object_kind_from(std::string_view keyword);

struct PathSegment {
    std::string name;
    std::optional<int> index;

    bool operator==(const PathSegment&) const = default;
};

enum class CompareOp { Lt, Gt, Le, Ge, Eq, Ne };
const char* to_string(CompareOp op);

// `path == literal`, or a bare text literal which is shorthand for `kind == "..."`.
struct ConstraintExpr {
    std::vector<PathSegment> path;
    CompareOp op = CompareOp::Eq;
    Literal value;
    bool bare_text = false;
    SourceSpan span;

    bool operator==(const ConstraintExpr&) const = default;
};

struct MapDecl {
    MapObjectKind kind = MapObjectKind::Road;
    std::string name;
    std::vector<ConstraintExpr> constraints;
    SourceSpan span;

    bool operator==(const MapDecl&) const = default;
};

enum class ActorKind { AutCar, Car, Pedestrian };
const char* to_string(ActorKind k);

struct PositionSpec {
    enum class Kind { Unspecified, AbsoluteLane, Coordinate, Relative };
    Kind kind = Kind::Unspecified;
    std::string lane;       // AbsoluteLane
    double x = 0.0;         // Coordinate
    double y = 0.0;
    std::string anchor;     // Relative
    double angle_deg = 0.0; // clockwise
    double front_distance = 0.0;
    SourceSpan span;

    bool operator==(const PositionSpec&) const = default;
};

struct ActorDecl {
    ActorKind kind = ActorKind::Car;
    std::string name;
    std::vector<std::pair<std::string, Literal>> attributes;
    PositionSpec position;
    SourceSpan span;

    bool operator==(const ActorDecl&) const = default;
};

struct Expr {
    enum class Kind { Number, Interval, Text, Call, Attribute, Compare, And, Or, Not };
    Kind kind = Kind::Number;
    double number = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::string name;                // call name, attribute name, or text value
    std::vector<std::string> actors; // call arguments / attribute owner
    CompareOp op = CompareOp::Lt;
    std::vector<Expr> children;
    SourceSpan span;

    bool operator==(const Expr&) const = default;
};

struct ParamValue {
    enum class Kind { Fixed, Interval, Text };
    Kind kind = Kind::Fixed;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::string text;

    bool operator==(const ParamValue&) const = default;
};

struct ParamBinding {
    std::string name;
    ParamValue value;
    SourceSpan span;

    bool operator==(const ParamBinding&) const = default;
};

struct BtAstNode {
    enum class Kind { Serial, Parallel, Action };
    Kind kind = Kind::Serial;
    std::vector<BtAstNode> children;
    std::string actor;
    std::string action;
    std::vector<ParamBinding> params;
    std::optional<Expr> pre;
    std::optional<Expr> post;
    SourceSpan span;

    bool operator==(const BtAstNode&) const = default;
};

struct OracleDecl {
    enum class Kind { Periodic, Record };
    Kind kind = Kind::Periodic;
    Expr expr;
    SourceSpan span;

    bool operator==(const OracleDecl&) const = default;
};

struct ScenarioAst {
    std::string name;
    std::vector<MapDecl> map_block;
    std::vector<ActorDecl> init_block;
    BtAstNode execute;
    std::vector<OracleDecl> oracle_block;
    SourceSpan span;

    bool operator==(const ScenarioAst&) const = default;
};

// Canonical source text; reparses to a structurally equal AST.
std::string pretty_print(const ScenarioAst& ast);
std::string pretty_print(const Expr& expr);

} // namespace bts
