#include "bts/ast.hpp"

#include <charconv>
#include <sstream>

namespace bts {

const char* to_string(Severity s) {
    switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
    }
    return "error";
}

namespace {

constexpr const char* kMapKindNames[kMapObjectKindCount] = {
    "Junction", "Road", "Lane", "Crosswalk", "Signal", "StopSign",
    "YieldSign", "ClearArea", "SpeedBump", "ParkingSpace", "Overlap",
};

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string literal_text(const Literal& l) {
    switch (l.kind) {
    case Literal::Kind::Number: return num(l.number);
    case Literal::Kind::Text: return quote(l.text);
    case Literal::Kind::Coordinate: return num(l.x) + "@" + num(l.y);
    case Literal::Kind::Identifier: return l.text;
    }
    return {};
}

std::string interval_text(double lo, double hi) { return "[" + num(lo) + ":" + num(hi) + "]"; }

void print_expr(std::ostream& os, const Expr& e, int parent_prec) {
    // precedence: Or 1, And 2, Not 3, Compare 4, primary 5
    switch (e.kind) {
    case Expr::Kind::Number: os << num(e.number); return;
    case Expr::Kind::Interval: os << interval_text(e.lo, e.hi); return;
    case Expr::Kind::Text: os << quote(e.name); return;
    case Expr::Kind::Attribute: os << e.actors.at(0) << '.' << e.name; return;
    case Expr::Kind::Call: {
        bool method = e.name != "distance" && !e.actors.empty();
        std::size_t first = 0;
        if (method) {
            os << e.actors[0] << '.';
            first = 1;
        }
        os << e.name << '(';
        for (std::size_t i = first; i < e.actors.size(); ++i) os << (i > first ? "," : "") << e.actors[i];
        os << ')';
        return;
    }
    case Expr::Kind::Compare:
        if (parent_prec > 4) os << '(';
        print_expr(os, e.children[0], 5);
        os << ' ' << to_string(e.op) << ' ';
        print_expr(os, e.children[1], 5);
        if (parent_prec > 4) os << ')';
        return;
    case Expr::Kind::Not:
        os << '!';
        print_expr(os, e.children[0], 3);
        return;
    case Expr::Kind::And:
    case Expr::Kind::Or: {
        int prec = e.kind == Expr::Kind::Or ? 1 : 2;
        if (parent_prec > prec) os << '(';
        print_expr(os, e.children[0], prec);
        os << (e.kind == Expr::Kind::Or ? " || " : " && ");
        // left-associative: a parenthesized right operand of equal precedence must stay parenthesized
        print_expr(os, e.children[1], prec + 1);
        if (parent_prec > prec) os << ')';
        return;
    }
    }
}

void print_node(std::ostream& os, const BtAstNode& n, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (n.kind != BtAstNode::Kind::Action) {
        os << pad << (n.kind == BtAstNode::Kind::Serial ? "serial" : "parallel") << "(){\n";
        for (const auto& c : n.children) print_node(os, c, indent + 1);
        os << pad << "}\n";
        return;
    }
    os << pad;
    if (n.pre) {
        os << '[';
        print_expr(os, *n.pre, 0);
        os << "] ";
    }
    os << n.actor << '.' << n.action << '(';
    for (std::size_t i = 0; i < n.params.size(); ++i) {
        const auto& p = n.params[i];
        os << (i ? ", " : "") << p.name << '=';
        switch (p.value.kind) {
        case ParamValue::Kind::Fixed: os << num(p.value.value); break;
        case ParamValue::Kind::Interval: os << interval_text(p.value.lo, p.value.hi); break;
        case ParamValue::Kind::Text: os << quote(p.value.text); break;
        }
    }
    os << ')';
    if (n.post) {
        os << " [";
        print_expr(os, *n.post, 0);
        os << ']';
    }
    os << ";\n";
}

} // namespace

const char* to_string(MapObjectKind k) { return kMapKindNames[static_cast<int>(k)]; }

std::optional<MapObjectKind> map_object_kind_from(std::string_view keyword) {
    for (int i = 0; i < kMapObjectKindCount; ++i)
        if (keyword == kMapKindNames[i]) return static_cast<MapObjectKind>(i);
    return std::nullopt;
}

const char* to_string(CompareOp op) {
    switch (op) {
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
    }
    return "?";
}

const char* to_string(ActorKind k) {
    switch (k) {
    case ActorKind::AutCar: return "Aut_Car";
    case ActorKind::Car: return "Car";
    case ActorKind::Pedestrian: return "Pedestrian";
    }
    return "?";
}

std::string pretty_print(const Expr& expr) {
    std::ostringstream os;
    print_expr(os, expr, 0);
    return os.str();
}

std::string pretty_print(const ScenarioAst& ast) {
    std::ostringstream os;
    os << "scenario " << ast.name << "(){\n";
    os << "  map{\n";
    for (const auto& d : ast.map_block) {
        os << "    " << to_string(d.kind) << ' ' << d.name;
        for (std::size_t i = 0; i < d.constraints.size(); ++i) {
            const auto& c = d.constraints[i];
            os << (i ? ", " : " with ");
            if (c.bare_text) {
                os << quote(c.value.text);
                continue;
            }
            for (std::size_t j = 0; j < c.path.size(); ++j) {
                os << (j ? "." : "") << c.path[j].name;
                if (c.path[j].index) os << '[' << *c.path[j].index << ']';
            }
            os << ' ' << to_string(c.op) << ' ' << literal_text(c.value);
        }
        os << ";\n";
    }
    os << "  }\n  init{\n";
    for (const auto& a : ast.init_block) {
        os << "    " << to_string(a.kind) << ' ' << a.name;
        std::vector<std::string> parts;
        for (const auto& [k, v] : a.attributes) parts.push_back(k + " == " + literal_text(v));
        const auto& p = a.position;
        switch (p.kind) {
        case PositionSpec::Kind::Unspecified: break;
        case PositionSpec::Kind::AbsoluteLane: parts.push_back("absolute_position == " + p.lane); break;
        case PositionSpec::Kind::Coordinate: parts.push_back("absolute_position == " + num(p.x) + "@" + num(p.y)); break;
        case PositionSpec::Kind::Relative:
            parts.push_back("relative_to == " + p.anchor);
            break;
        }
        if (p.angle_deg != 0.0 || p.kind == PositionSpec::Kind::Relative) parts.push_back("angle == " + num(p.angle_deg));
        if (p.front_distance != 0.0 || p.kind == PositionSpec::Kind::Relative)
            parts.push_back("front_distance == " + num(p.front_distance));
        for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? ", " : " with ") << parts[i];
        os << ";\n";
    }
    os << "  }\n  execute{\n";
    print_node(os, ast.execute, 2);
    os << "  }\n  oracle{\n";
    for (const auto& o : ast.oracle_block) {
        os << "    " << (o.kind == OracleDecl::Kind::Periodic ? "periodic: " : "record: ");
        print_expr(os, o.expr, 0);
        os << ";\n";
    }
    os << "  }\n}\n";
    return os.str();
}

} // namespace bts
