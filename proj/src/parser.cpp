#include "bts/parser.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include "bts/lexer.hpp"

namespace bts {

namespace {

std::string summarize(const std::vector<Diagnostic>& diags) {
    if (diags.empty()) return "parse failed";
    std::string msg = diags.front().message;
    if (diags.size() > 1) msg += " (+" + std::to_string(diags.size() - 1) + " more)";
    return msg;
}

SourceSpan cover(const SourceSpan& first, const SourceSpan& last) {
    SourceSpan s = first;
    std::size_t end = last.offset + static_cast<std::size_t>(last.length);
    s.length = end > first.offset ? static_cast<int>(end - first.offset) : first.length;
    return s;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
        : toks_(std::move(tokens)), diags_(diags) {}

    std::optional<ScenarioAst> scenario() {
        ScenarioAst ast;
        try {
            const Token& kw = expect_keyword("scenario");
            ast.span = kw.span;
            ast.name = expect(TokenKind::Identifier, "scenario name").text;
            expect(TokenKind::LParen, "'('");
            expect(TokenKind::RParen, "')'");
            expect(TokenKind::LBrace, "'{'");
        } catch (const Abort&) {
            return std::nullopt;
        }

        bool seen_map = false, seen_init = false, seen_execute = false, seen_oracle = false;
        while (!at(TokenKind::RBrace) && !at(TokenKind::End)) {
            const Token& t = cur();
            auto dup = [&](bool& seen, const char* name) {
                if (seen) error(t.span, std::string("duplicate '") + name + "' block");
                seen = true;
            };
            try {
                if (at_keyword("map")) {
                    dup(seen_map, "map");
                    map_block(ast.map_block);
                } else if (at_keyword("init")) {
                    dup(seen_init, "init");
                    init_block(ast.init_block);
                } else if (at_keyword("execute")) {
                    dup(seen_execute, "execute");
                    execute_block(ast.execute);
                } else if (at_keyword("oracle")) {
                    dup(seen_oracle, "oracle");
                    oracle_block(ast.oracle_block);
                } else {
                    fail(t.span, "expected a scenario block", {"map", "init", "execute", "oracle"});
                }
            } catch (const Abort&) {
                synchronize();
                if (at(TokenKind::RBrace)) advance(); // closes the broken block
            }
        }
        auto missing = [&](bool seen, const char* name) {
            if (!seen) error(ast.span, std::string("missing '") + name + "' block");
        };
        missing(seen_map, "map");
        missing(seen_init, "init");
        missing(seen_execute, "execute");
        missing(seen_oracle, "oracle");

        if (!at(TokenKind::RBrace)) {
            error(cur().span, "expected '}' to close the scenario", {"'}'"});
            return std::nullopt;
        }
        advance();
        if (!at(TokenKind::End)) error(cur().span, "unexpected input after the scenario", {"end of input"});
        return ast;
    }

    std::optional<BtAstNode> fragment() {
        try {
            BtAstNode n = node();
            if (!at(TokenKind::End)) fail(cur().span, "unexpected input after the node", {"end of input"});
            return n;
        } catch (const Abort&) {
            return std::nullopt;
        }
    }

private:
    struct Abort {};

    const Token& cur() const { return toks_[pos_]; }
    const Token& look(std::size_t k) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    bool at(TokenKind k) const { return cur().kind == k; }
    bool at_keyword(const char* kw) const { return cur().kind == TokenKind::Keyword && cur().text == kw; }
    const Token& advance() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }

    void error(const SourceSpan& span, std::string msg, std::vector<std::string> expected = {}) {
        Diagnostic d;
        d.span = span;
        d.message = std::move(msg);
        d.expected = std::move(expected);
        diags_.push_back(std::move(d));
    }

    [[noreturn]] void fail(const SourceSpan& span, std::string msg, std::vector<std::string> expected = {}) {
        error(span, std::move(msg), std::move(expected));
        throw Abort{};
    }

    std::string found() const {
        const Token& t = cur();
        if (t.kind == TokenKind::End) return "end of input";
        return "'" + t.text + "'";
    }

    const Token& expect(TokenKind k, const std::string& what) {
        if (!at(k)) fail(cur().span, "expected " + what + ", found " + found(), {to_string(k)});
        return advance();
    }

    const Token& expect_keyword(const char* kw) {
        if (!at_keyword(kw)) fail(cur().span, std::string("expected '") + kw + "', found " + found(), {kw});
        return advance();
    }

    // Skips to just past the next ';' or to the next '}' at the current nesting level.
    void synchronize() {
        int depth = 0;
        while (!at(TokenKind::End)) {
            if (at(TokenKind::LBrace)) {
                ++depth;
            } else if (at(TokenKind::RBrace)) {
                if (depth == 0) return;
                --depth;
                if (depth == 0) {
                    advance();
                    return;
                }
            } else if (at(TokenKind::Semicolon) && depth == 0) {
                advance();
                return;
            }
            advance();
        }
    }

    template <typename Fn>
    void statements(Fn&& fn) {
        expect(TokenKind::LBrace, "'{'");
        while (!at(TokenKind::RBrace) && !at(TokenKind::End)) {
            try {
                fn();
            } catch (const Abort&) {
                synchronize();
            }
        }
        expect(TokenKind::RBrace, "'}'");
    }

    Literal literal() {
        const Token& t = cur();
        switch (t.kind) {
        case TokenKind::Number: advance(); return Literal::make_number(t.number);
        case TokenKind::String: advance(); return Literal::make_text(t.text);
        case TokenKind::Coordinate: advance(); return Literal::make_coordinate(t.number, t.second);
        case TokenKind::Identifier: advance(); return Literal::make_ident(t.text);
        case TokenKind::Minus: {
            advance();
            if (at(TokenKind::Number)) return Literal::make_number(-advance().number);
            if (at(TokenKind::Coordinate)) {
                const Token& c = advance();
                return Literal::make_coordinate(-c.number, c.second);
            }
            fail(cur().span, "expected a number after '-', found " + found(), {"number"});
        }
        default:
            fail(t.span, "expected a literal, found " + found(), {"number", "string", "coordinate", "identifier"});
        }
    }

    void map_block(std::vector<MapDecl>& out) {
        advance();
        statements([&] {
            const Token& kw = cur();
            std::optional<MapObjectKind> kind;
            if (kw.kind == TokenKind::Keyword) kind = map_object_kind_from(kw.text);
            if (!kind) fail(kw.span, "expected a map object kind, found " + found(), {"Junction", "Road", "Lane", "..."});
            advance();
            MapDecl decl;
            decl.kind = *kind;
            decl.span = kw.span;
            decl.name = expect(TokenKind::Identifier, "map object name").text;
            if (at_keyword("with")) {
                advance();
                do {
                    decl.constraints.push_back(constraint());
                } while (at(TokenKind::Comma) && (advance(), true));
            }
            expect(TokenKind::Semicolon, "';'");
            out.push_back(std::move(decl));
        });
    }

    ConstraintExpr constraint() {
        ConstraintExpr c;
        c.span = cur().span;
        if (at(TokenKind::String)) {
            c.bare_text = true;
            c.path = {PathSegment{"kind", std::nullopt}};
            c.value = Literal::make_text(advance().text);
            return c;
        }
        c.path.push_back({expect(TokenKind::Identifier, "attribute name").text, std::nullopt});
        while (true) {
            if (at(TokenKind::Dot)) {
                advance();
                c.path.push_back({expect(TokenKind::Identifier, "attribute name").text, std::nullopt});
            } else if (at(TokenKind::LBracket)) {
                advance();
                const Token& n = expect(TokenKind::Number, "index");
                c.path.back().index = static_cast<int>(n.number);
                expect(TokenKind::RBracket, "']'");
            } else {
                break;
            }
        }
        if (at(TokenKind::Eq)) {
            c.op = CompareOp::Eq;
        } else if (at(TokenKind::Ne)) {
            c.op = CompareOp::Ne;
        } else {
            fail(cur().span, "expected '==' or '!=' in constraint, found " + found(), {"'=='", "'!='"});
        }
        const Token& op = advance();
        c.value = literal();
        c.span = cover(c.span, op.span);
        return c;
    }

    void init_block(std::vector<ActorDecl>& out) {
        advance();
        statements([&] {
            const Token& kw = cur();
            ActorDecl decl;
            if (at_keyword("Aut_Car")) {
                decl.kind = ActorKind::AutCar;
            } else if (at_keyword("Car")) {
                decl.kind = ActorKind::Car;
            } else if (at_keyword("Pedestrian")) {
                decl.kind = ActorKind::Pedestrian;
            } else {
                fail(kw.span, "expected an actor kind, found " + found(), {"Aut_Car", "Car", "Pedestrian"});
            }
            advance();
            decl.span = kw.span;
            decl.name = expect(TokenKind::Identifier, "actor name").text;
            if (at_keyword("with")) {
                advance();
                do {
                    actor_attribute(decl);
                } while (at(TokenKind::Comma) && (advance(), true));
            }
            expect(TokenKind::Semicolon, "';'");
            out.push_back(std::move(decl));
        });
    }

    void actor_attribute(ActorDecl& decl) {
        const Token& name = expect(TokenKind::Identifier, "attribute name");
        if (!at(TokenKind::Eq) && !at(TokenKind::Assign))
            fail(cur().span, "expected '==' after attribute, found " + found(), {"'=='"});
        advance();
        Literal value = literal();
        PositionSpec& pos = decl.position;
        auto set_kind = [&](PositionSpec::Kind k) {
            if (pos.kind != PositionSpec::Kind::Unspecified && pos.kind != k)
                error(name.span, "conflicting position specifications for '" + decl.name + "'");
            pos.kind = k;
            pos.span = name.span;
        };
        auto need_number = [&]() {
            if (value.kind != Literal::Kind::Number)
                fail(name.span, "attribute '" + name.text + "' expects a number", {"number"});
            return value.number;
        };
        if (name.text == "absolute_position") {
            if (value.kind == Literal::Kind::Identifier) {
                set_kind(PositionSpec::Kind::AbsoluteLane);
                pos.lane = value.text;
            } else if (value.kind == Literal::Kind::Coordinate) {
                set_kind(PositionSpec::Kind::Coordinate);
                pos.x = value.x;
                pos.y = value.y;
            } else {
                fail(name.span, "absolute_position expects a lane name or an x@y coordinate", {"identifier", "coordinate"});
            }
        } else if (name.text == "relative_to") {
            if (value.kind != Literal::Kind::Identifier)
                fail(name.span, "relative_to expects an actor name", {"identifier"});
            set_kind(PositionSpec::Kind::Relative);
            pos.anchor = value.text;
        } else if (name.text == "angle") {
            pos.angle_deg = need_number();
        } else if (name.text == "front_distance") {
            pos.front_distance = need_number();
        } else {
            decl.attributes.emplace_back(name.text, std::move(value));
        }
    }

    void execute_block(BtAstNode& root) {
        const Token& kw = advance();
        expect(TokenKind::LBrace, "'{'");
        int roots = 0;
        while (!at(TokenKind::RBrace) && !at(TokenKind::End)) {
            try {
                SourceSpan span = cur().span;
                BtAstNode n = node();
                if (++roots == 1) {
                    root = std::move(n);
                } else {
                    error(span, "execute block must contain exactly one root node");
                }
            } catch (const Abort&) {
                synchronize();
            }
        }
        if (roots == 0) error(kw.span, "execute block is empty; expected one root node", {"serial", "parallel", "action call"});
        expect(TokenKind::RBrace, "'}'");
    }

    BtAstNode node() {
        if (at_keyword("serial") || at_keyword("parallel")) {
            BtAstNode n;
            n.kind = at_keyword("serial") ? BtAstNode::Kind::Serial : BtAstNode::Kind::Parallel;
            n.span = advance().span;
            if (at(TokenKind::LParen)) {
                advance();
                expect(TokenKind::RParen, "')'");
            }
            expect(TokenKind::LBrace, "'{'");
            while (!at(TokenKind::RBrace) && !at(TokenKind::End)) {
                try {
                    n.children.push_back(node());
                } catch (const Abort&) {
                    synchronize();
                }
            }
            expect(TokenKind::RBrace, "'}'");
            if (at(TokenKind::Semicolon)) advance();
            return n;
        }
        return action_leaf();
    }

    BtAstNode action_leaf() {
        BtAstNode n;
        n.kind = BtAstNode::Kind::Action;
        if (at(TokenKind::LBracket)) {
            advance();
            n.pre = condition();
            expect(TokenKind::RBracket, "']' after pre-condition");
        }
        if (!at(TokenKind::Identifier))
            fail(cur().span, "expected an action call or composite, found " + found(),
                 {"serial", "parallel", "'['", "identifier"});
        const Token& actor = advance();
        n.actor = actor.text;
        expect(TokenKind::Dot, "'.'");
        const Token& action = expect(TokenKind::Identifier, "action name");
        n.action = action.text;
        n.span = cover(actor.span, action.span);
        expect(TokenKind::LParen, "'('");
        if (!at(TokenKind::RParen)) {
            do {
                n.params.push_back(param());
            } while (at(TokenKind::Comma) && (advance(), true));
        }
        expect(TokenKind::RParen, "')'");
        if (at(TokenKind::LBracket)) {
            advance();
            n.post = condition();
            expect(TokenKind::RBracket, "']' after post-condition");
        }
        expect(TokenKind::Semicolon, "';'");
        return n;
    }

    ParamBinding param() {
        ParamBinding p;
        const Token& name = expect(TokenKind::Identifier, "parameter name");
        p.name = name.text;
        p.span = name.span;
        expect(TokenKind::Assign, "'='");
        const Token& v = cur();
        switch (v.kind) {
        case TokenKind::Number:
            p.value.kind = ParamValue::Kind::Fixed;
            p.value.value = advance().number;
            break;
        case TokenKind::Minus:
            advance();
            p.value.kind = ParamValue::Kind::Fixed;
            p.value.value = -expect(TokenKind::Number, "number").number;
            break;
        case TokenKind::Interval:
            p.value.kind = ParamValue::Kind::Interval;
            p.value.lo = v.number;
            p.value.hi = v.second;
            advance();
            break;
        case TokenKind::String:
            p.value.kind = ParamValue::Kind::Text;
            p.value.text = advance().text;
            break;
        default:
            fail(v.span, "expected a parameter value, found " + found(), {"number", "interval", "string"});
        }
        p.span = cover(name.span, toks_[pos_ - 1].span);
        return p;
    }

    Expr condition() { return or_expr(); }

    Expr or_expr() {
        Expr lhs = and_expr();
        while (at(TokenKind::OrOr)) {
            advance();
            Expr e;
            e.kind = Expr::Kind::Or;
            e.span = lhs.span;
            e.children.push_back(std::move(lhs));
            e.children.push_back(and_expr());
            e.span = cover(e.span, e.children.back().span);
            lhs = std::move(e);
        }
        return lhs;
    }

    Expr and_expr() {
        Expr lhs = unary();
        while (at(TokenKind::AndAnd)) {
            advance();
            Expr e;
            e.kind = Expr::Kind::And;
            e.span = lhs.span;
            e.children.push_back(std::move(lhs));
            e.children.push_back(unary());
            e.span = cover(e.span, e.children.back().span);
            lhs = std::move(e);
        }
        return lhs;
    }

    Expr unary() {
        if (at(TokenKind::Not)) {
            Expr e;
            e.kind = Expr::Kind::Not;
            e.span = advance().span;
            e.children.push_back(unary());
            e.span = cover(e.span, e.children.back().span);
            return e;
        }
        return comparison();
    }

    static std::optional<CompareOp> relop(TokenKind k) {
        switch (k) {
        case TokenKind::Lt: return CompareOp::Lt;
        case TokenKind::Gt: return CompareOp::Gt;
        case TokenKind::Le: return CompareOp::Le;
        case TokenKind::Ge: return CompareOp::Ge;
        case TokenKind::Eq: return CompareOp::Eq;
        case TokenKind::Ne: return CompareOp::Ne;
        default: return std::nullopt;
        }
    }

    Expr comparison() {
        Expr lhs = primary();
        if (auto op = relop(cur().kind)) {
            advance();
            Expr e;
            e.kind = Expr::Kind::Compare;
            e.op = *op;
            e.span = lhs.span;
            e.children.push_back(std::move(lhs));
            e.children.push_back(primary());
            e.span = cover(e.span, e.children.back().span);
            return e;
        }
        return lhs;
    }

    std::vector<std::string> call_args() {
        std::vector<std::string> args;
        expect(TokenKind::LParen, "'('");
        if (!at(TokenKind::RParen)) {
            do {
                args.push_back(expect(TokenKind::Identifier, "actor name").text);
            } while (at(TokenKind::Comma) && (advance(), true));
        }
        expect(TokenKind::RParen, "')'");
        return args;
    }

    Expr primary() {
        const Token& t = cur();
        Expr e;
        e.span = t.span;
        switch (t.kind) {
        case TokenKind::Number:
            e.kind = Expr::Kind::Number;
            e.number = advance().number;
            return e;
        case TokenKind::Minus:
            advance();
            e.kind = Expr::Kind::Number;
            e.number = -expect(TokenKind::Number, "number").number;
            e.span = cover(t.span, toks_[pos_ - 1].span);
            return e;
        case TokenKind::Interval:
            e.kind = Expr::Kind::Interval;
            e.lo = t.number;
            e.hi = t.second;
            advance();
            return e;
        case TokenKind::String:
            e.kind = Expr::Kind::Text;
            e.name = advance().text;
            return e;
        case TokenKind::LParen: {
            advance();
            Expr inner = condition();
            expect(TokenKind::RParen, "')'");
            return inner;
        }
        case TokenKind::Identifier: {
            advance();
            if (at(TokenKind::LParen)) {
                e.kind = Expr::Kind::Call;
                e.name = t.text;
                e.actors = call_args();
            } else if (at(TokenKind::Dot)) {
                advance();
                const Token& member = expect(TokenKind::Identifier, "attribute or method name");
                e.name = member.text;
                if (at(TokenKind::LParen)) {
                    e.kind = Expr::Kind::Call;
                    e.actors = call_args();
                    e.actors.insert(e.actors.begin(), t.text);
                } else {
                    e.kind = Expr::Kind::Attribute;
                    e.actors = {t.text};
                }
            } else {
                fail(cur().span, "expected '(' or '.' after '" + t.text + "', found " + found(), {"'('", "'.'"});
            }
            e.span = cover(t.span, toks_[pos_ - 1].span);
            return e;
        }
        default:
            fail(t.span, "expected an expression, found " + found(),
                 {"number", "interval", "string", "identifier", "'('", "'!'"});
        }
    }

    void oracle_block(std::vector<OracleDecl>& out) {
        advance();
        statements([&] {
            OracleDecl decl;
            decl.span = cur().span;
            if (at_keyword("periodic")) {
                decl.kind = OracleDecl::Kind::Periodic;
            } else if (at_keyword("record")) {
                decl.kind = OracleDecl::Kind::Record;
            } else {
                fail(cur().span, "expected 'periodic' or 'record', found " + found(), {"periodic", "record"});
            }
            advance();
            expect(TokenKind::Colon, "':'");
            decl.expr = condition();
            expect(TokenKind::Semicolon, "';'");
            out.push_back(std::move(decl));
        });
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<Diagnostic>& diags_;
};

} // namespace

ParseError::ParseError(std::vector<Diagnostic> diags)
    : std::runtime_error(summarize(diags)), diags_(std::move(diags)) {}

ParseResult parse_scenario(std::string_view source) {
    ParseResult result;
    LexResult lexed = lex(source);
    result.diagnostics = std::move(lexed.diagnostics);
    Parser parser(std::move(lexed.tokens), result.diagnostics);
    auto ast = parser.scenario();
    bool has_error = false;
    for (const auto& d : result.diagnostics)
        if (d.severity == Severity::Error) has_error = true;
    if (ast && !has_error) result.ast = std::move(ast);
    std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.span.offset < b.span.offset; });
    return result;
}

ScenarioAst parse(std::string_view source) {
    ParseResult r = parse_scenario(source);
    if (!r.ast) throw ParseError(std::move(r.diagnostics));
    return std::move(*r.ast);
}

BtAstNode parse_bt_fragment(std::string_view source) {
    std::vector<Diagnostic> diags;
    LexResult lexed = lex(source);
    diags = std::move(lexed.diagnostics);
    Parser parser(std::move(lexed.tokens), diags);
    auto node = parser.fragment();
    if (!node || !diags.empty()) throw ParseError(std::move(diags));
    return std::move(*node);
}

std::string format_diagnostic(std::string_view file, const Diagnostic& d) {
    std::ostringstream os;
    os << file << ':' << d.span.line << ':' << d.span.column << ": " << to_string(d.severity) << ": " << d.message;
    if (!d.expected.empty()) {
        os << " (expected ";
        for (std::size_t i = 0; i < d.expected.size(); ++i) os << (i ? ", " : "") << d.expected[i];
        os << ')';
    }
    return os.str();
}

} // namespace bts
