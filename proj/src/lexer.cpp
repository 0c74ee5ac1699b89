#include "bts/lexer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <optional>

namespace bts {

namespace {

constexpr std::array kKeywords = {
    "scenario", "map",       "init",       "execute",  "oracle",    "serial",
    "parallel", "with",      "periodic",   "record",   "Aut_Car",   "Car",
    "Pedestrian", "Junction", "Road",      "Lane",     "Crosswalk", "Signal",
    "StopSign", "YieldSign", "ClearArea",  "SpeedBump", "ParkingSpace", "Overlap",
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    LexResult run() {
        LexResult out;
        while (true) {
            skip_trivia();
            if (pos_ >= src_.size()) break;
            if (auto tok = next()) {
                out.tokens.push_back(std::move(*tok));
            } else {
                Diagnostic d;
                d.span = span_at(pos_, 1);
                d.message = std::string("illegal character '") + printable(src_[pos_]) + "'";
                out.diagnostics.push_back(std::move(d));
                advance(1);
            }
        }
        Token end;
        end.kind = TokenKind::End;
        end.span = span_at(pos_, 0);
        out.tokens.push_back(end);
        return out;
    }

private:
    static std::string printable(char c) {
        if (std::isprint(static_cast<unsigned char>(c))) return std::string(1, c);
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
        return buf;
    }

    SourceSpan span_at(std::size_t start, std::size_t length) const {
        // Column is computed from the recorded line start.
        SourceSpan s;
        s.line = line_;
        s.column = static_cast<int>(start - line_start_) + 1;
        s.length = static_cast<int>(length);
        s.offset = start;
        return s;
    }

    char peek(std::size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                line_start_ = pos_ + 1;
            }
            ++pos_;
        }
    }

    void skip_trivia() {
        while (pos_ < src_.size()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
                advance(1);
            } else if (c == '/' && peek(1) == '/') {
                while (pos_ < src_.size() && peek() != '\n') advance(1);
            } else if (c == '/' && peek(1) == '*') {
                advance(2);
                while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance(1);
                advance(2);
            } else {
                break;
            }
        }
    }

    // Scans a (possibly signed) decimal number starting at `at` without consuming.
    std::optional<std::pair<double, std::size_t>> scan_number(std::size_t at, bool allow_sign) const {
        std::size_t i = at;
        if (allow_sign && i < src_.size() && (src_[i] == '-' || src_[i] == '+')) ++i;
        std::size_t digits_start = i;
        while (i < src_.size() && is_digit(src_[i])) ++i;
        bool any = i > digits_start;
        if (i < src_.size() && src_[i] == '.' && i + 1 < src_.size() && is_digit(src_[i + 1])) {
            ++i;
            while (i < src_.size() && is_digit(src_[i])) ++i;
            any = true;
        }
        if (!any) return std::nullopt;
        if (i < src_.size() && (src_[i] == 'e' || src_[i] == 'E')) {
            std::size_t j = i + 1;
            if (j < src_.size() && (src_[j] == '-' || src_[j] == '+')) ++j;
            if (j < src_.size() && is_digit(src_[j])) {
                while (j < src_.size() && is_digit(src_[j])) ++j;
                i = j;
            }
        }
        std::string text(src_.substr(at, i - at));
        if (!text.empty() && text[0] == '+') text.erase(0, 1);
        double value = std::strtod(text.c_str(), nullptr);
        return std::make_pair(value, i - at);
    }

    std::size_t skip_ws_from(std::size_t i) const {
        while (i < src_.size() && (src_[i] == ' ' || src_[i] == '\t' || src_[i] == '\r' || src_[i] == '\n')) ++i;
        return i;
    }

    // `[ lo : hi ]` or `[ lo , hi ]` with numeric bounds only.
    std::optional<Token> try_interval() {
        std::size_t i = skip_ws_from(pos_ + 1);
        auto lo = scan_number(i, true);
        if (!lo) return std::nullopt;
        i = skip_ws_from(i + lo->second);
        if (i >= src_.size() || (src_[i] != ':' && src_[i] != ',')) return std::nullopt;
        i = skip_ws_from(i + 1);
        auto hi = scan_number(i, true);
        if (!hi) return std::nullopt;
        i = skip_ws_from(i + hi->second);
        if (i >= src_.size() || src_[i] != ']') return std::nullopt;
        ++i;
        Token t;
        t.kind = TokenKind::Interval;
        t.text = std::string(src_.substr(pos_, i - pos_));
        t.number = lo->first;
        t.second = hi->first;
        t.span = span_at(pos_, i - pos_);
        advance(i - pos_);
        return t;
    }

    Token simple(TokenKind kind, std::size_t len) {
        Token t;
        t.kind = kind;
        t.text = std::string(src_.substr(pos_, len));
        t.span = span_at(pos_, len);
        advance(len);
        return t;
    }

    std::optional<Token> next() {
        char c = peek();
        if (is_ident_start(c)) {
            std::size_t i = pos_;
            while (i < src_.size() && is_ident_char(src_[i])) ++i;
            Token t;
            t.text = std::string(src_.substr(pos_, i - pos_));
            t.kind = is_keyword(t.text) ? TokenKind::Keyword : TokenKind::Identifier;
            t.span = span_at(pos_, i - pos_);
            advance(i - pos_);
            return t;
        }
        if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
            auto num = scan_number(pos_, false);
            std::size_t end = pos_ + num->second;
            if (end < src_.size() && src_[end] == '@') {
                if (auto y = scan_number(end + 1, true)) {
                    Token t;
                    t.kind = TokenKind::Coordinate;
                    t.number = num->first;
                    t.second = y->first;
                    std::size_t len = end + 1 + y->second - pos_;
                    t.text = std::string(src_.substr(pos_, len));
                    t.span = span_at(pos_, len);
                    advance(len);
                    return t;
                }
            }
            Token t;
            t.kind = TokenKind::Number;
            t.number = num->first;
            t.text = std::string(src_.substr(pos_, num->second));
            t.span = span_at(pos_, num->second);
            advance(num->second);
            return t;
        }
        if (c == '"') {
            std::size_t i = pos_ + 1;
            std::string value;
            while (i < src_.size() && src_[i] != '"' && src_[i] != '\n') {
                if (src_[i] == '\\' && i + 1 < src_.size()) {
                    value.push_back(src_[i + 1]);
                    i += 2;
                } else {
                    value.push_back(src_[i++]);
                }
            }
            if (i >= src_.size() || src_[i] != '"') return std::nullopt; // unterminated
            Token t;
            t.kind = TokenKind::String;
            t.text = std::move(value);
            t.span = span_at(pos_, i + 1 - pos_);
            advance(i + 1 - pos_);
            return t;
        }
        switch (c) {
        case '(': return simple(TokenKind::LParen, 1);
        case ')': return simple(TokenKind::RParen, 1);
        case '{': return simple(TokenKind::LBrace, 1);
        case '}': return simple(TokenKind::RBrace, 1);
        case '[':
            if (auto iv = try_interval()) return iv;
            return simple(TokenKind::LBracket, 1);
        case ']': return simple(TokenKind::RBracket, 1);
        case ';': return simple(TokenKind::Semicolon, 1);
        case ',': return simple(TokenKind::Comma, 1);
        case '.': return simple(TokenKind::Dot, 1);
        case ':': return simple(TokenKind::Colon, 1);
        case '-': return simple(TokenKind::Minus, 1);
        case '=': return peek(1) == '=' ? simple(TokenKind::Eq, 2) : simple(TokenKind::Assign, 1);
        case '!': return peek(1) == '=' ? simple(TokenKind::Ne, 2) : simple(TokenKind::Not, 1);
        case '<': return peek(1) == '=' ? simple(TokenKind::Le, 2) : simple(TokenKind::Lt, 1);
        case '>': return peek(1) == '=' ? simple(TokenKind::Ge, 2) : simple(TokenKind::Gt, 1);
        case '|':
            if (peek(1) == '|') return simple(TokenKind::OrOr, 2);
            return std::nullopt;
        case '&':
            if (peek(1) == '&') return simple(TokenKind::AndAnd, 2);
            return std::nullopt;
        default: return std::nullopt;
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::size_t line_start_ = 0;
};

} // namespace

const char* to_string(TokenKind k) {
    switch (k) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Number: return "number";
    case TokenKind::String: return "string";
    case TokenKind::Interval: return "interval";
    case TokenKind::Coordinate: return "coordinate";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::LBrace: return "'{'";
    case TokenKind::RBrace: return "'}'";
    case TokenKind::LBracket: return "'['";
    case TokenKind::RBracket: return "']'";
    case TokenKind::Semicolon: return "';'";
    case TokenKind::Comma: return "','";
    case TokenKind::Dot: return "'.'";
    case TokenKind::Colon: return "':'";
    case TokenKind::Assign: return "'='";
    case TokenKind::Eq: return "'=='";
    case TokenKind::Ne: return "'!='";
    case TokenKind::Lt: return "'<'";
    case TokenKind::Gt: return "'>'";
    case TokenKind::Le: return "'<='";
    case TokenKind::Ge: return "'>='";
    case TokenKind::OrOr: return "'||'";
    case TokenKind::AndAnd: return "'&&'";
    case TokenKind::Not: return "'!'";
    case TokenKind::Minus: return "'-'";
    case TokenKind::End: return "end of input";
    }
    return "?";
}

bool is_keyword(std::string_view word) {
    for (const char* k : kKeywords)
        if (word == k) return true;
    return false;
}

LexResult lex(std::string_view source) { return Lexer(source).run(); }

std::vector<Token> tokenize(std::string_view source) {
    LexResult r = lex(source);
    if (!r.diagnostics.empty()) throw LexError(r.diagnostics.front().message, r.diagnostics.front().span);
    return std::move(r.tokens);
}

} // namespace bts
