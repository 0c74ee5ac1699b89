#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bts/ast.hpp"

namespace bts {

enum class TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Interval,   // [lo:hi] or [lo,hi]
    Coordinate, // x@y
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semicolon,
    Comma,
    Dot,
    Colon,
    Assign,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    OrOr,
    AndAnd,
    Not,
    Minus,
    End,
};

const char* to_string(TokenKind k);

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    double number = 0.0; // Number value, Interval lo, Coordinate x
    double second = 0.0; // Interval hi, Coordinate y
    SourceSpan span;
};

bool is_keyword(std::string_view word);

class LexError : public std::runtime_error {
public:
    LexError(const std::string& msg, SourceSpan span)
        : std::runtime_error(msg), span_(span) {}
    const SourceSpan& span() const { return span_; }

private:
    SourceSpan span_;
};

struct LexResult {
    std::vector<Token> tokens; // always terminated by an End token
    std::vector<Diagnostic> diagnostics;
};

// Tokenizes the whole input, reporting every illegal character.
LexResult lex(std::string_view source);

// Strict variant: throws LexError on the first illegal character.
std::vector<Token> tokenize(std::string_view source);

} // namespace bts
