#pragma once

#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "bts/ast.hpp"

namespace bts {

struct ParseResult {
    std::optional<ScenarioAst> ast; // present only when there are no errors
    std::vector<Diagnostic> diagnostics;
};

class ParseError : public std::runtime_error {
public:
    explicit ParseError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

// Collects lexical and syntactic diagnostics, recovering at statement level.
ParseResult parse_scenario(std::string_view source);

// Throws ParseError with every collected diagnostic on failure.
ScenarioAst parse(std::string_view source);

// Parses a standalone behavior-tree fragment such as `serial(){ a.followLane(); }`.
BtAstNode parse_bt_fragment(std::string_view source);

// `file:line:col: severity: message`
std::string format_diagnostic(std::string_view file, const Diagnostic& d);

} // namespace bts
