#pragma once

#include <memory>

#include "pm/ast.hpp"
#include "pm/token.hpp"

namespace pm {

struct ParseResult {
  std::unique_ptr<ast::SourceModule> module;  // may be partial on errors
  DiagnosticSink diags;
  bool ok() const { return module && !diags.has_errors(); }
};

ParseResult parse_module(const std::vector<Token>& tokens);

// Convenience: tokenize + parse. Lexical diagnostics are merged in.
ParseResult parse_source(const std::string& source);

// Parses a standalone expression (used by fpopt and tests).
ast::ExprPtr parse_expression(const std::string& source, DiagnosticSink& diags);

}  // namespace pm
