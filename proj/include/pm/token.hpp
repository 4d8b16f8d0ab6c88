#pragma once

#include <string>
#include <vector>

#include "pm/diag.hpp"

namespace pm {

enum class TokenKind {
  Identifier,
  IntegerLiteral,
  RealLiteral,
  StringLiteral,
  BooleanLiteral,
  Keyword,
  Operator,     // && || == != < > <= >= + - * / ^ ! -> = sqrt-sign laplacian-sign
  Punctuation,  // ( ) { } [ ] , ; @optimize
  Newline,
  EndOfFile,
};

struct Token {
  TokenKind kind = TokenKind::EndOfFile;
  std::string lexeme;
  Span span;

  bool is(TokenKind k) const { return kind == k; }
  bool is(TokenKind k, const char* text) const {
    return kind == k && lexeme == text;
  }
  bool is_keyword(const char* kw) const { return is(TokenKind::Keyword, kw); }
  bool is_op(const char* op) const { return is(TokenKind::Operator, op); }
  bool is_punct(const char* p) const { return is(TokenKind::Punctuation, p); }
};

bool is_reserved_keyword(const std::string& word);

struct LexResult {
  std::vector<Token> tokens;
  DiagnosticSink diags;
  bool ok() const { return !diags.has_errors(); }
};

// Tokenizes UTF-8 source. "//" comments run to end of line. Every character
// outside the alphabet yields an E1xxx diagnostic.
LexResult tokenize(const std::string& source);

}  // namespace pm
