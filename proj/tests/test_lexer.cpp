#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pm/token.hpp"

using namespace pm;

namespace {

std::vector<Token> lex_ok(const std::string& src) {
  auto r = tokenize(src);
  REQUIRE(r.ok());
  return r.tokens;
}

}  // namespace

TEST_CASE("identifiers, keywords and literals") {
  auto t = lex_ok("module gray_scott\nreal x = 1.5");
  REQUIRE(t.size() >= 7);
  CHECK(t[0].is_keyword("module"));
  CHECK(t[1].is(TokenKind::Identifier, "gray_scott"));
  CHECK(t[2].is(TokenKind::Newline));
  CHECK(t[3].is_keyword("real"));
  CHECK(t[4].is(TokenKind::Identifier, "x"));
  CHECK(t[5].is_op("="));
  CHECK(t[6].is(TokenKind::RealLiteral, "1.5"));
}

TEST_CASE("number spellings") {
  auto t = lex_ok("42 6.62E-34 1e10 0.5 3E+2");
  CHECK(t[0].is(TokenKind::IntegerLiteral, "42"));
  CHECK(t[1].is(TokenKind::RealLiteral, "6.62E-34"));
  CHECK(t[2].is(TokenKind::RealLiteral, "1e10"));
  CHECK(t[3].is(TokenKind::RealLiteral, "0.5"));
  CHECK(t[4].is(TokenKind::RealLiteral, "3E+2"));
}

TEST_CASE("boolean literals are not identifiers") {
  auto t = lex_ok("true false truer");
  CHECK(t[0].is(TokenKind::BooleanLiteral, "true"));
  CHECK(t[1].is(TokenKind::BooleanLiteral, "false"));
  CHECK(t[2].is(TokenKind::Identifier, "truer"));
}

TEST_CASE("maximal munch on operators") {
  auto t = lex_ok("a->b <= c == d && e != f");
  CHECK(t[1].is_op("->"));
  CHECK(t[3].is_op("<="));
  CHECK(t[5].is_op("=="));
  CHECK(t[7].is_op("&&"));
  CHECK(t[9].is_op("!="));
  auto u = lex_ok("a = = b < = c");
  CHECK(u[1].is_op("="));
  CHECK(u[2].is_op("="));
  CHECK(u[4].is_op("<"));
  CHECK(u[5].is_op("="));
}

TEST_CASE("unicode aliases") {
  auto t = lex_ok("\xE2\x88\x82(c)");  // partial derivative sign
  CHECK(t[0].is_keyword("d_dt"));
  auto u = lex_ok("\xE2\x88\x9A x");  // radical sign
  CHECK(u[0].is_op("sqrt"));
  auto v = lex_ok("\xE2\x88\x87\xC2\xB2(u)");  // nabla squared
  CHECK(v[0].is_op("laplacian"));
  // ASCII spellings coincide
  auto w = lex_ok("sqrt laplacian d_dt");
  CHECK(w[0].is_op("sqrt"));
  CHECK(w[1].is_op("laplacian"));
  CHECK(w[2].is_keyword("d_dt"));
}

TEST_CASE("optimize pragma is a single token") {
  auto t = lex_ok("@optimize\nx = 1");
  CHECK(t[0].is_punct("@optimize"));
}

TEST_CASE("stray at-sign is a lexical error with precise location") {
  auto r = tokenize("a @ b");
  REQUIRE(r.diags.error_count() == 1);
  const auto& d = r.diags.all()[0];
  CHECK(d.code == "E1001");
  CHECK(d.span.line == 1);
  CHECK(d.span.column == 3);
}

TEST_CASE("unknown unicode character reports one error, not per byte") {
  auto r = tokenize("x \xC3\xA9 y");  // e-acute
  REQUIRE(r.diags.error_count() == 1);
  CHECK(r.diags.all()[0].code == "E1001");
  // both surrounding identifiers still produced
  int ids = 0;
  for (const auto& t : r.tokens)
    if (t.is(TokenKind::Identifier)) ++ids;
  CHECK(ids == 2);
}

TEST_CASE("unterminated string literal") {
  auto r = tokenize("write \"out.csv");
  REQUIRE(r.diags.error_count() == 1);
  CHECK(r.diags.all()[0].code == "E1003");
}

TEST_CASE("comments run to end of line") {
  auto t = lex_ok("x = 1 // trailing comment with @ and \xE2\x88\x82\ny");
  bool found_y = false;
  for (const auto& tok : t)
    if (tok.is(TokenKind::Identifier, "y")) found_y = true;
  CHECK(found_y);
  CHECK(t[3].is(TokenKind::Newline));  // newline after comment survives
}

TEST_CASE("spans are 1-based and track lines") {
  auto t = lex_ok("ab\n  cd");
  CHECK(t[0].span.line == 1);
  CHECK(t[0].span.column == 1);
  CHECK(t[0].span.length == 2);
  CHECK(t[2].span.line == 2);
  CHECK(t[2].span.column == 3);
}

TEST_CASE("every stream ends with EndOfFile") {
  auto t = lex_ok("");
  REQUIRE(!t.empty());
  CHECK(t.back().is(TokenKind::EndOfFile));
}
