#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "pm/types.hpp"

using namespace pm;
using namespace pm::types;
using LT = LatticeType;

namespace {

const LT B{LT::Boolean};
const LT I{LT::Integer};
const LT R{LT::Real};
const LT S{LT::String};
LT VI() { return LT::vector_of(I); }
LT VR() { return LT::vector_of(R); }
LT MI() { return LT::matrix_of(I); }
LT MR() { return LT::matrix_of(R); }
LT FI(int n = 1) { return LT::field_of(I, n); }
LT FR(int n = 1) { return LT::field_of(R, n); }

bool defined(ast::BinOp op, const LT& a, const LT& b) {
  return binary_result(op, a, b).has_value();
}

LT result(ast::BinOp op, const LT& a, const LT& b) {
  auto r = binary_result(op, a, b);
  REQUIRE(r);
  return *r;
}

std::vector<LT> universe() {
  return {B,    I,    R,    S,     VI(), VR(),  MI(),  MR(),
          FI(), FR(), FI(3), FR(3), LT(LT::Particle), LT(LT::Topology),
          LT(LT::NeighborList), LT(LT::Error)};
}

}  // namespace

TEST_CASE("subtyping: Integer below Real, containers covariant") {
  CHECK(subtype(I, R));
  CHECK(!subtype(R, I));
  CHECK(subtype(I, I));
  CHECK(subtype(VI(), VR()));
  CHECK(!subtype(VR(), VI()));
  CHECK(subtype(FI(2), FR(2)));
  CHECK(!subtype(FI(2), FR(3)));  // arity is invariant
  CHECK(!subtype(I, B));
  CHECK(!subtype(B, R));
  CHECK(!subtype(VI(), MI()));
}

TEST_CASE("least common supertype") {
  CHECK(*lcs(I, R) == R);
  CHECK(*lcs(R, I) == R);
  CHECK(*lcs(VI(), VR()) == VR());
  CHECK(!lcs(I, B));
  CHECK(!lcs(VI(), FI()));
}

TEST_CASE("addition/subtraction table") {
  for (auto op : {ast::BinOp::Add, ast::BinOp::Sub}) {
    CHECK(result(op, I, I) == I);
    CHECK(result(op, I, R) == R);
    CHECK(result(op, R, I) == R);
    CHECK(result(op, R, R) == R);
    // scalar broadcast over vectors and fields
    CHECK(result(op, I, VI()) == VI());
    CHECK(result(op, R, VI()) == VR());
    CHECK(result(op, VI(), R) == VR());
    CHECK(result(op, R, FR(1)) == FR(1));
    CHECK(result(op, I, FR(2)) == FR(2));
    // elementwise
    CHECK(result(op, VI(), VR()) == VR());
    CHECK(result(op, FI(2), FR(2)) == FR(2));
    // fields require matching arity
    CHECK(!defined(op, FR(2), FR(3)));
    // undefined combinations
    CHECK(!defined(op, B, B));
    CHECK(!defined(op, S, S));  // no string concatenation
    CHECK(!defined(op, VI(), FI(1)));
    CHECK(!defined(op, MI(), MI()));
    CHECK(!defined(op, VI(), MI()));
  }
}

TEST_CASE("multiplication table") {
  auto op = ast::BinOp::Mul;
  CHECK(result(op, I, I) == I);
  CHECK(result(op, I, R) == R);
  CHECK(result(op, R, R) == R);
  CHECK(result(op, R, VI()) == VR());
  CHECK(result(op, VI(), I) == VI());
  CHECK(result(op, R, FI(2)) == FR(2));
  CHECK(result(op, FR(1), I) == FR(1));
  // no inner/outer products, no field*field
  CHECK(!defined(op, VR(), VR()));
  CHECK(!defined(op, FR(1), FR(1)));
  CHECK(!defined(op, VR(), FR(1)));
  CHECK(!defined(op, B, I));
  CHECK(!defined(op, S, I));
}

TEST_CASE("division table: scalar division always yields Real") {
  auto op = ast::BinOp::Div;
  CHECK(result(op, I, I) == R);
  CHECK(result(op, I, R) == R);
  CHECK(result(op, R, I) == R);
  CHECK(result(op, VI(), I) == VR());
  CHECK(result(op, VI(), R) == VR());
  CHECK(result(op, R, VI()) == VR());
  CHECK(result(op, FI(2), I) == FR(2));
  CHECK(result(op, I, FI(2)) == FR(2));
  CHECK(!defined(op, VR(), VR()));
  CHECK(!defined(op, FR(1), FR(1)));
  CHECK(!defined(op, B, B));
}

TEST_CASE("power table") {
  auto op = ast::BinOp::Pow;
  CHECK(result(op, I, I) == I);  // stays Integer
  CHECK(result(op, R, I) == R);
  CHECK(result(op, I, R) == R);
  CHECK(result(op, R, R) == R);
  CHECK(result(op, VI(), I) == VI());
  CHECK(result(op, VI(), R) == VR());
  CHECK(result(op, VR(), I) == VR());
  // field exponentiation always goes through Real elements
  CHECK(result(op, FI(1), I) == FR(1));
  CHECK(result(op, FR(2), R) == FR(2));
  // scalar ^ container undefined
  CHECK(!defined(op, I, VI()));
  CHECK(!defined(op, R, FR(1)));
  CHECK(!defined(op, B, I));
}

TEST_CASE("relational operators defined exactly where +/- is") {
  for (const auto& a : universe()) {
    for (const auto& b : universe()) {
      bool arith = defined(ast::BinOp::Add, a, b);
      bool rel = defined(ast::BinOp::Lt, a, b);
      CAPTURE(a.to_string());
      CAPTURE(b.to_string());
      CHECK(arith == rel);
      if (rel) CHECK(result(ast::BinOp::Lt, a, b) == B);
    }
  }
}

TEST_CASE("logical operators require Boolean") {
  CHECK(result(ast::BinOp::And, B, B) == B);
  CHECK(result(ast::BinOp::Or, B, B) == B);
  CHECK(!defined(ast::BinOp::And, B, I));
  CHECK(!defined(ast::BinOp::Or, R, B));
}

TEST_CASE("unary operators") {
  CHECK(*unary_result(ast::UnOp::Not, B) == B);
  CHECK(!unary_result(ast::UnOp::Not, I));
  CHECK(*unary_result(ast::UnOp::Neg, I) == I);
  CHECK(*unary_result(ast::UnOp::Neg, R) == R);
  CHECK(*unary_result(ast::UnOp::Neg, VI()) == VI());
  CHECK(*unary_result(ast::UnOp::Neg, FR(2)) == FR(2));
  CHECK(!unary_result(ast::UnOp::Neg, B));
  CHECK(!unary_result(ast::UnOp::Neg, S));
  CHECK(*unary_result(ast::UnOp::Sqrt, I) == R);
  CHECK(*unary_result(ast::UnOp::Sqrt, R) == R);
  CHECK(!unary_result(ast::UnOp::Sqrt, VR()));
}

TEST_CASE("Error operands never produce a defined result") {
  LT err(LT::Error);
  for (const auto& t : universe()) {
    for (auto op : {ast::BinOp::Add, ast::BinOp::Mul, ast::BinOp::Div,
                    ast::BinOp::Pow, ast::BinOp::Lt, ast::BinOp::And}) {
      CHECK(!defined(op, err, t));
      CHECK(!defined(op, t, err));
    }
  }
}

TEST_CASE("commutativity where both directions are defined") {
  // + and * are symmetric tables up to lcs symmetry
  for (const auto& a : universe()) {
    for (const auto& b : universe()) {
      for (auto op : {ast::BinOp::Add, ast::BinOp::Mul}) {
        auto ab = binary_result(op, a, b);
        auto ba = binary_result(op, b, a);
        CAPTURE(a.to_string());
        CAPTURE(b.to_string());
        CHECK(ab.has_value() == ba.has_value());
        if (ab && ba) CHECK(*ab == *ba);
      }
    }
  }
}

TEST_CASE("totality: every operator/operand combination terminates") {
  auto u = universe();
  // depth-2 composite types over the base universe
  std::vector<LT> deep = u;
  for (const auto& t : u) {
    if (t.is_error() || t.is(LT::Particle) || t.is(LT::Topology) ||
        t.is(LT::NeighborList))
      continue;
    deep.push_back(LT::vector_of(t));
    deep.push_back(LT::matrix_of(t));
    deep.push_back(LT::field_of(t, 2));
  }
  for (const auto& a : deep)
    for (const auto& b : deep)
      for (auto op : {ast::BinOp::Add, ast::BinOp::Sub, ast::BinOp::Mul,
                      ast::BinOp::Div, ast::BinOp::Pow, ast::BinOp::Eq,
                      ast::BinOp::Lt, ast::BinOp::And})
        (void)binary_result(op, a, b);  // must not crash or hang
}
