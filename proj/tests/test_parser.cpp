#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pm/parser.hpp"
#include "pm/printer.hpp"

using namespace pm;
using namespace pm::ast;

namespace {

ExprPtr expr_ok(const std::string& src) {
  DiagnosticSink diags;
  auto e = parse_expression(src, diags);
  REQUIRE(e);
  REQUIRE(!diags.has_errors());
  return e;
}

// Strips Paren nodes so printed/reparsed trees compare structurally.
const Expr& strip(const Expr& e) {
  return e.kind == ExprKind::Paren ? strip(*e.child(0)) : e;
}

bool same_shape(const Expr& a, const Expr& b) {
  const Expr& x = strip(a);
  const Expr& y = strip(b);
  if (x.kind != y.kind) return false;
  if (x.kind == ExprKind::Binary && x.bin_op != y.bin_op) return false;
  if (x.kind == ExprKind::Unary && x.un_op != y.un_op) return false;
  if (x.name != y.name) return false;
  if (x.children.size() != y.children.size()) return false;
  for (size_t i = 0; i < x.children.size(); ++i)
    if (!same_shape(*x.child(i), *y.child(i))) return false;
  return true;
}

}  // namespace

TEST_CASE("precedence: multiplication over addition") {
  auto e = expr_ok("a + b * c");
  REQUIRE(e->kind == ExprKind::Binary);
  CHECK(e->bin_op == BinOp::Add);
  CHECK(e->child(1)->bin_op == BinOp::Mul);
}

TEST_CASE("unary minus binds looser than power") {
  auto e = expr_ok("-x^2");
  REQUIRE(e->kind == ExprKind::Unary);
  CHECK(e->un_op == UnOp::Neg);
  REQUIRE(e->child(0)->kind == ExprKind::Binary);
  CHECK(e->child(0)->bin_op == BinOp::Pow);
}

TEST_CASE("power is right-associative") {
  auto e = expr_ok("2^3^2");
  REQUIRE(e->bin_op == BinOp::Pow);
  CHECK(e->child(0)->kind == ExprKind::Literal);
  CHECK(e->child(1)->bin_op == BinOp::Pow);
}

TEST_CASE("negative exponent parses as unary in exponent position") {
  auto e = expr_ok("x^-2");
  REQUIRE(e->bin_op == BinOp::Pow);
  CHECK(e->child(1)->kind == ExprKind::Unary);
}

TEST_CASE("postfix binds tighter than power") {
  auto e = expr_ok("p->v[0]^2");
  REQUIRE(e->bin_op == BinOp::Pow);
  CHECK(e->child(0)->kind == ExprKind::ArrayAccess);
  CHECK(e->child(0)->child(0)->kind == ExprKind::ParticleAccess);
}

TEST_CASE("relational, equality and logical layers") {
  auto e = expr_ok("a < b == c && d");
  REQUIRE(e->bin_op == BinOp::And);
  REQUIRE(e->child(0)->bin_op == BinOp::Eq);
  CHECK(e->child(0)->child(0)->bin_op == BinOp::Lt);
}

TEST_CASE("sqrt is a unary operator") {
  auto e = expr_ok("sqrt x + 1");
  REQUIRE(e->bin_op == BinOp::Add);
  CHECK(e->child(0)->kind == ExprKind::Unary);
  CHECK(e->child(0)->un_op == UnOp::Sqrt);
}

TEST_CASE("laplacian application") {
  auto e = expr_ok("laplacian(parts->U) * Du");
  REQUIRE(e->bin_op == BinOp::Mul);
  CHECK(e->child(0)->kind == ExprKind::DiffOpApply);
  CHECK(e->child(0)->child(0)->kind == ExprKind::ParticleAccess);
}

TEST_CASE("print/reparse round trip preserves structure") {
  const char* samples[] = {
      "a + b * c",
      "(a + b) * c",
      "-x^2",
      "x^-2",
      "2^3^2",
      "-(a + b)",
      "a / b / c",
      "a - b - c",
      "a - (b - c)",
      "sqrt(x + 1) - sqrt x",
      "p->v[0] * q->v[1]",
      "laplacian(parts->U) * 2.0e-5",
      "a < b && !(c >= d) || e != f",
      "1 / (sqrt(x + 1) + sqrt x)",
      "p->v + 0.5 * (p->a + p->F / mass) * delta_t^2",
      "0.5{l * t^-1} + x * 2{t^-1}",
  };
  for (const char* s : samples) {
    CAPTURE(s);
    auto e1 = expr_ok(s);
    std::string printed = print_expr(*e1);
    CAPTURE(printed);
    auto e2 = expr_ok(printed);
    CHECK(same_shape(*e1, *e2));
    // printing is a fixed point
    CHECK(print_expr(*e2) == printed);
  }
}

TEST_CASE("full module parses") {
  const char* src = R"(module demo
dimensions { l; t; v = l * t^-1 "velocity" }
param real{t} delta_t = 0.5 range [0.01, 1.0]
param int n = 64

topology topo boundary periodic
particles parts on topo grid(n, n) {
  real U = 1.0
  real V = 0.0
}
neighborlist nlist on parts cutoff 0.1

timeloop t = 0.0 to 10.0 step delta_t {
  deqn on parts using rk4 {
    d_dt(parts->U) = laplacian(parts->U) * 2.0e-5
  }
  apply_bc parts
}
write parts
)";
  auto r = parse_source(src);
  REQUIRE(r.ok());
  CHECK(r.module->name == "demo");
  CHECK(r.module->dimensions.size() == 3);
  CHECK(r.module->params.size() == 2);
  REQUIRE(r.module->statements.size() == 5);
  CHECK(r.module->statements[0]->kind == StmtKind::CreateTopology);
  CHECK(r.module->statements[1]->kind == StmtKind::CreateParticles);
  CHECK(r.module->statements[2]->kind == StmtKind::CreateNeighlist);
  CHECK(r.module->statements[3]->kind == StmtKind::Timeloop);
  CHECK(r.module->statements[4]->kind == StmtKind::IoWrite);
}

TEST_CASE("module round trip through the pretty printer") {
  const char* src = R"(module roundtrip
dimensions { l; t }
param real{l} eps = 0.05

topology topo boundary none
particles parts on topo random(100, 42) {
  real[2]{l} vel
  real m = 1.0
}
foreach p in parts {
  p->m = p->m * 2.0
}
)";
  auto r1 = parse_source(src);
  REQUIRE(r1.ok());
  std::string printed = print_module(*r1.module);
  auto r2 = parse_source(printed);
  CAPTURE(printed);
  REQUIRE(r2.ok());
  CHECK(print_module(*r2.module) == printed);
}

TEST_CASE("dimension annotations on literals do not swallow block braces") {
  const char* src = R"(module m
param real{t} dt = 0.1{t}
timeloop t = 0.0{t} to 1.0{t} step 0.1{t} {
  x = 1.0
}
if x > 1 { }
)";
  auto r = parse_source(src);
  REQUIRE(r.ok());
  REQUIRE(r.module->params.size() == 1);
  REQUIRE(r.module->params[0].default_value);
  REQUIRE(r.module->params[0].default_value->dim_annotation);
  const ast::Stmt& loop = *r.module->statements.at(0);
  REQUIRE(loop.kind == StmtKind::Timeloop);
  CHECK(loop.time_step->dim_annotation);
  CHECK(loop.body.size() == 1);
}

TEST_CASE("foreach over neighbors") {
  const char* src = R"(module m
topology topo boundary periodic
particles parts on topo grid(4, 4)
neighborlist nl on parts cutoff 0.3
foreach p in parts {
  foreach q in neighbors(p, nl) {
    p->U = p->U + 1.0
  }
}
)";
  auto r = parse_source(src);
  REQUIRE(r.ok());
  const Stmt& outer = *r.module->statements.back();
  REQUIRE(outer.kind == StmtKind::Foreach);
  CHECK(!outer.over_neighbors);
  const Stmt& inner = *outer.body[0];
  CHECK(inner.over_neighbors);
  CHECK(inner.neighbor_of == "p");
  CHECK(inner.source_list == "nl");
}

TEST_CASE("optimize pragma attaches to statements and equations") {
  const char* src = R"(module m
topology topo boundary periodic
particles parts on topo grid(4, 4) {
  real U = 1.0
}
@optimize
x = 1.0
timeloop t = 0.0 to 1.0 step 0.1 {
  deqn on parts using euler {
    @optimize
    d_dt(parts->U) = parts->U * 0.5
  }
}
)";
  auto r = parse_source(src);
  REQUIRE(r.module);
  const auto& stmts = r.module->statements;
  bool found_stmt = false, found_eq = false;
  for (const auto& s : stmts) {
    if (s->optimize) found_stmt = true;
    if (s->kind == StmtKind::Timeloop)
      for (const auto& b : s->body)
        if (s->kind == StmtKind::Timeloop && b->kind == StmtKind::DeqnBlock &&
            b->equations.at(0).optimize)
          found_eq = true;
  }
  CHECK(found_stmt);
  CHECK(found_eq);
}

TEST_CASE("inline foreign code is rejected") {
  auto r = parse_source("module m\ninline \"c++\"\n");
  bool found = false;
  for (const auto& d : r.diags.all())
    if (d.code == "E2003") found = true;
  CHECK(found);
}

TEST_CASE("syntax errors recover at line ends") {
  auto r = parse_source("module m\nx = = 1\ny = 2\n");
  CHECK(r.diags.has_errors());
  // the following line still parses
  REQUIRE(r.module);
  bool found_y = false;
  for (const auto& s : r.module->statements)
    if (s->kind == StmtKind::Assign && s->target->name == "y") found_y = true;
  CHECK(found_y);
}

TEST_CASE("context check: differential operator outside deqn") {
  const char* src = R"(module m
topology topo boundary periodic
particles parts on topo grid(4, 4) {
  real U = 1.0
}
foreach p in parts {
  p->U = laplacian(parts->U)
}
)";
  auto r = parse_source(src);
  REQUIRE(r.module);
  auto diags = validate_context(*r.module);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].code == "E2101");
}

TEST_CASE("context check: d_dt outside a timeloop") {
  const char* src = R"(module m
topology topo boundary periodic
particles parts on topo grid(4, 4) {
  real U = 1.0
}
deqn on parts using euler {
  d_dt(parts->U) = parts->U
}
)";
  auto r = parse_source(src);
  REQUIRE(r.module);
  auto diags = validate_context(*r.module);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].code == "E2101");
}

TEST_CASE("context check: multiple timeloops") {
  const char* src = R"(module m
timeloop t = 0.0 to 1.0 step 0.1 {
}
timeloop s = 0.0 to 1.0 step 0.1 {
}
)";
  auto r = parse_source(src);
  REQUIRE(r.module);
  auto diags = validate_context(*r.module);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].code == "E2102");
}
