#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "pm/check.hpp"
#include "pm/lowering.hpp"
#include "pm/parser.hpp"
#include "pm/printer.hpp"

using namespace pm;

namespace {

// Keeps the parsed module alive alongside the analysis results that point
// into it.
struct Compiled {
  ParseResult parse;
  check::CheckedModule cm;
};

Compiled analyze(const std::string& src) {
  Compiled c;
  c.parse = parse_source(src);
  REQUIRE(c.parse.ok());
  c.cm = check::check_module(*c.parse.module);
  return c;
}

Compiled analyze_ok(const std::string& src) {
  Compiled c = analyze(src);
  for (const auto& d : c.cm.diags.all()) CAPTURE(d.code + ": " + d.message);
  REQUIRE(c.cm.ok());
  return c;
}

const char* kGrayScott = R"(module gs
param real delta_t = 0.5
param real Du = 0.00002
param real Dv = 0.00001
param real F = 0.015
param real k = 0.051

topology topo boundary periodic
particles parts on topo grid(64, 64) {
  real U = 1.0
  real V = 0.0
}
neighborlist nlist on parts cutoff 0.0625

timeloop t = 0.0 to 2000.0 step delta_t {
  deqn on parts using rk4 {
    d_dt(parts->U) = laplacian(parts->U) * Du - parts->U * parts->V^2 + F * (1.0 - parts->U)
    d_dt(parts->V) = laplacian(parts->V) * Dv + parts->U * parts->V^2 - (F + k) * parts->V
  }
}
write parts
)";

// Names of all fields of `list` read at list level anywhere in the
// expression, found by an independent brute-force scan.
void scan_reads(const ast::Expr& e, const std::string& list,
                std::set<std::string>& out) {
  if (e.kind == ast::ExprKind::ParticleAccess &&
      e.child(0)->kind == ast::ExprKind::VarAccess && e.child(0)->name == list)
    out.insert(e.name);
  for (const auto& c : e.children) scan_reads(*c, list, out);
}

const ast::Stmt* find_deqn(const std::vector<ast::StmtPtr>& body) {
  for (const auto& s : body) {
    if (s->kind == ast::StmtKind::DeqnBlock) return s.get();
    if (const ast::Stmt* d = find_deqn(s->body)) return d;
    if (const ast::Stmt* d = find_deqn(s->else_body)) return d;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("gray-scott deqn extracts one rhs program") {
  auto c = analyze_ok(kGrayScott);
  DiagnosticSink diags;
  auto rhs = lower::extract_rhs(c.cm, diags);
  CHECK(!diags.has_errors());
  REQUIRE(rhs.size() == 1);
  const auto& r = rhs[0];
  CHECK(r.list == "parts");
  CHECK(r.integrator == "rk4");
  CHECK(r.loop_var == "p");

  REQUIRE(r.slots.size() == 2);
  CHECK(r.slots[0].field == "U");
  CHECK(r.slots[0].intermediate == "dU");
  CHECK(r.slots[1].field == "V");
  CHECK(r.slots[1].intermediate == "dV");

  CHECK(r.reads == std::vector<std::string>{"U", "V"});
  CHECK(r.writes == std::vector<std::string>{"U", "V"});
  REQUIRE(r.derivatives.size() == 2);
  CHECK(r.derivatives[0].field == "U");
  CHECK(r.derivatives[1].field == "V");
}

TEST_CASE("equation bodies are rewritten to per-particle form") {
  auto c = analyze_ok(kGrayScott);
  DiagnosticSink diags;
  auto rhs = lower::extract_rhs(c.cm, diags);
  REQUIRE(rhs.size() == 1);

  // Hand-lowered first equation: laplacian(parts->U) -> dU, parts->X -> p->X.
  DiagnosticSink d2;
  auto expected = parse_expression(
      "dU * Du - p->U * p->V^2 + F * (1.0 - p->U)", d2);
  REQUIRE(expected);
  CHECK(ast::structurally_equal(*rhs[0].derivatives[0].rhs, *expected));

  auto expected_v = parse_expression(
      "dV * Dv + p->U * p->V^2 - (F + k) * p->V", d2);
  CHECK(ast::structurally_equal(*rhs[0].derivatives[1].rhs, *expected_v));
}

TEST_CASE("read set matches a brute-force scan of the equations") {
  auto c = analyze_ok(kGrayScott);
  DiagnosticSink diags;
  auto rhs = lower::extract_rhs(c.cm, diags);
  REQUIRE(rhs.size() == 1);

  const ast::Stmt* deqn = find_deqn(c.parse.module->statements);
  REQUIRE(deqn);
  std::set<std::string> oracle;
  for (const auto& eq : deqn->equations) scan_reads(*eq.rhs, "parts", oracle);
  std::set<std::string> got(rhs[0].reads.begin(), rhs[0].reads.end());
  CHECK(got == oracle);
}

TEST_CASE("intermediate names avoid collisions with visible names") {
  auto c = analyze_ok(R"(module m
dimensions { t }
param real delta_t = 0.1
param real dU = 3.0
topology topo boundary periodic
particles parts on topo grid(8, 8) {
  real U = 1.0
}
neighborlist nl on parts cutoff 0.2
timeloop t = 0.0 to 1.0 step delta_t {
  deqn on parts using euler {
    d_dt(parts->U) = laplacian(parts->U) * dU
  }
}
)");
  DiagnosticSink diags;
  auto rhs = lower::extract_rhs(c.cm, diags);
  REQUIRE(rhs.size() == 1);
  REQUIRE(rhs[0].slots.size() == 1);
  CHECK(rhs[0].slots[0].intermediate == "dU_1");
}

TEST_CASE("loop variable avoids names used in the equations") {
  auto c = analyze_ok(R"(module m
param real delta_t = 0.1
param real p = 3.0
topology topo boundary periodic
particles parts on topo grid(8, 8) {
  real U = 1.0
}
timeloop t = 0.0 to 1.0 step delta_t {
  deqn on parts using euler {
    d_dt(parts->U) = parts->U * p
  }
}
)");
  DiagnosticSink diags;
  auto rhs = lower::extract_rhs(c.cm, diags);
  REQUIRE(rhs.size() == 1);
  CHECK(rhs[0].loop_var == "p_1");
  // The free variable p is untouched; list accesses go through p_1.
  CHECK(print_expr(*rhs[0].derivatives[0].rhs) == "p_1->U * p");
}

TEST_CASE("two equations for the same field are rejected") {
  auto c = analyze_ok(R"(module m
param real delta_t = 0.1
topology topo boundary periodic
particles parts on topo grid(8, 8) {
  real U = 1.0
}
timeloop t = 0.0 to 1.0 step delta_t {
  deqn on parts using euler {
    d_dt(parts->U) = parts->U
    d_dt(parts->U) = parts->U * 2.0
  }
}
)");
  DiagnosticSink diags;
  auto rhs = lower::extract_rhs(c.cm, diags);
  REQUIRE(diags.error_count() == 1);
  CHECK(diags.all()[0].code == "E5001");
  REQUIRE(rhs.size() == 1);
  CHECK(rhs[0].writes == std::vector<std::string>{"U"});
}

TEST_CASE("plan orders setup, discretize, timeloop, io") {
  auto c = analyze_ok(kGrayScott);
  auto plan = lower::build_plan(c.cm);
  REQUIRE(plan.ok);
  using K = lower::Step::Kind;
  REQUIRE(plan.steps.size() == 7);
  CHECK(plan.steps[0].kind == K::CreateTopology);
  CHECK(plan.steps[1].kind == K::CreateParticles);
  CHECK(plan.steps[2].kind == K::CreateNeighlist);
  CHECK(plan.steps[3].kind == K::Discretize);
  CHECK(plan.steps[3].aux == "U");
  CHECK(plan.steps[4].kind == K::Discretize);
  CHECK(plan.steps[4].aux == "V");
  CHECK(plan.steps[5].kind == K::Timeloop);
  CHECK(plan.steps[6].kind == K::IoWrite);
  REQUIRE(plan.steps[5].body.size() == 1);
  CHECK(plan.steps[5].body[0].kind == K::RhsIntegrate);
  CHECK(plan.steps[5].body[0].rhs_index == 0);
}

TEST_CASE("position writes get boundary and neighbor fixups") {
  auto c = analyze_ok(R"(module m
param real delta_t = 0.001
topology topo boundary periodic
particles parts on topo grid(8, 8) {
  real[2] v
}
neighborlist nl on parts cutoff 0.3
timeloop t = 0.0 to 1.0 step delta_t {
  foreach p in parts {
    p->pos[0] = p->pos[0] + p->v[0] * delta_t
    p->pos[1] = p->pos[1] + p->v[1] * delta_t
  }
}
)");
  auto plan = lower::build_plan(c.cm);
  REQUIRE(plan.ok);
  using K = lower::Step::Kind;
  const auto& loop = plan.steps.back().kind == K::Timeloop
                         ? plan.steps.back()
                         : plan.steps[plan.steps.size() - 1];
  REQUIRE(loop.kind == K::Timeloop);
  REQUIRE(loop.body.size() == 3);
  CHECK(loop.body[0].kind == K::Foreach);
  CHECK(loop.body[1].kind == K::ApplyBc);
  CHECK(loop.body[1].name == "parts");
  CHECK(loop.body[1].synthesized);
  CHECK(loop.body[2].kind == K::RemapNeighbors);
  CHECK(loop.body[2].name == "nl");
  CHECK(loop.body[2].synthesized);
}

TEST_CASE("foreach that does not move particles gets no fixups") {
  auto c = analyze_ok(R"(module m
topology topo boundary periodic
particles parts on topo grid(8, 8) {
  real U = 1.0
}
foreach p in parts {
  p->U = p->U * 2.0
}
)");
  auto plan = lower::build_plan(c.cm);
  REQUIRE(plan.ok);
  for (const auto& s : plan.steps) CHECK(!s.synthesized);
}

TEST_CASE("timeloop without particles is a lowering error") {
  auto c = analyze_ok(R"(module m
param real delta_t = 0.1
real x = 0.0
timeloop t = 0.0 to 1.0 step delta_t {
  x = 1.0
}
)");
  auto plan = lower::build_plan(c.cm);
  CHECK(!plan.ok);
  REQUIRE(plan.diags.error_count() == 1);
  CHECK(plan.diags.all()[0].code == "E5002");
}

TEST_CASE("differential operators without a neighbor list are rejected") {
  auto c = analyze_ok(R"(module m
param real delta_t = 0.1
topology topo boundary periodic
particles parts on topo grid(8, 8) {
  real U = 1.0
}
timeloop t = 0.0 to 1.0 step delta_t {
  deqn on parts using euler {
    d_dt(parts->U) = laplacian(parts->U)
  }
}
)");
  auto plan = lower::build_plan(c.cm);
  CHECK(!plan.ok);
  bool found = false;
  for (const auto& d : plan.diags.all())
    if (d.code == "E5003") found = true;
  CHECK(found);
}

TEST_CASE("lowering refuses modules with check errors") {
  auto c = analyze(R"(module m
x = unknown_name
)");
  REQUIRE(!c.cm.ok());
  auto plan = lower::build_plan(c.cm);
  CHECK(!plan.ok);
  REQUIRE(plan.diags.error_count() == 1);
  CHECK(plan.diags.all()[0].code == "E5000");
}

TEST_CASE("plan dump is stable") {
  auto c = analyze_ok(kGrayScott);
  auto plan = lower::build_plan(c.cm);
  REQUIRE(plan.ok);
  std::string expected =
      "plan gs\n"
      "  create-topology topo boundary=periodic\n"
      "  create-particles parts on=topo init=grid(64, 64) props=[U, V]\n"
      "  create-neighlist nlist on=parts cutoff=0.0625\n"
      "  discretize laplacian parts.U\n"
      "  discretize laplacian parts.V\n"
      "  timeloop t from 0.0 to 2000.0 step delta_t\n"
      "    rhs-integrate rk4 parts reads=[U, V] writes=[U, V] "
      "slots=[laplacian(U)->dU, laplacian(V)->dV]\n"
      "      d(U)/dt = dU * Du - p->U * p->V^2 + F * (1.0 - p->U)\n"
      "      d(V)/dt = dV * Dv + p->U * p->V^2 - (F + k) * p->V\n"
      "  io-write parts\n";
  CHECK(lower::print_plan(plan) == expected);
}
