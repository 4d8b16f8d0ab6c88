#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "pm/fpopt/optimize.hpp"
#include "pm/parser.hpp"
#include "pm/printer.hpp"

using namespace pm;
using namespace pm::fpopt;

namespace {

FExprPtr fx(const std::string& src, VarTable& vt) { return parse_fexpr(src, vt); }

FExprPtr fx(const std::string& src) {
  VarTable vt;
  return parse_fexpr(src, vt);
}

SamplePlan plan_for(const FExprPtr& e,
                    std::optional<std::pair<double, double>> range,
                    uint64_t seed = 42, int count = 256) {
  SamplePlan plan;
  plan.count = count;
  plan.seed = seed;
  std::vector<std::string> names;
  free_vars(*e, names);
  for (const auto& n : names) plan.vars.push_back({n, nullptr, range});
  return plan;
}

}  // namespace

// ---------------------------------------------------------------------------
// Abstraction to and from the DSL AST.

TEST_CASE("particle accesses abstract to free variables") {
  DiagnosticSink diags;
  ast::ExprPtr e =
      parse_expression("p->pos + p->a * delta_t^2 + p->v * delta_t", diags);
  REQUIRE(e);
  VarTable vt;
  FExprPtr f = from_ast(*e, vt);
  CHECK(to_string(*f) == "p_pos + p_a * delta_t^2 + p_v * delta_t");
  std::vector<std::string> names;
  free_vars(*f, names);
  CHECK(names == std::vector<std::string>{"p_pos", "p_a", "delta_t", "p_v"});
}

TEST_CASE("laplacian and component accesses abstract to variables") {
  DiagnosticSink diags;
  ast::ExprPtr e = parse_expression("laplacian(parts->U) * p->v[0]", diags);
  REQUIRE(e);
  VarTable vt;
  FExprPtr f = from_ast(*e, vt);
  CHECK(to_string(*f) == "lap_parts_U * p_v_0");
}

TEST_CASE("repeated subexpressions share one variable") {
  DiagnosticSink diags;
  ast::ExprPtr e = parse_expression("p->U * p->U + p->U", diags);
  REQUIRE(e);
  VarTable vt;
  from_ast(*e, vt);
  CHECK(vt.vars.size() == 1);
}

TEST_CASE("boolean content is Unsupported") {
  DiagnosticSink diags;
  VarTable vt;
  ast::ExprPtr lt = parse_expression("x < y", diags);
  REQUIRE(lt);
  CHECK_THROWS_WITH_AS(from_ast(*lt, vt), doctest::Contains("Unsupported"),
                       FpoptError);
  ast::ExprPtr rnd = parse_expression("random * 2.0", diags);
  REQUIRE(rnd);
  CHECK_THROWS_AS(from_ast(*rnd, vt), FpoptError);
}

TEST_CASE("to_ast substitutes the variable sources back") {
  DiagnosticSink diags;
  ast::ExprPtr e = parse_expression("p->U * p->V^2 - laplacian(l->U)", diags);
  REQUIRE(e);
  VarTable vt;
  FExprPtr f = from_ast(*e, vt);
  ast::ExprPtr back = to_ast(*f, vt);
  // The printed form re-parses to the same abstract structure (explicit
  // parentheses may differ).
  DiagnosticSink diags2;
  ast::ExprPtr reparsed = parse_expression(print_expr(*back), diags2);
  REQUIRE(reparsed);
  VarTable vt2;
  CHECK(to_string(*from_ast(*reparsed, vt2)) == to_string(*f));
}

// ---------------------------------------------------------------------------
// Simplifier.

TEST_CASE("simplifier folds and cancels") {
  CHECK(to_string(*simplify(fx("(x + 1) - x"))) == "1");
  CHECK(to_string(*simplify(fx("x - x"))) == "0");
  CHECK(to_string(*simplify(fx("sqrt(x) * sqrt(x)"))) == "x");
  CHECK(to_string(*simplify(fx("x / x"))) == "1");
  CHECK(to_string(*simplify(fx("x * 0"))) == "0");
  CHECK(to_string(*simplify(fx("x * 1"))) == "x");
  CHECK(to_string(*simplify(fx("x + 0"))) == "x");
  CHECK(to_string(*simplify(fx("x^1"))) == "x");
  CHECK(to_string(*simplify(fx("2 + 3"))) == "5");
  CHECK(to_string(*simplify(fx("2 * 3 * x"))) == "6 * x");
  CHECK(to_string(*simplify(fx("x + x"))) == "2 * x");
  // Built directly: in DSL source, ^ binds tighter than sqrt.
  FExprPtr sq = fnode(FExpr::Pow, fnode(FExpr::Sqrt, fvar("x")), fconst(2.0));
  CHECK(to_string(*simplify(sq)) == "x");
}

TEST_CASE("simplifier preserves association order of surviving terms") {
  // Re-association is the search's job; the simplifier must not canonize
  // (a + b) + c into a different evaluation order.
  FExprPtr e = fx("a + (b + c)");
  CHECK(to_string(*simplify(e)) == "a + (b + c)");
  FExprPtr m = fx("a * (b * c)");
  CHECK(to_string(*simplify(m)) == "a * (b * c)");
  // Plain squares are likewise left alone.
  CHECK(to_string(*simplify(fx("x * x"))) == "x * x");
}

TEST_CASE("inexact constant folds are refused") {
  // 1e16 + 1 is not representable; folding would change the value.
  FExprPtr e = fx("1e16 + 1");
  CHECK(to_string(*simplify(e)) == "1e+16 + 1");
}

// ---------------------------------------------------------------------------
// Error estimation.

TEST_CASE("bits of error metric") {
  CHECK(bits_of_error(1.0, 1.0) == 0.0);
  CHECK(bits_of_error(1.0, std::nextafter(1.0, 2.0)) == doctest::Approx(1.0));
  double inf = std::numeric_limits<double>::infinity();
  CHECK(bits_of_error(inf, inf) == 0.0);
  CHECK(bits_of_error(1.0, std::numeric_limits<double>::quiet_NaN()) == 64.0);
  CHECK(bits_of_error(-0.0, 0.0) == 0.0);
  CHECK(bits_of_error(1.0, -1.0) <= 64.0);
}

TEST_CASE("identity expression has zero error") {
  FExprPtr e = fx("x");
  auto est = estimate_error(*e, plan_for(e, std::nullopt));
  CHECK(est.samples == 256);
  CHECK(est.mean == 0.0);
}

TEST_CASE("sampling is deterministic and respects ranges") {
  FExprPtr e = fx("x + y");
  auto plan = plan_for(e, std::make_pair(2.0, 5.0));
  SampleSet a = draw_samples(*e, plan);
  SampleSet b = draw_samples(*e, plan);
  REQUIRE(a.points.size() == 256);
  CHECK(a.points == b.points);
  for (const auto& p : a.points)
    for (double v : p) {
      CHECK(v >= 2.0);
      CHECK(v <= 5.0);
    }
  plan.seed = 43;
  SampleSet c = draw_samples(*e, plan);
  CHECK(a.points != c.points);
}

TEST_CASE("unsamplable domain raises NoValidSamples") {
  // Negative radicand everywhere: the oracle is undefined at every point.
  FExprPtr e = fx("sqrt(0 - (1 + x * x))");
  CHECK_THROWS_WITH_AS(estimate_error(*e, plan_for(e, std::nullopt)),
                       doctest::Contains("NoValidSamples"), FpoptError);
}

TEST_CASE("additive cancellation loses bits; the folded form is exact") {
  // Above 2^53 the +1 rounds away entirely, so every sample in
  // [1e16, 1e17] shows the cancellation.
  FExprPtr e = fx("(x + 1) - x");
  auto plan = plan_for(e, std::make_pair(1e16, 1e17));
  SampleSet s = draw_samples(*e, plan);
  auto before = estimate_on(*e, s);
  CHECK(before.mean >= 10.0);
  FExprPtr folded = simplify(e);
  CHECK(to_string(*folded) == "1");
  auto after = estimate_on(*folded, s);
  CHECK(after.mean == 0.0);
}

// ---------------------------------------------------------------------------
// Rewriting and search.

TEST_CASE("conjugate rule closure reaches the stable quotient form") {
  FExprPtr e = fx("sqrt(x + 1) - sqrt(x)");
  auto apps = rewrite_step(e);
  bool found = false;
  VarTable vt;
  FExprPtr target = fx("1 / (sqrt(x + 1) + sqrt(x))", vt);
  for (const auto& a : apps)
    if (fequal(*a.result, *target)) {
      found = true;
      CHECK(a.rule == std::string("conjugate"));
    }
  CHECK(found);
}

TEST_CASE("search wins on the sqrt cancellation example") {
  VarTable vt;
  FExprPtr e = fx("sqrt(x + 1) - sqrt(x)", vt);
  auto plan = plan_for(e, std::make_pair(1e12, 1e16));
  SampleSet s = draw_samples(*e, plan);
  auto input = estimate_on(*e, s);
  CHECK(input.mean >= 20.0);
  auto cands = search_rewrites(e, s);
  REQUIRE(!cands.empty());
  Analysis a = select_and_annotate("t#1", e, input, std::move(cands),
                                   std::move(vt));
  CHECK(a.improved);
  CHECK(a.output.mean <= 1.0);
  CHECK(to_string(*a.winner).find("/") != std::string::npos);
  CHECK(to_string(*a.winner).find("sqrt") != std::string::npos);
}

TEST_CASE("already optimal expression keeps the original") {
  VarTable vt;
  FExprPtr e = fx("x + y", vt);
  auto plan = plan_for(e, std::nullopt);
  SampleSet s = draw_samples(*e, plan);
  auto input = estimate_on(*e, s);
  CHECK(input.mean == 0.0);  // one correctly-rounded operation
  auto cands = search_rewrites(e, s);
  Analysis a =
      select_and_annotate("t#1", e, input, std::move(cands), std::move(vt));
  CHECK(!a.improved);
  CHECK(to_string(*a.winner) == "x + y");
}

TEST_CASE("candidates are mathematically equivalent to the original") {
  // Soundness: on the shared in-domain sample set, every candidate's
  // oracle value rounds to the same double as the original's.
  for (const char* src :
       {"sqrt(x + 1) - sqrt(x)", "x * (y + z)", "(x + y)^2 - x * x",
        "x / y + y / x"}) {
    FExprPtr e = fx(src);
    auto plan = plan_for(e, std::make_pair(0.5, 1000.0), 11, 250);
    SampleSet s = draw_samples(*e, plan);
    auto cands = search_rewrites(e, s);
    for (const auto& c : cands) {
      size_t checked = 0;
      for (size_t i = 0; i < s.points.size(); ++i) {
        double a = eval_oracle(*e, s, i);
        double b = eval_oracle(*c.expr, s, i);
        if (std::isnan(b)) continue;  // outside the candidate's validity domain
        CHECK(a == b);
        ++checked;
      }
      CHECK(checked > 0);
    }
  }
}

TEST_CASE("tie on mean bits breaks to fewer operations") {
  VarTable vt;
  FExprPtr e = fx("x", vt);
  auto plan = plan_for(e, std::nullopt);
  SampleSet s = draw_samples(*e, plan);
  auto input = estimate_on(*e, s);
  std::vector<RewriteCandidate> cands;
  cands.push_back({fx("x * 1"), {"synthetic"}, estimate_on(*fx("x * 1"), s)});
  cands.push_back({fx("x"), {"synthetic"}, estimate_on(*fx("x"), s)});
  Analysis a =
      select_and_annotate("t#1", e, input, std::move(cands), std::move(vt));
  CHECK(to_string(*a.winner) == "x");
}

// ---------------------------------------------------------------------------
// Range sensitivity (the restricted-vs-unrestricted contrast).

TEST_CASE("range annotations steer the winner toward in-range accuracy") {
  const char* src = "24 * eps * (2 * sigma^12 / rs^7 - sigma^6 / rs^4)";
  double inf = std::numeric_limits<double>::infinity();
  auto optimize = [&](bool ranged, SampleSet* keep) {
    VarTable vt;
    FExprPtr e = fx(src, vt);
    SamplePlan plan;
    plan.count = 256;
    plan.seed = 42;
    std::vector<std::string> names;
    free_vars(*e, names);
    for (const auto& n : names) {
      std::optional<std::pair<double, double>> r;
      if (ranged) {
        if (n == "eps")
          r = {1e-14, 1e-13};
        else if (n == "sigma")
          r = {1e-2, 1e-1};
        else
          r = {0.0, inf};  // r_s > 0
      }
      plan.vars.push_back({n, nullptr, r});
    }
    SampleSet s = draw_samples(*e, plan);
    if (keep) *keep = s;
    auto input = estimate_on(*e, s);
    auto cands = search_rewrites(e, s);
    return select_and_annotate("lj", e, input, std::move(cands), std::move(vt));
  };

  SampleSet in_range;
  Analysis ranged = optimize(true, &in_range);
  Analysis unrestricted = optimize(false, nullptr);
  double bits_ranged = estimate_on(*ranged.winner, in_range).mean;
  double bits_unrestricted = estimate_on(*unrestricted.winner, in_range).mean;
  CHECK(bits_ranged <= bits_unrestricted);
  // Non-regression on the selection set.
  CHECK(ranged.output.mean <= ranged.input.mean);
  CHECK(unrestricted.output.mean <= unrestricted.input.mean);
}

// ---------------------------------------------------------------------------
// Marks, analysis driving, application.

namespace {

const char* kMarkedModule = R"(module demo
param real delta_t = 0.5 range [0.01, 2.0]
param real Du = 0.00002
param real F = 0.015
param real k = 0.051

topology topo boundary periodic

particles parts on topo grid(8, 8) {
  real U = 1.0
  real V = 0.0
}

neighborlist nlist on parts cutoff 0.5

timeloop t = 0.0 to 10.0 step delta_t {
  deqn on parts using euler {
    @optimize
    d_dt(parts->U) = laplacian(parts->U) * Du - parts->U * parts->V^2 + F * (1.0 - parts->U)
    d_dt(parts->V) = laplacian(parts->V) * Du + parts->U * parts->V^2 - (F + k) * parts->V
  }
}
)";

}  // namespace

TEST_CASE("collect_marked finds equations in source order with ranges") {
  ParseResult pr = parse_source(kMarkedModule);
  REQUIRE(pr.ok());
  auto marks = collect_marked(*pr.module);
  REQUIRE(marks.size() == 1);
  CHECK(marks[0].id == "demo#1");
  CHECK(to_string(*marks[0].fexpr) ==
        "lap_parts_U * Du - parts_U * parts_V^2 + F * (1 - parts_U)");
  // Parameters without range annotations sample the full double range.
  const VarBinding* du = marks[0].vars.find("Du");
  REQUIRE(du);
  CHECK(!du->range);
}

TEST_CASE("parameter ranges flow into the variable table") {
  ParseResult pr = parse_source(
      "module m\n"
      "param real a = 1.0 range [2.0, 3.0]\n"
      "real x = 0.0\n"
      "@optimize\n"
      "x = a * a - a\n");
  REQUIRE(pr.ok());
  auto marks = collect_marked(*pr.module);
  REQUIRE(marks.size() == 1);
  const VarBinding* a = marks[0].vars.find("a");
  REQUIRE(a);
  REQUIRE(a->range);
  CHECK(a->range->first == 2.0);
  CHECK(a->range->second == 3.0);
}

TEST_CASE("module without marks yields an empty list") {
  ParseResult pr = parse_source("module m\nreal x = 1.0\n");
  REQUIRE(pr.ok());
  CHECK(collect_marked(*pr.module).empty());
}

TEST_CASE("marked boolean expression is Unsupported") {
  ParseResult pr = parse_source(
      "module m\nreal x = 1.0\nbool b = true\n@optimize\nb = x < 2.0\n");
  REQUIRE(pr.ok());
  CHECK_THROWS_WITH_AS(collect_marked(*pr.module),
                       doctest::Contains("Unsupported"), FpoptError);
}

TEST_CASE("analyze_mark is deterministic for a fixed seed") {
  ParseResult pr = parse_source(kMarkedModule);
  REQUIRE(pr.ok());
  auto marks = collect_marked(*pr.module);
  Analysis a = analyze_mark(marks[0], 128, 9);
  Analysis b = analyze_mark(marks[0], 128, 9);
  CHECK(to_string(*a.winner) == to_string(*b.winner));
  CHECK(a.input.mean == b.input.mean);
  CHECK(a.output.mean == b.output.mean);
  CHECK(a.provenance == b.provenance);
  CHECK(a.output.mean <= a.input.mean);
}

TEST_CASE("apply_annotation swaps the equation and re-checks") {
  ParseResult pr = parse_source(kMarkedModule);
  REQUIRE(pr.ok());
  auto marks = collect_marked(*pr.module);
  Analysis a = analyze_mark(marks[0], 128, 9);
  apply_annotation(*pr.module, "demo#1", a);
  // The rewritten module still parses, checks and contains the winner.
  std::string printed = print_module(*pr.module);
  ParseResult re = parse_source(printed);
  REQUIRE(re.ok());
  auto cm = check::check_module(*re.module);
  CHECK(cm.ok());
}

TEST_CASE("apply_annotation rejects unknown ids") {
  ParseResult pr = parse_source(kMarkedModule);
  REQUIRE(pr.ok());
  auto marks = collect_marked(*pr.module);
  Analysis a = analyze_mark(marks[0], 64, 9);
  CHECK_THROWS_WITH_AS(apply_annotation(*pr.module, "demo#7", a),
                       doctest::Contains("NoAnnotation"), FpoptError);
}

TEST_CASE("identity winner application keeps the module equivalent") {
  ParseResult pr = parse_source(kMarkedModule);
  REQUIRE(pr.ok());
  std::string before = print_module(*pr.module);
  auto marks = collect_marked(*pr.module);
  // Force the identity winner by offering no candidates.
  VarTable vars;
  for (const auto& v : marks[0].vars.vars)
    vars.vars.push_back(
        {v.name, v.source ? ast::clone(*v.source) : nullptr, v.range});
  SamplePlan plan;
  for (const auto& v : marks[0].vars.vars)
    plan.vars.push_back(
        {v.name, v.source ? ast::clone(*v.source) : nullptr, v.range});
  plan.count = 64;
  plan.seed = 1;
  SampleSet s = draw_samples(*marks[0].fexpr, plan);
  Analysis a = select_and_annotate("demo#1", marks[0].fexpr,
                                   estimate_on(*marks[0].fexpr, s), {},
                                   std::move(vars));
  apply_annotation(*pr.module, "demo#1", a);
  ParseResult re = parse_source(print_module(*pr.module));
  REQUIRE(re.ok());
  // The marked equation still abstracts to the same expression
  // (parenthesization may differ after printing).
  ParseResult orig = parse_source(before);
  auto m_re = collect_marked(*re.module);
  auto m_orig = collect_marked(*orig.module);
  REQUIRE(m_re.size() == 1);
  REQUIRE(m_orig.size() == 1);
  CHECK(to_string(*m_re[0].fexpr) == to_string(*m_orig[0].fexpr));
}

TEST_CASE("report lists original, winner, bits and rules") {
  VarTable vt;
  FExprPtr e = fx("sqrt(x + 1) - sqrt(x)", vt);
  auto plan = plan_for(e, std::make_pair(1e12, 1e16));
  SampleSet s = draw_samples(*e, plan);
  auto input = estimate_on(*e, s);
  auto cands = search_rewrites(e, s);
  Analysis a =
      select_and_annotate("m#1", e, input, std::move(cands), std::move(vt));
  std::vector<Analysis> all;
  all.push_back(std::move(a));
  std::string rep = format_report(all);
  CHECK(rep.find("mark m#1") != std::string::npos);
  CHECK(rep.find("sqrt(x + 1) - sqrt(x)") != std::string::npos);
  CHECK(rep.find("input:") != std::string::npos);
  CHECK(rep.find("output:") != std::string::npos);
  CHECK(rep.find("rules:") != std::string::npos);
  CHECK(rep.find("conjugate") != std::string::npos);
}
