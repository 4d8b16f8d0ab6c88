#pragma once

#include <string>
#include <vector>

#include "pm/ast.hpp"
#include "pm/check.hpp"
#include "pm/fpopt/analyze.hpp"
#include "pm/fpopt/fexpr.hpp"

namespace pm::fpopt {

// ---------------------------------------------------------------------------
// Rewriting and simplification.

// Constant folding plus canonicalizing cancellation: identity elements
// are removed, syntactically equal summands combine ((x+1)-x folds to 1),
// equal factors combine (sqrt(u)*sqrt(u) folds to u). Association order
// of surviving terms is preserved so the search can explore evaluation
// orders explicitly.
FExprPtr simplify(const FExprPtr& e);

struct RuleApplication {
  FExprPtr result;    // already simplified
  std::string rule;   // rule name, e.g. "conjugate"
};

// All single-rule rewrites of any subtree of `e`, simplified and
// de-duplicated. Every rule is mathematically equivalent on its validity
// domain (divisions introduced by a rule require nonzero divisors).
std::vector<RuleApplication> rewrite_step(const FExprPtr& e);

// ---------------------------------------------------------------------------
// Search and selection.

struct SearchConfig {
  int iterations = 3;    // iterative-deepening depth I
  int max_candidates = 64;  // candidate cap C
  int frontier = 16;     // expressions expanded per iteration
};

struct RewriteCandidate {
  FExprPtr expr;
  std::vector<std::string> provenance;  // rule sequence from the original
  ErrorEstimate est;
};

// Iteratively rewrites `original`, keeping candidates that are best on at
// least one sample point. All candidates are estimated on `samples`.
std::vector<RewriteCandidate> search_rewrites(
    const FExprPtr& original, const SampleSet& samples,
    const SearchConfig& cfg = {});

// Result of analyzing one marked expression. The original AST node is
// not replaced; `apply_annotation` does that on request.
struct Analysis {
  std::string id;
  FExprPtr original;
  FExprPtr winner;          // may equal original (no improvement found)
  ErrorEstimate input;
  ErrorEstimate output;
  std::vector<std::string> provenance;
  VarTable vars;
  bool improved = false;
};

// Winner = lowest mean bits; ties broken by fewer operations, then by
// lexicographic spelling. The original competes, so the winner never
// regresses on the selection sample set.
Analysis select_and_annotate(const std::string& id, const FExprPtr& original,
                             const ErrorEstimate& input,
                             std::vector<RewriteCandidate> candidates,
                             VarTable vars);

// ---------------------------------------------------------------------------
// Marks and module-level driving.

struct Mark {
  std::string id;            // stable: "<module>#<n>" in source order
  const ast::Expr* expr = nullptr;
  VarTable vars;
  FExprPtr fexpr;
};

// Collects @optimize-marked expressions in source order. Particle and
// laplacian accesses are abstracted as free variables; parameters with
// range annotations contribute sampling ranges. Throws
// FpoptError("Unsupported") for non-numeric marked expressions.
std::vector<Mark> collect_marked(const ast::SourceModule& module);

// Full pass over one mark: draw samples, search, select.
Analysis analyze_mark(const Mark& mark, int sample_count, uint64_t seed,
                      const SearchConfig& cfg = {});

// Replaces the marked expression `id` with its winner inside `module`
// and re-checks the module. Throws FpoptError("NoAnnotation") for an
// unknown id and FpoptError("RecheckFailed") if the rewritten module no
// longer type-checks.
void apply_annotation(ast::SourceModule& module, const std::string& id,
                      const Analysis& analysis,
                      const std::string& base_dir = ".");

// Human-readable annotations report (the <name>.fpopt.txt payload).
std::string format_report(const std::vector<Analysis>& analyses);

}  // namespace pm::fpopt
