#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pm/ast.hpp"

namespace pm::fpopt {

// Errors raised by the accuracy pass. `code` is one of: Unsupported,
// NoValidSamples, NoAnnotation, RecheckFailed.
class FpoptError : public std::runtime_error {
public:
  FpoptError(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

// Immutable real-valued expression tree used by the accuracy pass.
// Subtrees are shared freely between candidates; never mutate in place.
struct FExpr;
using FExprPtr = std::shared_ptr<const FExpr>;

struct FExpr {
  enum Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sqrt };
  Kind kind;
  double value = 0.0;        // Const
  std::string name;          // Var
  std::vector<FExprPtr> kids;  // binary: [lhs, rhs]; unary: [operand]
};

FExprPtr fconst(double v);
FExprPtr fvar(std::string name);
FExprPtr fnode(FExpr::Kind k, FExprPtr a);
FExprPtr fnode(FExpr::Kind k, FExprPtr a, FExprPtr b);

bool fequal(const FExpr& a, const FExpr& b);
// Deterministic infix spelling with minimal parentheses; used for
// de-duplication, lexicographic tie-breaking and reports.
std::string to_string(const FExpr& e);
size_t op_count(const FExpr& e);
void free_vars(const FExpr& e, std::vector<std::string>& out);

// One free variable of an abstracted expression: its name, the source
// expression it stands for (particle access, laplacian application, ...)
// and the declared sampling range if any.
struct VarBinding {
  std::string name;
  ast::ExprPtr source;  // may be null for synthetic variables
  std::optional<std::pair<double, double>> range;
};

struct VarTable {
  std::vector<VarBinding> vars;
  const VarBinding* find(const std::string& name) const;
  // Returns the variable bound to `source_key`, introducing it if new.
  std::string bind(const std::string& preferred, const ast::Expr& source);
};

// Abstracts a DSL expression into an FExpr: particle accesses, component
// accesses and laplacian applications become free real variables; plain
// variables keep their names. Throws FpoptError("Unsupported") on
// boolean, string, relational or logical content.
FExprPtr from_ast(const ast::Expr& e, VarTable& vars);

// Converts back to a DSL expression, substituting each variable's source
// expression. Integral constants become integer literals.
ast::ExprPtr to_ast(const FExpr& e, const VarTable& vars);

// Parses a standalone arithmetic expression (test/tool convenience).
FExprPtr parse_fexpr(const std::string& source, VarTable& vars);

}  // namespace pm::fpopt
