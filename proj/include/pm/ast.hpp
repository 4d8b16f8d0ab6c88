#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pm/diag.hpp"

namespace pm::ast {

enum class BinOp { And, Or, Eq, Ne, Lt, Gt, Le, Ge, Add, Sub, Mul, Div, Pow };
enum class UnOp { Neg, Not, Sqrt };

const char* bin_op_symbol(BinOp op);
const char* un_op_symbol(UnOp op);
bool is_logical(BinOp op);
bool is_relational(BinOp op);
bool is_arithmetic(BinOp op);

enum class ExprKind {
  Binary,
  Unary,
  Paren,
  Literal,
  VarAccess,
  ParticleAccess,
  ArrayAccess,
  DiffOpApply,  // laplacian
};

enum class LiteralKind { Integer, Real, String, Boolean };

// Product of powers of declared dimension identifiers, e.g. {l * t^-2}.
struct DimExpr {
  std::vector<std::pair<std::string, int>> factors;
  Span span;
  bool empty() const { return factors.empty(); }
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind;
  Span span;

  BinOp bin_op{};
  UnOp un_op{};
  // Binary: [lhs, rhs]. Unary/Paren/DiffOpApply: [operand].
  // ParticleAccess: [object] plus `name`. ArrayAccess: [base, index].
  std::vector<ExprPtr> children;

  LiteralKind lit_kind{};
  std::string text;  // literal spelling
  long long int_value = 0;
  double real_value = 0.0;
  bool bool_value = false;

  std::string name;  // variable name or accessed field/property

  // Numeric literals may carry a dimension annotation: 0.5{l * t^-1}.
  std::optional<DimExpr> dim_annotation;

  Expr* child(size_t i) const { return children[i].get(); }
};

ExprPtr clone(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

// ---------------------------------------------------------------------------
// Type and dimension annotations as written in source.

struct TypeSpec {
  enum Base { Real, Int, Bool, String, Vector, Matrix } base = Real;
  Base element = Real;  // for Vector/Matrix
  int arity = 1;        // particle properties: real[2] v
  std::optional<DimExpr> dim;
  Span span;
};

// ---------------------------------------------------------------------------
// Statements.

enum class StmtKind {
  VarDecl,
  VarInit,
  Assign,
  ExprStmt,
  IfElse,
  Foreach,
  Timeloop,
  DeqnBlock,
  CreateTopology,
  CreateParticles,
  CreateNeighlist,
  ApplyBc,
  UpdateNeighlist,
  IoWrite,
  LoadData,
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct PropDecl {
  TypeSpec type;
  std::string name;
  ExprPtr init;  // optional uniform initial value
  Span span;
};

struct ParticleInitSpec {
  enum Kind { Grid, Load, Random } kind = Grid;
  std::vector<ExprPtr> grid_counts;         // per axis
  std::string file;                         // Load
  std::vector<std::string> columns;         // Load: x, y[, z], prop names
  ExprPtr random_count;                     // Random
  ExprPtr random_seed;
};

struct Equation {
  std::string list_name;
  std::string field_name;
  ExprPtr rhs;
  bool optimize = false;
  Span span;
};

struct Stmt {
  StmtKind kind;
  Span span;
  bool optimize = false;  // @optimize pragma

  // VarDecl / VarInit
  TypeSpec decl_type;
  std::string name;      // declared name / target object name
  ExprPtr init;

  // Assign
  ExprPtr target;
  ExprPtr value;

  // ExprStmt
  ExprPtr expr;

  // IfElse
  ExprPtr cond;
  std::vector<StmtPtr> body;       // then / loop / timeloop / block body
  std::vector<StmtPtr> else_body;

  // Foreach
  std::string loop_var;
  std::string source_list;      // particle list, or neighbor list name
  bool over_neighbors = false;
  std::string neighbor_of;      // particle variable for neighbors(p, nl)

  // Timeloop
  ExprPtr time_start;
  ExprPtr time_end;
  ExprPtr time_step;

  // DeqnBlock
  std::string integrator;  // euler | rk4
  std::vector<Equation> equations;

  // CreateTopology
  std::string boundary;  // periodic | none

  // CreateParticles
  std::string topology;
  ParticleInitSpec init_spec;
  std::vector<PropDecl> props;

  // CreateNeighlist
  std::string on_list;
  ExprPtr cutoff;

  // LoadData
  std::string file;
  std::vector<std::string> columns;
};

struct DimensionDecl {
  std::string name;
  std::optional<DimExpr> definition;  // absent: fundamental
  std::string description;
  Span span;
};

struct ParamDecl {
  TypeSpec type;
  std::string name;
  ExprPtr default_value;
  std::optional<std::pair<double, double>> range;
  Span span;
};

struct SourceModule {
  std::string name;
  Span span;
  std::vector<DimensionDecl> dimensions;
  std::vector<std::string> dimension_imports;  // .dim file paths
  std::vector<ParamDecl> params;
  std::vector<StmtPtr> statements;
};

// Post-parse context checks: diff-ops outside deqn bodies, duplicate
// timeloops. Diagnostics only, never throws.
std::vector<Diagnostic> validate_context(const SourceModule& module);

}  // namespace pm::ast
