#include "pm/ast.hpp"

namespace pm::ast {

const char* bin_op_symbol(BinOp op) {
  switch (op) {
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Gt: return ">";
    case BinOp::Le: return "<=";
    case BinOp::Ge: return ">=";
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Pow: return "^";
  }
  return "?";
}

const char* un_op_symbol(UnOp op) {
  switch (op) {
    case UnOp::Neg: return "-";
    case UnOp::Not: return "!";
    case UnOp::Sqrt: return "sqrt";
  }
  return "?";
}

bool is_logical(BinOp op) { return op == BinOp::And || op == BinOp::Or; }

bool is_relational(BinOp op) {
  switch (op) {
    case BinOp::Eq: case BinOp::Ne: case BinOp::Lt:
    case BinOp::Gt: case BinOp::Le: case BinOp::Ge:
      return true;
    default:
      return false;
  }
}

bool is_arithmetic(BinOp op) { return !is_logical(op) && !is_relational(op); }

ExprPtr clone(const Expr& e) {
  auto out = std::make_unique<Expr>();
  out->kind = e.kind;
  out->span = e.span;
  out->bin_op = e.bin_op;
  out->un_op = e.un_op;
  out->lit_kind = e.lit_kind;
  out->text = e.text;
  out->int_value = e.int_value;
  out->real_value = e.real_value;
  out->bool_value = e.bool_value;
  out->name = e.name;
  out->dim_annotation = e.dim_annotation;
  out->children.reserve(e.children.size());
  for (const auto& c : e.children) out->children.push_back(clone(*c));
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Binary:
      if (a.bin_op != b.bin_op) return false;
      break;
    case ExprKind::Unary:
      if (a.un_op != b.un_op) return false;
      break;
    case ExprKind::Literal:
      if (a.lit_kind != b.lit_kind) return false;
      if (a.dim_annotation.has_value() != b.dim_annotation.has_value())
        return false;
      if (a.dim_annotation &&
          a.dim_annotation->factors != b.dim_annotation->factors)
        return false;
      switch (a.lit_kind) {
        case LiteralKind::Integer:
          if (a.int_value != b.int_value) return false;
          break;
        case LiteralKind::Real:
          if (a.real_value != b.real_value) return false;
          break;
        case LiteralKind::String:
          if (a.text != b.text) return false;
          break;
        case LiteralKind::Boolean:
          if (a.bool_value != b.bool_value) return false;
          break;
      }
      break;
    case ExprKind::VarAccess:
    case ExprKind::ParticleAccess:
      if (a.name != b.name) return false;
      break;
    default:
      break;
  }
  if (a.children.size() != b.children.size()) return false;
  for (size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

namespace {

void scan_expr_for_diffops(const Expr& e, bool allowed,
                           std::vector<Diagnostic>& out) {
  if (e.kind == ExprKind::DiffOpApply && !allowed) {
    out.push_back({"E2101", Severity::Error, e.span,
                   "differential operator is only allowed inside a deqn body"});
  }
  for (const auto& c : e.children) scan_expr_for_diffops(*c, allowed, out);
}

void scan_stmt(const Stmt& s, bool in_timeloop, std::vector<Diagnostic>& out);

void scan_body(const std::vector<StmtPtr>& body, bool in_timeloop,
               std::vector<Diagnostic>& out) {
  for (const auto& s : body) scan_stmt(*s, in_timeloop, out);
}

void scan_stmt(const Stmt& s, bool in_timeloop, std::vector<Diagnostic>& out) {
  auto check = [&](const ExprPtr& e) {
    if (e) scan_expr_for_diffops(*e, false, out);
  };
  check(s.init);
  check(s.target);
  check(s.value);
  check(s.expr);
  check(s.cond);
  check(s.cutoff);
  check(s.time_start);
  check(s.time_end);
  check(s.time_step);
  if (s.kind == StmtKind::DeqnBlock && !in_timeloop) {
    out.push_back({"E2101", Severity::Error, s.span,
                   "deqn requires an enclosing timeloop"});
  }
  // deqn equation bodies are the one context where diff-ops are legal
  scan_body(s.body, in_timeloop || s.kind == StmtKind::Timeloop, out);
  scan_body(s.else_body, in_timeloop, out);
}

void count_timeloops(const std::vector<StmtPtr>& body, int& n, Span& second) {
  for (const auto& s : body) {
    if (s->kind == StmtKind::Timeloop) {
      if (++n == 2) second = s->span;
    }
    count_timeloops(s->body, n, second);
    count_timeloops(s->else_body, n, second);
  }
}

}  // namespace

std::vector<Diagnostic> validate_context(const SourceModule& module) {
  std::vector<Diagnostic> out;
  scan_body(module.statements, false, out);
  int loops = 0;
  Span second{};
  count_timeloops(module.statements, loops, second);
  if (loops > 1) {
    out.push_back({"E2102", Severity::Error, second,
                   "a module may contain at most one timeloop"});
  }
  return out;
}

}  // namespace pm::ast
