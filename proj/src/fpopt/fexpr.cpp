#include "pm/fpopt/fexpr.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "pm/parser.hpp"
#include "pm/printer.hpp"

namespace pm::fpopt {

FExprPtr fconst(double v) {
  auto e = std::make_shared<FExpr>();
  e->kind = FExpr::Const;
  e->value = v;
  return e;
}

FExprPtr fvar(std::string name) {
  auto e = std::make_shared<FExpr>();
  e->kind = FExpr::Var;
  e->name = std::move(name);
  return e;
}

FExprPtr fnode(FExpr::Kind k, FExprPtr a) {
  auto e = std::make_shared<FExpr>();
  e->kind = k;
  e->kids.push_back(std::move(a));
  return e;
}

FExprPtr fnode(FExpr::Kind k, FExprPtr a, FExprPtr b) {
  auto e = std::make_shared<FExpr>();
  e->kind = k;
  e->kids.push_back(std::move(a));
  e->kids.push_back(std::move(b));
  return e;
}

bool fequal(const FExpr& a, const FExpr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case FExpr::Const: {
      // Bitwise comparison so -0.0 and 0.0 stay distinct spellings.
      double x = a.value, y = b.value;
      return std::memcmp(&x, &y, sizeof x) == 0;
    }
    case FExpr::Var:
      return a.name == b.name;
    default:
      if (a.kids.size() != b.kids.size()) return false;
      for (size_t i = 0; i < a.kids.size(); ++i)
        if (!fequal(*a.kids[i], *b.kids[i])) return false;
      return true;
  }
}

namespace {

// Shortest decimal spelling that round-trips to the same double.
std::string print_const(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

int precedence(FExpr::Kind k) {
  switch (k) {
    case FExpr::Add:
    case FExpr::Sub:
      return 1;
    case FExpr::Mul:
    case FExpr::Div:
      return 2;
    case FExpr::Neg:
      return 3;
    case FExpr::Pow:
      return 4;
    default:
      return 5;
  }
}

void print(const FExpr& e, int min_prec, std::string& out) {
  int prec = precedence(e.kind);
  bool paren = prec < min_prec;
  if (paren) out += '(';
  switch (e.kind) {
    case FExpr::Const:
      out += print_const(e.value);
      break;
    case FExpr::Var:
      out += e.name;
      break;
    case FExpr::Neg:
      out += '-';
      print(*e.kids[0], prec + 1, out);
      break;
    case FExpr::Sqrt:
      out += "sqrt(";
      print(*e.kids[0], 0, out);
      out += ')';
      break;
    case FExpr::Add:
    case FExpr::Sub:
    case FExpr::Mul:
    case FExpr::Div: {
      print(*e.kids[0], prec, out);
      const char* sym = e.kind == FExpr::Add   ? " + "
                        : e.kind == FExpr::Sub ? " - "
                        : e.kind == FExpr::Mul ? " * "
                                               : " / ";
      out += sym;
      print(*e.kids[1], prec + 1, out);
      break;
    }
    case FExpr::Pow:
      print(*e.kids[0], prec + 1, out);  // ^ is right-associative
      out += '^';
      print(*e.kids[1], prec, out);
      break;
  }
  if (paren) out += ')';
}

}  // namespace

std::string to_string(const FExpr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

size_t op_count(const FExpr& e) {
  if (e.kind == FExpr::Const || e.kind == FExpr::Var) return 0;
  size_t n = 1;
  for (const auto& k : e.kids) n += op_count(*k);
  return n;
}

void free_vars(const FExpr& e, std::vector<std::string>& out) {
  if (e.kind == FExpr::Var) {
    for (const auto& v : out)
      if (v == e.name) return;
    out.push_back(e.name);
    return;
  }
  for (const auto& k : e.kids) free_vars(*k, out);
}

const VarBinding* VarTable::find(const std::string& name) const {
  for (const auto& v : vars)
    if (v.name == name) return &v;
  return nullptr;
}

std::string VarTable::bind(const std::string& preferred,
                           const ast::Expr& source) {
  for (const auto& v : vars)
    if (v.source && ast::structurally_equal(*v.source, source)) return v.name;
  std::string name = preferred;
  int suffix = 1;
  while (find(name)) name = preferred + "_" + std::to_string(suffix++);
  vars.push_back({name, ast::clone(source), std::nullopt});
  return name;
}

namespace {

// Variable name for an abstracted source expression: p->f becomes p_f,
// laplacian(l->f) becomes lap_f, v[0] becomes v_0.
std::string abstract_name(const ast::Expr& e) {
  switch (e.kind) {
    case ast::ExprKind::VarAccess:
      return e.name;
    case ast::ExprKind::ParticleAccess: {
      std::string base = abstract_name(*e.child(0));
      return base.empty() ? e.name : base + "_" + e.name;
    }
    case ast::ExprKind::ArrayAccess: {
      std::string base = abstract_name(*e.child(0));
      const ast::Expr* idx = e.child(1);
      if (idx->kind == ast::ExprKind::Literal &&
          idx->lit_kind == ast::LiteralKind::Integer)
        return base + "_" + std::to_string(idx->int_value);
      return base + "_i";
    }
    case ast::ExprKind::DiffOpApply:
      return "lap_" + abstract_name(*e.child(0));
    default:
      return "v";
  }
}

[[noreturn]] void unsupported(const std::string& what) {
  throw FpoptError("Unsupported", what + " cannot be analyzed; only real "
                   "arithmetic (+, -, *, /, ^, sqrt) is supported");
}

}  // namespace

FExprPtr from_ast(const ast::Expr& e, VarTable& vars) {
  switch (e.kind) {
    case ast::ExprKind::Paren:
      return from_ast(*e.child(0), vars);
    case ast::ExprKind::Literal:
      switch (e.lit_kind) {
        case ast::LiteralKind::Integer:
          return fconst(static_cast<double>(e.int_value));
        case ast::LiteralKind::Real:
          return fconst(e.real_value);
        default:
          unsupported("a boolean or string literal");
      }
    case ast::ExprKind::VarAccess:
      if (e.name == "random") unsupported("the random builtin");
      return fvar(vars.bind(abstract_name(e), e));
    case ast::ExprKind::ParticleAccess:
    case ast::ExprKind::ArrayAccess:
    case ast::ExprKind::DiffOpApply:
      return fvar(vars.bind(abstract_name(e), e));
    case ast::ExprKind::Unary:
      switch (e.un_op) {
        case ast::UnOp::Neg:
          return fnode(FExpr::Neg, from_ast(*e.child(0), vars));
        case ast::UnOp::Sqrt:
          return fnode(FExpr::Sqrt, from_ast(*e.child(0), vars));
        case ast::UnOp::Not:
          unsupported("a logical expression");
      }
      break;
    case ast::ExprKind::Binary: {
      FExpr::Kind k;
      switch (e.bin_op) {
        case ast::BinOp::Add: k = FExpr::Add; break;
        case ast::BinOp::Sub: k = FExpr::Sub; break;
        case ast::BinOp::Mul: k = FExpr::Mul; break;
        case ast::BinOp::Div: k = FExpr::Div; break;
        case ast::BinOp::Pow: k = FExpr::Pow; break;
        default:
          unsupported("a boolean expression");
      }
      return fnode(k, from_ast(*e.child(0), vars), from_ast(*e.child(1), vars));
    }
  }
  unsupported("this expression form");
}

namespace {

ast::ExprPtr ast_literal(double v) {
  auto e = std::make_unique<ast::Expr>();
  e->kind = ast::ExprKind::Literal;
  double integral;
  if (std::modf(v, &integral) == 0.0 && std::fabs(v) < 9.0e15) {
    e->lit_kind = ast::LiteralKind::Integer;
    e->int_value = static_cast<long long>(v);
    e->text = std::to_string(e->int_value);
  } else {
    e->lit_kind = ast::LiteralKind::Real;
    e->real_value = v;
    e->text = print_const(v);
  }
  return e;
}

ast::ExprPtr ast_binary(ast::BinOp op, ast::ExprPtr a, ast::ExprPtr b) {
  auto e = std::make_unique<ast::Expr>();
  e->kind = ast::ExprKind::Binary;
  e->bin_op = op;
  e->children.push_back(std::move(a));
  e->children.push_back(std::move(b));
  return e;
}

ast::ExprPtr ast_unary(ast::UnOp op, ast::ExprPtr a) {
  auto e = std::make_unique<ast::Expr>();
  e->kind = ast::ExprKind::Unary;
  e->un_op = op;
  e->children.push_back(std::move(a));
  return e;
}

// Wraps non-atomic operands in explicit parentheses so the printed
// rewritten source re-parses with the intended structure.
ast::ExprPtr maybe_paren(ast::ExprPtr e) {
  if (e->kind == ast::ExprKind::Binary || e->kind == ast::ExprKind::Unary) {
    auto p = std::make_unique<ast::Expr>();
    p->kind = ast::ExprKind::Paren;
    p->children.push_back(std::move(e));
    return p;
  }
  return e;
}

}  // namespace

ast::ExprPtr to_ast(const FExpr& e, const VarTable& vars) {
  switch (e.kind) {
    case FExpr::Const:
      return ast_literal(e.value);
    case FExpr::Var: {
      const VarBinding* b = vars.find(e.name);
      if (b && b->source) return ast::clone(*b->source);
      auto v = std::make_unique<ast::Expr>();
      v->kind = ast::ExprKind::VarAccess;
      v->name = e.name;
      return v;
    }
    case FExpr::Neg:
      return ast_unary(ast::UnOp::Neg, maybe_paren(to_ast(*e.kids[0], vars)));
    case FExpr::Sqrt:
      return ast_unary(ast::UnOp::Sqrt, maybe_paren(to_ast(*e.kids[0], vars)));
    case FExpr::Pow:
      return ast_binary(ast::BinOp::Pow,
                        maybe_paren(to_ast(*e.kids[0], vars)),
                        maybe_paren(to_ast(*e.kids[1], vars)));
    case FExpr::Add:
    case FExpr::Sub:
    case FExpr::Mul:
    case FExpr::Div: {
      ast::BinOp op = e.kind == FExpr::Add   ? ast::BinOp::Add
                      : e.kind == FExpr::Sub ? ast::BinOp::Sub
                      : e.kind == FExpr::Mul ? ast::BinOp::Mul
                                             : ast::BinOp::Div;
      return ast_binary(op, maybe_paren(to_ast(*e.kids[0], vars)),
                        maybe_paren(to_ast(*e.kids[1], vars)));
    }
  }
  unsupported("this expression form");
}

FExprPtr parse_fexpr(const std::string& source, VarTable& vars) {
  DiagnosticSink diags;
  ast::ExprPtr e = parse_expression(source, diags);
  if (!e || diags.has_errors())
    throw FpoptError("Unsupported", "cannot parse expression: " + source);
  return from_ast(*e, vars);
}

}  // namespace pm::fpopt
