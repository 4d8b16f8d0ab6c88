#include "pm/printer.hpp"

#include <cstdio>
#include <sstream>

namespace pm {

using namespace ast;

namespace {

int bin_level(BinOp op) {
  if (is_logical(op)) return 1;
  if (op == BinOp::Eq || op == BinOp::Ne) return 2;
  if (is_relational(op)) return 3;
  if (op == BinOp::Add || op == BinOp::Sub) return 4;
  if (op == BinOp::Mul || op == BinOp::Div) return 5;
  return 7;  // Pow
}

std::string format_real(double v) {
  char buf[64];
  snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // ensure it reparses as a real literal
  if (s.find_first_of(".eE") == std::string::npos &&
      s.find_first_not_of("-0123456789") == std::string::npos)
    s += ".0";
  return s;
}

void print(std::ostream& os, const Expr& e, int min_level) {
  switch (e.kind) {
    case ExprKind::Binary: {
      int lvl = bin_level(e.bin_op);
      bool paren = lvl < min_level;
      if (paren) os << '(';
      if (e.bin_op == BinOp::Pow) {
        print(os, *e.child(0), 8);
        os << '^';
        print(os, *e.child(1), 6);
      } else {
        print(os, *e.child(0), lvl);
        os << ' ' << bin_op_symbol(e.bin_op) << ' ';
        print(os, *e.child(1), lvl + 1);
      }
      if (paren) os << ')';
      break;
    }
    case ExprKind::Unary: {
      bool paren = 6 < min_level;
      if (paren) os << '(';
      os << un_op_symbol(e.un_op);
      if (e.un_op == UnOp::Sqrt) {
        const Expr* c = e.child(0);
        while (c->kind == ExprKind::Paren) c = c->child(0);
        os << '(';
        print(os, *c, 0);
        os << ')';
      } else {
        print(os, *e.child(0), 6);
      }
      if (paren) os << ')';
      break;
    }
    case ExprKind::Paren:
      os << '(';
      print(os, *e.child(0), 0);
      os << ')';
      break;
    case ExprKind::Literal:
      switch (e.lit_kind) {
        case LiteralKind::Integer:
          if (!e.text.empty()) os << e.text;
          else os << e.int_value;
          break;
        case LiteralKind::Real:
          if (!e.text.empty()) os << e.text;
          else os << format_real(e.real_value);
          break;
        case LiteralKind::String:
          os << '"' << e.text << '"';
          break;
        case LiteralKind::Boolean:
          os << (e.bool_value ? "true" : "false");
          break;
      }
      if (e.dim_annotation && !e.dim_annotation->empty())
        os << '{' << print_dim_expr(*e.dim_annotation) << '}';
      break;
    case ExprKind::VarAccess:
      os << e.name;
      break;
    case ExprKind::ParticleAccess:
      print(os, *e.child(0), 8);
      os << "->" << e.name;
      break;
    case ExprKind::ArrayAccess:
      print(os, *e.child(0), 8);
      os << '[';
      print(os, *e.child(1), 0);
      os << ']';
      break;
    case ExprKind::DiffOpApply:
      os << "laplacian(";
      print(os, *e.child(0), 0);
      os << ')';
      break;
  }
}

class ModulePrinter {
public:
  explicit ModulePrinter(std::ostream& os) : os_(os) {}

  void run(const SourceModule& m) {
    os_ << "module " << m.name << "\n\n";
    for (const auto& imp : m.dimension_imports)
      os_ << "dimensions from \"" << imp << "\"\n";
    if (!m.dimensions.empty()) {
      os_ << "dimensions {\n";
      for (const auto& d : m.dimensions) {
        os_ << "  " << d.name;
        if (d.definition) os_ << " = " << print_dim_expr(*d.definition);
        if (!d.description.empty()) os_ << " \"" << d.description << '"';
        os_ << '\n';
      }
      os_ << "}\n";
    }
    for (const auto& p : m.params) {
      os_ << "param " << print_type_spec(p.type) << ' ' << p.name;
      if (p.default_value) os_ << " = " << print_expr(*p.default_value);
      if (p.range)
        os_ << " range [" << format_real(p.range->first) << ", "
            << format_real(p.range->second) << ']';
      os_ << '\n';
    }
    os_ << '\n';
    for (const auto& s : m.statements) stmt(*s);
  }

private:
  void indent() {
    for (int i = 0; i < depth_; ++i) os_ << "  ";
  }

  void block(const std::vector<StmtPtr>& body) {
    os_ << "{\n";
    ++depth_;
    for (const auto& s : body) stmt(*s);
    --depth_;
    indent();
    os_ << "}";
  }

  void stmt(const Stmt& s) {
    indent();
    if (s.optimize) os_ << "@optimize ";
    switch (s.kind) {
      case StmtKind::VarDecl:
        os_ << print_type_spec(s.decl_type) << ' ' << s.name;
        break;
      case StmtKind::VarInit:
        os_ << print_type_spec(s.decl_type) << ' ' << s.name << " = "
            << print_expr(*s.init);
        break;
      case StmtKind::Assign:
        os_ << print_expr(*s.target) << " = " << print_expr(*s.value);
        break;
      case StmtKind::ExprStmt:
        os_ << print_expr(*s.expr);
        break;
      case StmtKind::IfElse:
        os_ << "if " << print_expr(*s.cond) << ' ';
        block(s.body);
        if (!s.else_body.empty()) {
          os_ << " else ";
          block(s.else_body);
        }
        break;
      case StmtKind::Foreach:
        os_ << "foreach " << s.loop_var << " in ";
        if (s.over_neighbors)
          os_ << "neighbors(" << s.neighbor_of << ", " << s.source_list << ')';
        else
          os_ << s.source_list;
        os_ << ' ';
        block(s.body);
        break;
      case StmtKind::Timeloop:
        os_ << "timeloop " << s.loop_var << " = " << print_expr(*s.time_start)
            << " to " << print_expr(*s.time_end) << " step "
            << print_expr(*s.time_step) << ' ';
        block(s.body);
        break;
      case StmtKind::DeqnBlock:
        os_ << "deqn on " << s.name << " using " << s.integrator << " {\n";
        ++depth_;
        for (const auto& eq : s.equations) {
          indent();
          if (eq.optimize) os_ << "@optimize ";
          os_ << "d_dt(" << eq.list_name << "->" << eq.field_name
              << ") = " << print_expr(*eq.rhs) << '\n';
        }
        --depth_;
        indent();
        os_ << "}";
        break;
      case StmtKind::CreateTopology:
        os_ << "topology " << s.name << " boundary " << s.boundary;
        break;
      case StmtKind::CreateParticles:
        os_ << "particles " << s.name << " on " << s.topology << ' ';
        switch (s.init_spec.kind) {
          case ParticleInitSpec::Grid: {
            os_ << "grid(";
            for (size_t i = 0; i < s.init_spec.grid_counts.size(); ++i) {
              if (i) os_ << ", ";
              os_ << print_expr(*s.init_spec.grid_counts[i]);
            }
            os_ << ')';
            break;
          }
          case ParticleInitSpec::Load:
            os_ << "load \"" << s.init_spec.file << "\" columns (";
            for (size_t i = 0; i < s.init_spec.columns.size(); ++i) {
              if (i) os_ << ", ";
              os_ << s.init_spec.columns[i];
            }
            os_ << ')';
            break;
          case ParticleInitSpec::Random:
            os_ << "random(" << print_expr(*s.init_spec.random_count) << ", "
                << print_expr(*s.init_spec.random_seed) << ')';
            break;
        }
        if (!s.props.empty()) {
          os_ << " {\n";
          ++depth_;
          for (const auto& p : s.props) {
            indent();
            os_ << print_type_spec(p.type) << ' ' << p.name;
            if (p.init) os_ << " = " << print_expr(*p.init);
            os_ << '\n';
          }
          --depth_;
          indent();
          os_ << "}";
        }
        break;
      case StmtKind::CreateNeighlist:
        os_ << "neighborlist " << s.name << " on " << s.on_list << " cutoff "
            << print_expr(*s.cutoff);
        break;
      case StmtKind::ApplyBc:
        os_ << "apply_bc " << s.name;
        break;
      case StmtKind::UpdateNeighlist:
        os_ << "update_neighbors " << s.name;
        break;
      case StmtKind::IoWrite:
        os_ << "write " << s.name;
        break;
      case StmtKind::LoadData:
        os_ << "load " << s.name << " from \"" << s.file << "\" columns (";
        for (size_t i = 0; i < s.columns.size(); ++i) {
          if (i) os_ << ", ";
          os_ << s.columns[i];
        }
        os_ << ')';
        break;
    }
    os_ << '\n';
  }

  std::ostream& os_;
  int depth_ = 0;
};

}  // namespace

std::string print_expr(const Expr& e) {
  std::ostringstream os;
  print(os, e, 0);
  return os.str();
}

std::string print_dim_expr(const DimExpr& d) {
  std::ostringstream os;
  for (size_t i = 0; i < d.factors.size(); ++i) {
    if (i) os << " * ";
    os << d.factors[i].first;
    if (d.factors[i].second != 1) os << '^' << d.factors[i].second;
  }
  return os.str();
}

std::string print_type_spec(const TypeSpec& t) {
  std::ostringstream os;
  auto base_name = [](TypeSpec::Base b) {
    switch (b) {
      case TypeSpec::Real: return "real";
      case TypeSpec::Int: return "int";
      case TypeSpec::Bool: return "bool";
      case TypeSpec::String: return "string";
      case TypeSpec::Vector: return "vector";
      case TypeSpec::Matrix: return "matrix";
    }
    return "real";
  };
  os << base_name(t.base);
  if (t.base == TypeSpec::Vector || t.base == TypeSpec::Matrix)
    os << '<' << base_name(t.element) << '>';
  if (t.arity != 1) os << '[' << t.arity << ']';
  if (t.dim && !t.dim->empty()) os << '{' << print_dim_expr(*t.dim) << '}';
  return os.str();
}

std::string print_module(const SourceModule& m) {
  std::ostringstream os;
  ModulePrinter(os).run(m);
  return os.str();
}

}  // namespace pm
