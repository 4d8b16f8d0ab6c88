#include "pm/check.hpp"

#include <cmath>

#include "pm/printer.hpp"

namespace pm::check {

using types::LatticeType;
using LT = LatticeType;
using dim::Dimension;
using dim::DimBinOp;

std::string AnnotatedType::to_string() const {
  if (is_error()) return "Error";
  return "[" + type.to_string() + "; " + dimension.to_string() + "]";
}

bool TypingEnv::bind(const std::string& name, AnnotatedType t) {
  auto& scope = scopes_.back();
  if (scope.count(name)) return false;
  scope.emplace(name, std::move(t));
  return true;
}

const AnnotatedType* TypingEnv::lookup(const std::string& name) const {
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
    auto f = it->find(name);
    if (f != it->end()) return &f->second;
  }
  return nullptr;
}

bool TypingEnv::bound_in_current_scope(const std::string& name) const {
  return scopes_.back().count(name) > 0;
}

namespace {

// If e is an integer literal (possibly negated and/or parenthesized),
// returns its value. Required for dimension propagation through `^`.
std::optional<long long> integer_literal_exponent(const ast::Expr& e) {
  const ast::Expr* p = &e;
  long long sign = 1;
  for (;;) {
    if (p->kind == ast::ExprKind::Paren) {
      p = p->child(0);
    } else if (p->kind == ast::ExprKind::Unary && p->un_op == ast::UnOp::Neg) {
      sign = -sign;
      p = p->child(0);
    } else {
      break;
    }
  }
  if (p->kind == ast::ExprKind::Literal &&
      p->lit_kind == ast::LiteralKind::Integer)
    return sign * p->int_value;
  return std::nullopt;
}

struct Inferrer {
  const TypingEnv& env;
  const std::map<std::string, ListInfo>& lists;
  DiagnosticSink& diags;
  std::map<const ast::Expr*, AnnotatedType>* record;
  bool scalar_view = false;  // equation bodies: list->f is per-particle
  const dim::DimTable* dim_table = nullptr;  // for literal annotations

  AnnotatedType fail(const ast::Expr& e, const std::string& code,
                     const std::string& msg) {
    diags.report(code, e.span, msg);
    return done(e, AnnotatedType::error());
  }

  AnnotatedType done(const ast::Expr& e, AnnotatedType t) {
    if (record) (*record)[&e] = t;
    return t;
  }

  AnnotatedType run(const ast::Expr& e) {
    switch (e.kind) {
      case ast::ExprKind::Literal:
        return done(e, literal(e));
      case ast::ExprKind::VarAccess:
        return var(e);
      case ast::ExprKind::Paren:
        return done(e, run(*e.child(0)));
      case ast::ExprKind::Unary:
        return unary(e);
      case ast::ExprKind::Binary:
        return binary(e);
      case ast::ExprKind::ParticleAccess:
        return particle_access(e);
      case ast::ExprKind::ArrayAccess:
        return array_access(e);
      case ast::ExprKind::DiffOpApply:
        return diff_op(e);
    }
    return done(e, AnnotatedType::error());
  }

  AnnotatedType literal(const ast::Expr& e) {
    Dimension d;
    if (e.dim_annotation) {
      if (dim_table) {
        auto expanded = dim_table->expand(*e.dim_annotation, diags);
        if (!expanded) return AnnotatedType::error();
        d = *expanded;
      } else {
        // No declaration table in scope: factors read as fundamentals.
        for (const auto& [name, exp] : e.dim_annotation->factors)
          d = d.times(Dimension::fundamental(name).power(exp));
      }
    }
    switch (e.lit_kind) {
      case ast::LiteralKind::Integer:
        return {LatticeType(LT::Integer), d};
      case ast::LiteralKind::Real:
        return {LatticeType(LT::Real), d};
      case ast::LiteralKind::String:
        return {LatticeType(LT::String), {}};
      case ast::LiteralKind::Boolean:
        return {LatticeType(LT::Boolean), {}};
    }
    return AnnotatedType::error();
  }

  AnnotatedType var(const ast::Expr& e) {
    if (e.name == "random")  // builtin uniform [0,1) draw
      return done(e, {LatticeType(LT::Real), {}});
    const AnnotatedType* t = env.lookup(e.name);
    if (!t)
      return fail(e, "E3003", "unknown variable '" + e.name + "'");
    return done(e, *t);
  }

  AnnotatedType unary(const ast::Expr& e) {
    AnnotatedType operand = run(*e.child(0));
    if (operand.is_error()) return done(e, operand);  // absorb, no new diag
    auto rt = types::unary_result(e.un_op, operand.type);
    if (!rt)
      return fail(e, "E3002",
                  std::string("operator '") + ast::un_op_symbol(e.un_op) +
                      "' is undefined for " + operand.type.to_string());
    if (e.un_op == ast::UnOp::Sqrt) {
      auto d = operand.dimension.sqrt();
      if (!d)
        return fail(e, "E4003",
                    "cannot take sqrt of dimension " +
                        operand.dimension.to_string() +
                        " (odd exponent)");
      return done(e, {*rt, *d});
    }
    return done(e, {*rt, operand.dimension});
  }

  AnnotatedType binary(const ast::Expr& e) {
    AnnotatedType l = run(*e.child(0));
    AnnotatedType r = run(*e.child(1));
    if (l.is_error() || r.is_error()) return done(e, AnnotatedType::error());
    auto rt = types::binary_result(e.bin_op, l.type, r.type);
    if (!rt)
      return fail(e, "E3001",
                  std::string("operator '") + ast::bin_op_symbol(e.bin_op) +
                      "' is undefined for " + l.type.to_string() + " and " +
                      r.type.to_string());
    return dimension_of_binary(e, l, r, *rt);
  }

  AnnotatedType dimension_of_binary(const ast::Expr& e, const AnnotatedType& l,
                                    const AnnotatedType& r, LatticeType rt) {
    using ast::BinOp;
    switch (e.bin_op) {
      case BinOp::And:
      case BinOp::Or:
        return done(e, {rt, {}});
      case BinOp::Eq:
      case BinOp::Ne:
      case BinOp::Lt:
      case BinOp::Gt:
      case BinOp::Le:
      case BinOp::Ge: {
        auto d = dim::dim_infer(DimBinOp::Relational, l.dimension, r.dimension);
        if (!d)
          return fail(e, "E4001",
                      "comparison between incompatible dimensions " +
                          l.dimension.to_string() + " and " +
                          r.dimension.to_string());
        return done(e, {rt, *d});
      }
      case BinOp::Add:
      case BinOp::Sub: {
        auto d = dim::dim_infer(
            e.bin_op == BinOp::Add ? DimBinOp::Add : DimBinOp::Sub,
            l.dimension, r.dimension);
        if (!d)
          return fail(e, "E4001",
                      std::string("operator '") +
                          ast::bin_op_symbol(e.bin_op) +
                          "' applied to incompatible dimensions " +
                          l.dimension.to_string() + " and " +
                          r.dimension.to_string());
        return done(e, {rt, *d});
      }
      case BinOp::Mul:
        return done(e, {rt, l.dimension.times(r.dimension)});
      case BinOp::Div:
        return done(e, {rt, l.dimension.divide(r.dimension)});
      case BinOp::Pow: {
        if (!r.dimension.is_empty())
          return fail(e, "E4001", "exponent must be dimensionless, got " +
                                      r.dimension.to_string());
        auto n = integer_literal_exponent(*e.child(1));
        if (!n) {
          if (!l.dimension.is_empty())
            return fail(e, "E4002",
                        "exponent of a dimensioned base must be an integer "
                        "literal");
          return done(e, {rt, {}});
        }
        if (*n < 0 && l.type.is(LT::Integer)) {
          // Integer base with a negative literal exponent evaluates as a
          // real at runtime while the static type stays Integer.
          diags.report("E3101", e.span,
                       "negative exponent on integer base evaluates to a "
                       "real value at runtime",
                       Severity::Warning);
        }
        return done(e, {rt, l.dimension.power(static_cast<int>(*n))});
      }
    }
    return done(e, AnnotatedType::error());
  }

  AnnotatedType particle_access(const ast::Expr& e) {
    AnnotatedType obj = run(*e.child(0));
    if (obj.is_error()) return done(e, AnnotatedType::error());
    bool list_level = obj.type.is(LT::ParticleList);
    if (!obj.type.is(LT::Particle) && !list_level)
      return fail(e, "E3004", "'->' requires a particle or particle list, "
                              "got " + obj.type.to_string());
    auto lit = lists.find(obj.type.list_name());
    if (lit == lists.end())
      return fail(e, "E3004",
                  "unknown particle list '" + obj.type.list_name() + "'");
    const ListInfo& info = lit->second;
    const PropInfo* prop = info.find(e.name);
    PropInfo builtin_pos;
    if (!prop && e.name == "pos") {
      builtin_pos.element_type = LatticeType(LT::Real);
      builtin_pos.arity = info.space_dim;
      builtin_pos.dimension = info.position_dim;
      prop = &builtin_pos;
    }
    if (!prop)
      return fail(e, "E3004", "particle list '" + lit->first +
                                  "' has no property '" + e.name + "'");
    LatticeType t = list_level && !scalar_view ? prop->field_type()
                                               : prop->access_type();
    return done(e, {t, prop->dimension});
  }

  AnnotatedType array_access(const ast::Expr& e) {
    AnnotatedType base = run(*e.child(0));
    AnnotatedType index = run(*e.child(1));
    if (base.is_error() || index.is_error())
      return done(e, AnnotatedType::error());
    if (!base.type.is(LT::Vector) && !base.type.is(LT::Matrix))
      return fail(e, "E3005",
                  "indexing requires a vector or matrix, got " +
                      base.type.to_string());
    if (!index.type.is(LT::Integer))
      return fail(e, "E3005",
                  "index must be an integer, got " + index.type.to_string());
    if (!index.dimension.is_empty())
      return fail(e, "E4001", "index must be dimensionless, got " +
                                  index.dimension.to_string());
    LatticeType elem = base.type.is(LT::Matrix)
                           ? LatticeType::vector_of(base.type.element())
                           : base.type.element();
    return done(e, {elem, base.dimension});
  }

  AnnotatedType diff_op(const ast::Expr& e) {
    AnnotatedType operand = run(*e.child(0));
    if (operand.is_error()) return done(e, AnnotatedType::error());
    const ast::Expr* inner = e.child(0);
    while (inner->kind == ast::ExprKind::Paren) inner = inner->child(0);
    bool shape_ok =
        scalar_view ? operand.type.is_scalar_numeric()
                    : operand.type.is(LT::Field) && operand.type.arity() == 1 &&
                          operand.type.element().is_scalar_numeric();
    bool is_pla = inner->kind == ast::ExprKind::ParticleAccess &&
                  record && record->count(inner->child(0)) &&
                  (*record)[inner->child(0)].type.is(LT::ParticleList);
    if (!record)
      is_pla = inner->kind == ast::ExprKind::ParticleAccess &&
               run(*inner->child(0)).type.is(LT::ParticleList);
    if (!is_pla || !shape_ok)
      return fail(e, "E3007",
                  "laplacian applies to a scalar field accessed through its "
                  "particle list, got " + operand.type.to_string());
    const AnnotatedType obj = record ? (*record)[inner->child(0)]
                                     : run(*inner->child(0));
    auto lit = lists.find(obj.type.list_name());
    Dimension pos_dim =
        lit != lists.end() ? lit->second.position_dim : Dimension::empty();
    Dimension d = operand.dimension.divide(pos_dim.power(2));
    LatticeType t = scalar_view
                        ? LatticeType(LT::Real)
                        : LatticeType::field_of(LatticeType(LT::Real), 1);
    return done(e, {t, d});
  }
};

}  // namespace

AnnotatedType infer(const ast::Expr& e, const TypingEnv& env,
                    const std::map<std::string, ListInfo>& lists,
                    DiagnosticSink& diags,
                    std::map<const ast::Expr*, AnnotatedType>* record,
                    bool list_scalar_view, const dim::DimTable* dims) {
  Inferrer inf{env, lists, diags, record, list_scalar_view, dims};
  return inf.run(e);
}

namespace {

// Whole-module analysis. Owns the symbol tables being built and threads
// the dimension table through type-spec resolution.
struct ModuleChecker {
  explicit ModuleChecker(CheckedModule& c) : cm(c) {}

  CheckedModule& cm;
  TypingEnv env;
  Dimension time_dim;       // of the enclosing timeloop step, for deqn
  bool in_timeloop = false;

  DiagnosticSink& diags() { return cm.diags; }

  AnnotatedType infer_expr(const ast::Expr& e) {
    return infer(e, env, cm.lists, cm.diags, &cm.expr_types, false, &cm.dims);
  }

  Dimension resolve_dim(const std::optional<ast::DimExpr>& de) {
    if (!de) return {};
    auto d = cm.dims.expand(*de, cm.diags);
    return d.value_or(Dimension{});
  }

  static LatticeType base_type(ast::TypeSpec::Base b) {
    switch (b) {
      case ast::TypeSpec::Real: return LatticeType(LT::Real);
      case ast::TypeSpec::Int: return LatticeType(LT::Integer);
      case ast::TypeSpec::Bool: return LatticeType(LT::Boolean);
      case ast::TypeSpec::String: return LatticeType(LT::String);
      default: return LatticeType(LT::Error);
    }
  }

  // Scalar / vector / matrix variable or parameter type.
  AnnotatedType resolve_type(const ast::TypeSpec& ts) {
    Dimension d = resolve_dim(ts.dim);
    switch (ts.base) {
      case ast::TypeSpec::Vector:
        return {LatticeType::vector_of(base_type(ts.element)), d};
      case ast::TypeSpec::Matrix:
        return {LatticeType::matrix_of(base_type(ts.element)), d};
      default:
        return {base_type(ts.base), d};
    }
  }

  void check_initializer(const ast::Expr& init, const AnnotatedType& declared,
                         const char* what, const std::string& name) {
    AnnotatedType v = infer_expr(init);
    if (v.is_error()) return;  // already diagnosed at the inner node
    if (!types::subtype(v.type, declared.type)) {
      diags().report("E3010", init.span,
                     std::string(what) + " '" + name + "' declared as " +
                         declared.type.to_string() + " but initialized with " +
                         v.type.to_string());
      return;
    }
    if (v.dimension != declared.dimension)
      diags().report("E4001", init.span,
                     std::string(what) + " '" + name + "' has dimension " +
                         declared.dimension.to_string() +
                         " but its initializer has " +
                         v.dimension.to_string());
  }

  void bind_or_redecl(const std::string& name, AnnotatedType t, Span span) {
    if (!env.bind(name, std::move(t)))
      diags().report("E3006", span, "'" + name + "' is already declared in "
                                    "this scope");
  }

  void check_body(const std::vector<ast::StmtPtr>& body) {
    env.push_scope();
    for (const auto& s : body) check_stmt(*s);
    env.pop_scope();
  }

  void check_stmt(const ast::Stmt& s) {
    using ast::StmtKind;
    switch (s.kind) {
      case StmtKind::VarDecl: {
        AnnotatedType t = resolve_type(s.decl_type);
        bind_or_redecl(s.name, t, s.span);
        break;
      }
      case StmtKind::VarInit: {
        AnnotatedType t = resolve_type(s.decl_type);
        check_initializer(*s.init, t, "variable", s.name);
        // Recovery: the variable keeps its declared type either way.
        bind_or_redecl(s.name, t, s.span);
        break;
      }
      case StmtKind::Assign: {
        AnnotatedType target = infer_expr(*s.target);
        AnnotatedType value = infer_expr(*s.value);
        if (s.target->kind != ast::ExprKind::VarAccess &&
            s.target->kind != ast::ExprKind::ParticleAccess &&
            s.target->kind != ast::ExprKind::ArrayAccess) {
          diags().report("E3008", s.target->span,
                         "left-hand side of '=' is not assignable");
          break;
        }
        if (target.is_error() || value.is_error()) break;
        if (!types::subtype(value.type, target.type)) {
          diags().report("E3008", s.span,
                         "cannot assign " + value.type.to_string() + " to " +
                             target.type.to_string());
          break;
        }
        if (value.dimension != target.dimension)
          diags().report("E4001", s.span,
                         "cannot assign dimension " +
                             value.dimension.to_string() +
                             " to a target of dimension " +
                             target.dimension.to_string());
        break;
      }
      case StmtKind::ExprStmt:
        infer_expr(*s.expr);
        break;
      case StmtKind::IfElse: {
        AnnotatedType c = infer_expr(*s.cond);
        if (!c.is_error() && !c.type.is(LT::Boolean))
          diags().report("E3009", s.cond->span,
                         "condition must be Boolean, got " +
                             c.type.to_string());
        check_body(s.body);
        check_body(s.else_body);
        break;
      }
      case StmtKind::Foreach:
        check_foreach(s);
        break;
      case StmtKind::Timeloop:
        check_timeloop(s);
        break;
      case StmtKind::DeqnBlock:
        check_deqn(s);
        break;
      case StmtKind::CreateTopology:
        cm.topologies[s.name] = s.boundary;
        bind_or_redecl(s.name, {LatticeType(LT::Topology), {}}, s.span);
        break;
      case StmtKind::CreateParticles:
        check_create_particles(s);
        break;
      case StmtKind::CreateNeighlist:
        check_create_neighlist(s);
        break;
      case StmtKind::ApplyBc:
      case StmtKind::UpdateNeighlist:
      case StmtKind::IoWrite:
      case StmtKind::LoadData:
        check_list_ref(s);
        break;
    }
  }

  void check_list_ref(const ast::Stmt& s) {
    if (s.kind == ast::StmtKind::UpdateNeighlist) {
      if (!cm.neighbor_lists.count(s.name))
        diags().report("E3003", s.span,
                       "unknown neighbor list '" + s.name + "'");
      return;
    }
    if (!cm.lists.count(s.name))
      diags().report("E3003", s.span,
                     "unknown particle list '" + s.name + "'");
    if (s.kind == ast::StmtKind::LoadData) {
      auto it = cm.lists.find(s.name);
      if (it == cm.lists.end()) return;
      for (const auto& col : s.columns) {
        std::string base = col.substr(0, col.find('['));
        if (base == "x" || base == "y" || base == "z" || base == "pos")
          continue;
        if (!it->second.find(base))
          diags().report("E3004", s.span,
                         "particle list '" + s.name + "' has no property '" +
                             base + "'");
      }
    }
  }

  void check_foreach(const ast::Stmt& s) {
    env.push_scope();
    if (s.over_neighbors) {
      auto nl = cm.neighbor_lists.find(s.source_list);
      if (nl == cm.neighbor_lists.end()) {
        diags().report("E3003", s.span,
                       "unknown neighbor list '" + s.source_list + "'");
        env.bind(s.loop_var, AnnotatedType::error());
      } else {
        const AnnotatedType* p = env.lookup(s.neighbor_of);
        if (!p || !p->type.is(LT::Particle))
          diags().report("E3003", s.span,
                         "'" + s.neighbor_of +
                             "' is not a particle variable");
        env.bind(s.loop_var,
                 {LatticeType::particle_of(nl->second), {}});
      }
    } else {
      if (!cm.lists.count(s.source_list)) {
        diags().report("E3003", s.span,
                       "unknown particle list '" + s.source_list + "'");
        env.bind(s.loop_var, AnnotatedType::error());
      } else {
        env.bind(s.loop_var,
                 {LatticeType::particle_of(s.source_list), {}});
      }
    }
    for (const auto& st : s.body) check_stmt(*st);
    env.pop_scope();
  }

  void check_timeloop(const ast::Stmt& s) {
    AnnotatedType start = infer_expr(*s.time_start);
    AnnotatedType end = infer_expr(*s.time_end);
    AnnotatedType step = infer_expr(*s.time_step);
    for (const auto* b : {&start, &end, &step}) {
      if (!b->is_error() && !b->type.is_scalar_numeric())
        diags().report("E3001", s.span,
                       "timeloop bounds must be numeric, got " +
                           b->type.to_string());
    }
    if (!start.is_error() && !end.is_error() && !step.is_error() &&
        (start.dimension != end.dimension ||
         start.dimension != step.dimension))
      diags().report("E4001", s.span,
                     "timeloop bounds and step must share one dimension");
    env.push_scope();
    env.bind(s.loop_var, {LatticeType(LT::Real), step.dimension});
    Dimension saved = time_dim;
    bool was = in_timeloop;
    time_dim = step.dimension;
    in_timeloop = true;
    for (const auto& st : s.body) check_stmt(*st);
    time_dim = saved;
    in_timeloop = was;
    env.pop_scope();
  }

  void check_deqn(const ast::Stmt& s) {
    for (const auto& eq : s.equations) {
      auto lit = cm.lists.find(eq.list_name);
      if (lit == cm.lists.end()) {
        diags().report("E3003", eq.span,
                       "unknown particle list '" + eq.list_name + "'");
        continue;
      }
      const PropInfo* prop = lit->second.find(eq.field_name);
      if (!prop) {
        diags().report("E3004", eq.span,
                       "particle list '" + eq.list_name +
                           "' has no property '" + eq.field_name + "'");
        continue;
      }
      // Equations are implicitly per particle: list->f reads as a value.
      AnnotatedType rhs = infer(*eq.rhs, env, cm.lists, cm.diags,
                                &cm.expr_types, true, &cm.dims);
      if (rhs.is_error()) continue;
      LatticeType expected_type = prop->access_type();
      if (!types::subtype(rhs.type, expected_type)) {
        diags().report("E3001", eq.rhs->span,
                       "right-hand side of d_dt(" + eq.list_name + "->" +
                           eq.field_name + ") has type " +
                           rhs.type.to_string() + ", expected " +
                           expected_type.to_string());
        continue;
      }
      Dimension expected = prop->dimension.divide(time_dim);
      if (rhs.dimension != expected)
        diags().report("E4001", eq.rhs->span,
                       "d_dt(" + eq.list_name + "->" + eq.field_name +
                           ") requires dimension " + expected.to_string() +
                           ", right-hand side has " +
                           rhs.dimension.to_string());
    }
  }

  void check_create_particles(const ast::Stmt& s) {
    ListInfo info;
    info.topology = s.topology;
    if (!cm.topologies.count(s.topology))
      diags().report("E3003", s.span,
                     "unknown topology '" + s.topology + "'");
    switch (s.init_spec.kind) {
      case ast::ParticleInitSpec::Grid:
        info.space_dim = static_cast<int>(s.init_spec.grid_counts.size());
        for (const auto& c : s.init_spec.grid_counts) {
          AnnotatedType t = infer_expr(*c);
          if (!t.is_error() && !t.type.is(LT::Integer))
            diags().report("E3001", c->span,
                           "grid count must be an integer, got " +
                               t.type.to_string());
        }
        break;
      case ast::ParticleInitSpec::Load: {
        int coords = 0;
        for (const auto& col : s.init_spec.columns)
          if (col == "x" || col == "y" || col == "z") ++coords;
        info.space_dim = coords > 0 ? coords : 2;
        break;
      }
      case ast::ParticleInitSpec::Random: {
        info.space_dim = 2;
        AnnotatedType n = infer_expr(*s.init_spec.random_count);
        if (!n.is_error() && !n.type.is(LT::Integer))
          diags().report("E3001", s.init_spec.random_count->span,
                         "particle count must be an integer");
        if (s.init_spec.random_seed) infer_expr(*s.init_spec.random_seed);
        break;
      }
    }
    if (info.space_dim < 1 || info.space_dim > 3)
      diags().report("E3001", s.span,
                     "particle lists must live in 1, 2 or 3 dimensions");

    for (const auto& p : s.props) {
      PropInfo pi;
      pi.dimension = resolve_dim(p.type.dim);
      pi.init = p.init.get();
      if (p.type.base == ast::TypeSpec::Vector) {
        pi.element_type = base_type(p.type.element);
        pi.arity = info.space_dim;
      } else {
        pi.element_type = base_type(p.type.base);
        pi.arity = p.type.arity;
      }
      if (!pi.element_type.is_scalar_numeric()) {
        diags().report("E3001", p.span,
                       "particle properties must be numeric");
        continue;
      }
      if (pi.arity < 1) {
        diags().report("E3001", p.span, "property arity must be >= 1");
        continue;
      }
      if (info.props.count(p.name)) {
        diags().report("E3006", p.span,
                       "property '" + p.name + "' is already declared");
        continue;
      }
      if (p.name == "pos") {
        // Explicit position declaration: overrides the builtin's type and
        // dimension but still names the particle coordinates.
        if (pi.arity != info.space_dim || !pi.element_type.is(LT::Real))
          diags().report("E3001", p.span,
                         "'pos' must be a real vector matching the spatial "
                         "dimension");
        info.position_dim = pi.dimension;
      }
      info.prop_order.push_back(p.name);
      info.props.emplace(p.name, pi);
    }
    // Initializer checks need the list in scope so p->pos etc. resolve.
    cm.lists[s.name] = info;
    for (const auto& p : s.props) {
      if (!p.init) continue;
      const PropInfo& pi = cm.lists[s.name].props.at(p.name);
      AnnotatedType declared{pi.access_type(), pi.dimension};
      check_initializer(*p.init, declared, "property", p.name);
    }
    bind_or_redecl(s.name, {LatticeType::particle_list_of(s.name), {}},
                   s.span);
  }

  void check_create_neighlist(const ast::Stmt& s) {
    auto lit = cm.lists.find(s.on_list);
    if (lit == cm.lists.end()) {
      diags().report("E3003", s.span,
                     "unknown particle list '" + s.on_list + "'");
      return;
    }
    AnnotatedType c = infer_expr(*s.cutoff);
    if (!c.is_error()) {
      if (!c.type.is_scalar_numeric())
        diags().report("E3001", s.cutoff->span,
                       "cutoff must be numeric, got " + c.type.to_string());
      else if (c.dimension != lit->second.position_dim)
        diags().report("E4001", s.cutoff->span,
                       "cutoff has dimension " + c.dimension.to_string() +
                           " but positions have " +
                           lit->second.position_dim.to_string());
    }
    cm.neighbor_lists[s.name] = s.on_list;
    bind_or_redecl(s.name, {LatticeType(LT::NeighborList), {}}, s.span);
  }

  void run(const ast::SourceModule& m, const std::string& base_dir) {
    for (const auto& path : m.dimension_imports) {
      std::string full = path;
      if (!path.empty() && path[0] != '/' && !base_dir.empty())
        full = base_dir + "/" + path;
      load_dim_file(full, cm.dims, cm.diags);
    }
    for (const auto& d : m.dimensions) cm.dims.declare(d, cm.diags);

    for (const auto& p : m.params) {
      AnnotatedType t = resolve_type(p.type);
      if (p.default_value) check_initializer(*p.default_value, t, "parameter",
                                             p.name);
      bind_or_redecl(p.name, t, p.span);
    }

    for (const auto& s : m.statements) check_stmt(*s);
  }
};

}  // namespace

CheckedModule check_module(const ast::SourceModule& module,
                           const std::string& base_dir) {
  CheckedModule cm;
  cm.module = &module;
  for (auto& d : ast::validate_context(module)) cm.diags.all().push_back(d);
  ModuleChecker mc{cm};
  mc.run(module, base_dir);
  cm.diags.sort_by_span();
  return cm;
}

}  // namespace pm::check
