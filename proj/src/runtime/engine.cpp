#include "pm/runtime/engine.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include "pm/runtime/cell_list.hpp"
#include "pm/runtime/error.hpp"
#include "pm/runtime/integrate.hpp"
#include "pm/runtime/ops.hpp"
#include "pm/runtime/rng.hpp"

namespace pm::rt {

namespace {

namespace fs = std::filesystem;
using ast::Expr;
using ast::ExprKind;
using ast::Stmt;
using lower::Step;

struct Value {
  enum Kind { Scalar, Boolean, Vec } kind = Scalar;
  double s = 0.0;
  bool b = false;
  std::vector<double> v;

  static Value scalar(double x) { return {Scalar, x, false, {}}; }
  static Value boolean(bool x) { return {Boolean, 0.0, x, {}}; }
  static Value vec(std::vector<double> x) {
    return {Vec, 0.0, false, std::move(x)};
  }
};

struct ParticleRef {
  std::string list;
  size_t index = 0;
};

// --- compiled per-particle RHS ---------------------------------------------

struct FieldRef {
  const std::vector<double>* vec = nullptr;
  int arity = 1;
  int comp = 0;
};

struct Instr {
  enum Op { Const, Time, Param, Field, Slot, Add, Sub, Mul, Div, Pow, Neg, Sqrt };
  Op op;
  double c = 0.0;
  int a = -1;  // param / field / slot index
};

struct CompiledRhs {
  bool ok = false;
  std::vector<std::string> param_names;
  std::vector<FieldRef> fields;
  std::vector<std::vector<Instr>> derivs;
};

class Engine {
public:
  Engine(const lower::ExecutionPlan& plan, const RunOptions& opts)
      : plan_(plan), cm_(*plan.checked), opts_(opts), rng_(opts.seed) {
    scopes_.emplace_back();
  }

  RunResult run() {
    auto t0 = std::chrono::steady_clock::now();
    bind_params();
    exec_steps(plan_.steps);
    record_phase("total", t0);
    if (opts_.write_stats) write_stats();
    result_.lists = std::move(lists_);
    return std::move(result_);
  }

private:
  const lower::ExecutionPlan& plan_;
  const check::CheckedModule& cm_;
  const RunOptions& opts_;
  RunResult result_;
  SplitMix64 rng_;

  std::vector<std::map<std::string, Value>> scopes_;
  std::map<std::string, ParticleRef> particle_vars_;
  std::map<std::string, ParticleSet> lists_;
  struct NlEntry {
    std::unique_ptr<CellList> cl;
    std::string on;
  };
  std::map<std::string, NlEntry> nlists_;
  std::vector<std::string> nl_order_;
  std::map<std::string, std::unique_ptr<PseOperator>> pse_;
  std::map<std::string, std::string> topologies_;
  std::map<int, CompiledRhs> rhs_cache_;

  long step_index_ = -1;
  double time_now_ = 0.0;
  std::string timeloop_var_;

  // --- utilities -----------------------------------------------------------

  [[noreturn]] void fail(const std::string& code, const std::string& msg,
                         Span span = {}) {
    throw RuntimeError(code, msg, span, step_index_);
  }

  void record_phase(const std::string& phase,
                    std::chrono::steady_clock::time_point t0) {
    auto dt = std::chrono::steady_clock::now() - t0;
    result_.phase_seconds[phase] +=
        std::chrono::duration<double>(dt).count();
  }

  Value* lookup(const std::string& name) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  void bind(const std::string& name, Value v) {
    scopes_.back()[name] = std::move(v);
  }

  ParticleSet& list(const std::string& name, Span span = {}) {
    auto it = lists_.find(name);
    if (it == lists_.end())
      fail("E6001", "unknown particle list '" + name + "'", span);
    return it->second;
  }

  double eval_scalar(const Expr& e) {
    Value v = eval(e);
    if (v.kind != Value::Scalar)
      fail("E6007", "expected a numeric value", e.span);
    return v.s;
  }

  // --- params --------------------------------------------------------------

  void bind_params() {
    for (const auto& p : plan_.module->params) {
      double v;
      auto ov = opts_.params.find(p.name);
      if (ov != opts_.params.end()) {
        v = ov->second;
      } else if (p.default_value) {
        v = eval_scalar(*p.default_value);
      } else {
        fail("E6006", "parameter '" + p.name + "' has no value", p.span);
      }
      if (p.range && (v < p.range->first || v > p.range->second))
        fail("E6006",
             "parameter '" + p.name + "' = " + std::to_string(v) +
                 " outside declared range [" + std::to_string(p.range->first) +
                 ", " + std::to_string(p.range->second) + "]",
             p.span);
      if (p.type.base == ast::TypeSpec::Int) v = std::nearbyint(v);
      bind(p.name, Value::scalar(v));
    }
    for (const auto& [name, _] : opts_.params)
      if (![&] {
            for (const auto& p : plan_.module->params)
              if (p.name == name) return true;
            return false;
          }())
        fail("E6006", "override for undeclared parameter '" + name + "'");
  }

  // --- expression evaluation ----------------------------------------------

  Value eval(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Literal:
        switch (e.lit_kind) {
          case ast::LiteralKind::Integer:
            return Value::scalar(static_cast<double>(e.int_value));
          case ast::LiteralKind::Real:
            return Value::scalar(e.real_value);
          case ast::LiteralKind::Boolean:
            return Value::boolean(e.bool_value);
          case ast::LiteralKind::String:
            fail("E6007", "string value in a numeric context", e.span);
        }
        break;
      case ExprKind::Paren:
        return eval(*e.child(0));
      case ExprKind::VarAccess: {
        if (e.name == "random") return Value::scalar(rng_.next_double());
        if (Value* v = lookup(e.name)) return *v;
        fail("E6007", "unbound variable '" + e.name + "'", e.span);
      }
      case ExprKind::Unary: {
        Value c = eval(*e.child(0));
        switch (e.un_op) {
          case ast::UnOp::Neg:
            if (c.kind == Value::Vec) {
              for (double& x : c.v) x = -x;
              return c;
            }
            return Value::scalar(-c.s);
          case ast::UnOp::Not:
            return Value::boolean(!c.b);
          case ast::UnOp::Sqrt:
            return Value::scalar(std::sqrt(c.s));
        }
        break;
      }
      case ExprKind::Binary:
        return eval_binary(e);
      case ExprKind::ParticleAccess: {
        const Expr& obj = *e.child(0);
        if (obj.kind != ExprKind::VarAccess)
          fail("E6007", "invalid particle access", e.span);
        auto it = particle_vars_.find(obj.name);
        if (it == particle_vars_.end())
          fail("E6007", "'" + obj.name + "' is not a particle variable",
               e.span);
        ParticleSet& ps = list(it->second.list, e.span);
        size_t p = it->second.index;
        Property* prop = ps.find(e.name);
        if (!prop) {
          if (e.name == "pos") {
            const double* x = ps.position(p);
            return Value::vec(std::vector<double>(x, x + ps.dim()));
          }
          fail("E6007", "unknown property '" + e.name + "'", e.span);
        }
        if (prop->arity == 1)
          return Value::scalar(prop->data[p]);
        auto base = prop->data.begin() + p * prop->arity;
        return Value::vec(std::vector<double>(base, base + prop->arity));
      }
      case ExprKind::ArrayAccess: {
        Value base = eval(*e.child(0));
        double iv = eval_scalar(*e.child(1));
        long i = std::lround(iv);
        if (base.kind != Value::Vec)
          fail("E6007", "indexing a non-vector value", e.span);
        if (i < 0 || static_cast<size_t>(i) >= base.v.size())
          fail("E6007", "index " + std::to_string(i) + " out of range",
               e.span);
        return Value::scalar(base.v[i]);
      }
      case ExprKind::DiffOpApply:
        fail("E6007", "differential operator outside an integrated equation",
             e.span);
    }
    fail("E6007", "unsupported expression", e.span);
  }

  Value eval_binary(const Expr& e) {
    using ast::BinOp;
    BinOp op = e.bin_op;
    if (op == BinOp::And) {
      Value l = eval(*e.child(0));
      if (!l.b) return Value::boolean(false);
      return Value::boolean(eval(*e.child(1)).b);
    }
    if (op == BinOp::Or) {
      Value l = eval(*e.child(0));
      if (l.b) return Value::boolean(true);
      return Value::boolean(eval(*e.child(1)).b);
    }
    Value l = eval(*e.child(0));
    Value r = eval(*e.child(1));
    if (ast::is_relational(op) || op == BinOp::Eq || op == BinOp::Ne) {
      double a = l.s, b = r.s;
      switch (op) {
        case BinOp::Eq: return Value::boolean(a == b);
        case BinOp::Ne: return Value::boolean(a != b);
        case BinOp::Lt: return Value::boolean(a < b);
        case BinOp::Gt: return Value::boolean(a > b);
        case BinOp::Le: return Value::boolean(a <= b);
        case BinOp::Ge: return Value::boolean(a >= b);
        default: break;
      }
    }
    // arithmetic
    if (l.kind == Value::Scalar && r.kind == Value::Scalar) {
      switch (op) {
        case BinOp::Add: return Value::scalar(l.s + r.s);
        case BinOp::Sub: return Value::scalar(l.s - r.s);
        case BinOp::Mul: return Value::scalar(l.s * r.s);
        case BinOp::Div:
          if (r.s == 0.0) fail("E6007", "division by zero", e.span);
          return Value::scalar(l.s / r.s);
        case BinOp::Pow: return Value::scalar(std::pow(l.s, r.s));
        default: break;
      }
    }
    if (l.kind == Value::Vec && r.kind == Value::Vec &&
        l.v.size() == r.v.size() && (op == BinOp::Add || op == BinOp::Sub)) {
      for (size_t i = 0; i < l.v.size(); ++i)
        l.v[i] = op == BinOp::Add ? l.v[i] + r.v[i] : l.v[i] - r.v[i];
      return l;
    }
    if (l.kind == Value::Vec && r.kind == Value::Scalar &&
        (op == BinOp::Mul || op == BinOp::Div)) {
      if (op == BinOp::Div && r.s == 0.0)
        fail("E6007", "division by zero", e.span);
      for (double& x : l.v) x = op == BinOp::Mul ? x * r.s : x / r.s;
      return l;
    }
    if (l.kind == Value::Scalar && r.kind == Value::Vec && op == BinOp::Mul) {
      for (double& x : r.v) x *= l.s;
      return r;
    }
    fail("E6007", "invalid operands to binary operator", e.span);
  }

  // --- assignment ----------------------------------------------------------

  void assign(const Expr& target, Value v) {
    switch (target.kind) {
      case ExprKind::VarAccess: {
        if (Value* slot = lookup(target.name)) {
          *slot = std::move(v);
          return;
        }
        fail("E6007", "assignment to unbound variable '" + target.name + "'",
             target.span);
      }
      case ExprKind::ParticleAccess: {
        auto [ps, p, prop, is_pos] = resolve_particle_target(target);
        if (is_pos) {
          for (int ax = 0; ax < ps->dim(); ++ax)
            ps->position(p)[ax] = v.v.at(ax);
          return;
        }
        if (prop->arity == 1) {
          prop->data[p] = v.s;
        } else {
          for (int c = 0; c < prop->arity; ++c)
            prop->data[p * prop->arity + c] = v.v.at(c);
        }
        return;
      }
      case ExprKind::ArrayAccess: {
        long i = std::lround(eval_scalar(*target.child(1)));
        const Expr& base = *target.child(0);
        if (base.kind == ExprKind::ParticleAccess) {
          auto [ps, p, prop, is_pos] = resolve_particle_target(base);
          if (is_pos) {
            if (i < 0 || i >= ps->dim())
              fail("E6007", "position index out of range", target.span);
            ps->position(p)[i] = v.s;
            return;
          }
          if (i < 0 || i >= prop->arity)
            fail("E6007", "component index out of range", target.span);
          prop->data[p * prop->arity + i] = v.s;
          return;
        }
        if (base.kind == ExprKind::VarAccess) {
          Value* slot = lookup(base.name);
          if (!slot || slot->kind != Value::Vec)
            fail("E6007", "indexing a non-vector variable", target.span);
          if (i < 0 || static_cast<size_t>(i) >= slot->v.size())
            fail("E6007", "index out of range", target.span);
          slot->v[i] = v.s;
          return;
        }
        break;
      }
      default:
        break;
    }
    fail("E6007", "unassignable expression", target.span);
  }

  std::tuple<ParticleSet*, size_t, Property*, bool> resolve_particle_target(
      const Expr& pa) {
    const Expr& obj = *pa.child(0);
    auto it = particle_vars_.find(obj.name);
    if (obj.kind != ExprKind::VarAccess || it == particle_vars_.end())
      fail("E6007", "invalid particle access", pa.span);
    ParticleSet& ps = list(it->second.list, pa.span);
    Property* prop = ps.find(pa.name);
    if (!prop && pa.name != "pos")
      fail("E6007", "unknown property '" + pa.name + "'", pa.span);
    return {&ps, it->second.index, prop, prop == nullptr};
  }

  // --- statements (AST level, used inside foreach bodies) ------------------

  void exec_ast_body(const std::vector<ast::StmtPtr>& body) {
    for (const auto& s : body) exec_ast_stmt(*s);
  }

  void exec_ast_stmt(const Stmt& s) {
    switch (s.kind) {
      case ast::StmtKind::VarDecl:
        bind(s.name, default_value(s.decl_type));
        return;
      case ast::StmtKind::VarInit:
        bind(s.name, eval(*s.init));
        return;
      case ast::StmtKind::Assign:
        assign(*s.target, eval(*s.value));
        return;
      case ast::StmtKind::ExprStmt:
        eval(*s.expr);
        return;
      case ast::StmtKind::IfElse: {
        Value c = eval(*s.cond);
        scopes_.emplace_back();
        exec_ast_body(c.b ? s.body : s.else_body);
        scopes_.pop_back();
        return;
      }
      case ast::StmtKind::Foreach:
        exec_foreach(s);
        return;
      case ast::StmtKind::ApplyBc:
        apply_bc(list(s.name, s.span));
        return;
      case ast::StmtKind::UpdateNeighlist:
        remap(s.name, s.span);
        return;
      default:
        fail("E6007", "statement not executable in this context", s.span);
    }
  }

  Value default_value(const ast::TypeSpec& t) {
    if (t.base == ast::TypeSpec::Vector)
      return Value::vec(std::vector<double>(std::max(t.arity, 2), 0.0));
    if (t.base == ast::TypeSpec::Bool) return Value::boolean(false);
    return Value::scalar(0.0);
  }

  void exec_foreach(const Stmt& s) {
    auto t0 = std::chrono::steady_clock::now();
    if (!s.over_neighbors) {
      ParticleSet& ps = list(s.source_list, s.span);
      for (size_t p = 0; p < ps.count; ++p) {
        particle_vars_[s.loop_var] = {s.source_list, p};
        scopes_.emplace_back();
        exec_ast_body(s.body);
        scopes_.pop_back();
      }
      particle_vars_.erase(s.loop_var);
    } else {
      auto it = nlists_.find(s.source_list);
      if (it == nlists_.end())
        fail("E6001", "unknown neighbor list '" + s.source_list + "'", s.span);
      auto anchor = particle_vars_.find(s.neighbor_of);
      if (anchor == particle_vars_.end())
        fail("E6007", "'" + s.neighbor_of + "' is not a particle variable",
             s.span);
      const std::string& on = it->second.on;
      for (uint32_t q : it->second.cl->neighbors(anchor->second.index)) {
        particle_vars_[s.loop_var] = {on, q};
        scopes_.emplace_back();
        exec_ast_body(s.body);
        scopes_.pop_back();
      }
      particle_vars_.erase(s.loop_var);
    }
    record_phase("kernel", t0);
  }

  // --- plan steps ----------------------------------------------------------

  void exec_steps(const std::vector<Step>& steps) {
    for (const Step& s : steps) {
      try {
        exec_step(s);
      } catch (RuntimeError& err) {
        err.set_context(s.stmt ? s.stmt->span : Span{}, step_index_);
        throw;
      }
    }
  }

  void exec_step(const Step& s) {
    switch (s.kind) {
      case Step::CreateTopology:
        topologies_[s.name] = s.stmt->boundary;
        return;
      case Step::CreateParticles:
        create_particles(s);
        return;
      case Step::CreateNeighlist: {
        auto t0 = std::chrono::steady_clock::now();
        double cutoff = eval_scalar(*s.stmt->cutoff);
        NlEntry entry;
        entry.on = s.aux;
        entry.cl = std::make_unique<CellList>(list(s.aux, s.stmt->span), cutoff);
        nlists_[s.name] = std::move(entry);
        nl_order_.push_back(s.name);
        record_phase("neighbors", t0);
        return;
      }
      case Step::Discretize: {
        auto t0 = std::chrono::steady_clock::now();
        build_pse(s.name);
        record_phase("discretize", t0);
        return;
      }
      case Step::Timeloop:
        exec_timeloop(s);
        return;
      case Step::RhsIntegrate:
        exec_rhs_integrate(s);
        return;
      case Step::Foreach:
        exec_foreach(*s.stmt);
        return;
      case Step::IfElse: {
        Value c = eval(*s.stmt->cond);
        scopes_.emplace_back();
        exec_steps(c.b ? s.body : s.else_body);
        scopes_.pop_back();
        return;
      }
      case Step::ApplyBc:
        apply_bc(list(s.name));
        return;
      case Step::RemapNeighbors:
        remap(s.name, s.stmt ? s.stmt->span : Span{});
        return;
      case Step::IoWrite: {
        if (step_index_ >= 0 && opts_.io_every > 0 &&
            step_index_ % opts_.io_every != 0)
          return;
        auto t0 = std::chrono::steady_clock::now();
        if (opts_.write_snapshots) write_snapshot(s.name);
        record_phase("io", t0);
        return;
      }
      case Step::LoadData: {
        ParticleSet& ps = list(s.name, s.stmt->span);
        load_columns(ps, resolve_path(s.stmt->file), s.stmt->columns);
        apply_bc(ps);
        invalidate_geometry(s.name);
        return;
      }
      case Step::VarDecl:
      case Step::VarInit:
      case Step::Assign:
      case Step::ExprStmt:
        exec_ast_stmt(*s.stmt);
        return;
    }
  }

  std::string resolve_path(const std::string& file) {
    fs::path p(file);
    if (p.is_absolute()) return file;
    return (fs::path(opts_.base_dir) / p).string();
  }

  void invalidate_geometry(const std::string& listname) {
    for (const auto& nl : nl_order_)
      if (nlists_[nl].on == listname) nlists_[nl].cl->rebuild(list(listname));
    pse_.erase(listname);
  }

  void create_particles(const Step& s) {
    auto t0 = std::chrono::steady_clock::now();
    const Stmt& st = *s.stmt;
    auto li = cm_.lists.find(s.name);
    if (li == cm_.lists.end()) fail("E6001", "unknown list", st.span);
    const check::ListInfo& info = li->second;

    DomainBox box;
    box.dim = info.space_dim;
    bool periodic = topologies_[st.topology] == "periodic";
    for (int ax = 0; ax < box.dim; ++ax) box.periodic[ax] = periodic;

    ParticleSet ps;
    switch (st.init_spec.kind) {
      case ast::ParticleInitSpec::Grid: {
        std::vector<long> counts;
        for (const auto& c : st.init_spec.grid_counts)
          counts.push_back(std::lround(eval_scalar(*c)));
        ps = create_grid(box, counts);
        break;
      }
      case ast::ParticleInitSpec::Random: {
        long n = std::lround(eval_scalar(*st.init_spec.random_count));
        long seed = std::lround(eval_scalar(*st.init_spec.random_seed));
        if (n < 0) fail("E6001", "negative particle count", st.span);
        ps = create_random(box, static_cast<size_t>(n),
                           static_cast<uint64_t>(seed) ^ opts_.seed);
        break;
      }
      case ast::ParticleInitSpec::Load: {
        ps.box = box;
        break;  // properties added below, then loaded
      }
    }

    for (const std::string& pname : info.prop_order) {
      if (pname == "pos") continue;  // positions live in ps.pos
      const check::PropInfo& pi = *info.find(pname);
      ps.add_prop(pname, pi.arity);
    }

    if (st.init_spec.kind == ast::ParticleInitSpec::Load) {
      load_columns(ps, resolve_path(st.init_spec.file), st.init_spec.columns);
      // Quasi-uniform spacing estimate for discretized operators.
      if (ps.count > 0)
        ps.spacing = ps.box.min_edge() /
                     std::pow(static_cast<double>(ps.count), 1.0 / ps.box.dim);
    }

    // Uniform property initializers, evaluated per particle (ascending
    // order so `random` draws are reproducible). Properties populated
    // from loaded columns keep the file's values.
    std::set<std::string> loaded;
    if (st.init_spec.kind == ast::ParticleInitSpec::Load)
      for (const std::string& col : st.init_spec.columns)
        loaded.insert(col.substr(0, col.find('[')));
    for (const auto& pd : st.props) {
      if (!pd.init || loaded.count(pd.name)) continue;
      Property& prop = *ps.find(pd.name);
      for (size_t p = 0; p < ps.count; ++p) {
        Value v = eval(*pd.init);
        if (prop.arity == 1) {
          prop.data[p] = v.s;
        } else if (v.kind == Value::Vec) {
          for (int c = 0; c < prop.arity; ++c)
            prop.data[p * prop.arity + c] = v.v.at(c);
        } else {
          for (int c = 0; c < prop.arity; ++c)
            prop.data[p * prop.arity + c] = v.s;
        }
      }
    }

    apply_bc(ps);
    lists_[s.name] = std::move(ps);
    record_phase("setup", t0);
  }

  void remap(const std::string& nl, Span span) {
    auto t0 = std::chrono::steady_clock::now();
    auto it = nlists_.find(nl);
    if (it == nlists_.end())
      fail("E6001", "unknown neighbor list '" + nl + "'", span);
    it->second.cl->rebuild(list(it->second.on));
    pse_.erase(it->second.on);
    record_phase("neighbors", t0);
  }

  const CellList* cell_list_for(const std::string& listname) {
    for (const auto& nl : nl_order_)
      if (nlists_[nl].on == listname) return nlists_[nl].cl.get();
    return nullptr;
  }

  PseOperator& build_pse(const std::string& listname) {
    auto it = pse_.find(listname);
    if (it != pse_.end()) return *it->second;
    const CellList* cl = cell_list_for(listname);
    if (!cl)
      fail("E6001",
           "no neighbor list on '" + listname + "' for operator discretization");
    ParticleSet& ps = list(listname);
    if (ps.spacing <= 0.0)
      fail("E6001", "cannot estimate particle spacing for '" + listname + "'");
    auto op = std::make_unique<PseOperator>(ps, *cl, ps.spacing);
    PseOperator& ref = *op;
    pse_[listname] = std::move(op);
    return ref;
  }

  // --- timeloop and integration --------------------------------------------

  void exec_timeloop(const Step& s) {
    const Stmt& st = *s.stmt;
    double t0 = eval_scalar(*st.time_start);
    double t1 = eval_scalar(*st.time_end);
    double dt = eval_scalar(*st.time_step);
    if (dt <= 0.0) fail("E6001", "timeloop step must be positive", st.span);
    long nsteps = std::llround((t1 - t0) / dt);
    timeloop_var_ = st.loop_var;
    current_dt_ = dt;
    scopes_.emplace_back();
    bind(st.loop_var, Value::scalar(t0));
    for (long i = 0; i < nsteps; ++i) {
      step_index_ = i;
      time_now_ = t0 + static_cast<double>(i) * dt;
      *lookup(st.loop_var) = Value::scalar(time_now_);
      exec_steps(s.body);
    }
    scopes_.pop_back();
    step_index_ = -1;
    timeloop_var_.clear();
    current_dt_ = 0.0;
    result_.steps_executed += nsteps;
  }

  CompiledRhs& compiled_rhs(int index, const lower::RhsProgram& rhs,
                            ParticleSet& ps) {
    auto it = rhs_cache_.find(index);
    if (it != rhs_cache_.end()) return it->second;
    CompiledRhs& c = rhs_cache_[index];
    c.ok = true;
    for (const auto& d : rhs.derivatives) {
      const Property* wp = ps.find(d.field);
      if (!wp || wp->arity != 1) {
        c.ok = false;
        break;
      }
      std::vector<Instr> code;
      if (!compile_expr(*d.rhs, rhs, ps, c, code)) {
        c.ok = false;
        break;
      }
      c.derivs.push_back(std::move(code));
    }
    if (!c.ok) c.derivs.clear();
    return c;
  }

  bool compile_expr(const Expr& e, const lower::RhsProgram& rhs,
                    ParticleSet& ps, CompiledRhs& c,
                    std::vector<Instr>& out) {
    switch (e.kind) {
      case ExprKind::Literal:
        if (e.lit_kind == ast::LiteralKind::Integer)
          out.push_back({Instr::Const, static_cast<double>(e.int_value)});
        else if (e.lit_kind == ast::LiteralKind::Real)
          out.push_back({Instr::Const, e.real_value});
        else
          return false;
        return true;
      case ExprKind::Paren:
        return compile_expr(*e.child(0), rhs, ps, c, out);
      case ExprKind::VarAccess: {
        if (e.name == "random") return false;
        for (size_t i = 0; i < rhs.slots.size(); ++i)
          if (rhs.slots[i].intermediate == e.name) {
            out.push_back({Instr::Slot, 0.0, static_cast<int>(i)});
            return true;
          }
        if (e.name == timeloop_var_) {
          out.push_back({Instr::Time});
          return true;
        }
        Value* v = lookup(e.name);
        if (!v || v->kind != Value::Scalar) return false;
        int idx = -1;
        for (size_t i = 0; i < c.param_names.size(); ++i)
          if (c.param_names[i] == e.name) idx = static_cast<int>(i);
        if (idx < 0) {
          idx = static_cast<int>(c.param_names.size());
          c.param_names.push_back(e.name);
        }
        out.push_back({Instr::Param, 0.0, idx});
        return true;
      }
      case ExprKind::Unary:
        if (!compile_expr(*e.child(0), rhs, ps, c, out)) return false;
        if (e.un_op == ast::UnOp::Neg)
          out.push_back({Instr::Neg});
        else if (e.un_op == ast::UnOp::Sqrt)
          out.push_back({Instr::Sqrt});
        else
          return false;
        return true;
      case ExprKind::Binary: {
        if (!ast::is_arithmetic(e.bin_op)) return false;
        if (!compile_expr(*e.child(0), rhs, ps, c, out)) return false;
        if (!compile_expr(*e.child(1), rhs, ps, c, out)) return false;
        switch (e.bin_op) {
          case ast::BinOp::Add: out.push_back({Instr::Add}); break;
          case ast::BinOp::Sub: out.push_back({Instr::Sub}); break;
          case ast::BinOp::Mul: out.push_back({Instr::Mul}); break;
          case ast::BinOp::Div: out.push_back({Instr::Div}); break;
          case ast::BinOp::Pow: out.push_back({Instr::Pow}); break;
          default: return false;
        }
        return true;
      }
      case ExprKind::ParticleAccess: {
        const Expr& obj = *e.child(0);
        if (obj.kind != ExprKind::VarAccess || obj.name != rhs.loop_var)
          return false;
        Property* prop = ps.find(e.name);
        if (!prop || prop->arity != 1) return false;
        c.fields.push_back({&prop->data, 1, 0});
        out.push_back(
            {Instr::Field, 0.0, static_cast<int>(c.fields.size() - 1)});
        return true;
      }
      case ExprKind::ArrayAccess: {
        const Expr& base = *e.child(0);
        const Expr& idx = *e.child(1);
        if (base.kind != ExprKind::ParticleAccess) return false;
        const Expr& obj = *base.child(0);
        if (obj.kind != ExprKind::VarAccess || obj.name != rhs.loop_var)
          return false;
        if (idx.kind != ExprKind::Literal ||
            idx.lit_kind != ast::LiteralKind::Integer)
          return false;
        int comp = static_cast<int>(idx.int_value);
        if (base.name == "pos" && !ps.find("pos")) {
          if (comp < 0 || comp >= ps.dim()) return false;
          c.fields.push_back({&ps.pos, ps.dim(), comp});
        } else {
          Property* prop = ps.find(base.name);
          if (!prop || comp < 0 || comp >= prop->arity) return false;
          c.fields.push_back({&prop->data, prop->arity, comp});
        }
        out.push_back(
            {Instr::Field, 0.0, static_cast<int>(c.fields.size() - 1)});
        return true;
      }
      case ExprKind::DiffOpApply:
        return false;
    }
    return false;
  }

  static double run_code(const std::vector<Instr>& code, size_t p,
                         double t_stage, const std::vector<double>& params,
                         const std::vector<FieldRef>& fields,
                         const std::vector<std::vector<double>>& slots) {
    double stack[64];
    int sp = 0;
    for (const Instr& ins : code) {
      switch (ins.op) {
        case Instr::Const: stack[sp++] = ins.c; break;
        case Instr::Time: stack[sp++] = t_stage; break;
        case Instr::Param: stack[sp++] = params[ins.a]; break;
        case Instr::Field: {
          const FieldRef& f = fields[ins.a];
          stack[sp++] = (*f.vec)[p * f.arity + f.comp];
          break;
        }
        case Instr::Slot: stack[sp++] = slots[ins.a][p]; break;
        case Instr::Add: --sp; stack[sp - 1] += stack[sp]; break;
        case Instr::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
        case Instr::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
        case Instr::Div: --sp; stack[sp - 1] /= stack[sp]; break;
        case Instr::Pow:
          --sp;
          stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]);
          break;
        case Instr::Neg: stack[sp - 1] = -stack[sp - 1]; break;
        case Instr::Sqrt: stack[sp - 1] = std::sqrt(stack[sp - 1]); break;
      }
    }
    return stack[0];
  }

  void exec_rhs_integrate(const Step& s) {
    auto t_start = std::chrono::steady_clock::now();
    const lower::RhsProgram& rhs = plan_.rhs.at(s.rhs_index);
    ParticleSet& ps = list(rhs.list, s.stmt->span);
    const size_t n = ps.count;

    struct WField {
      Property* prop;
      size_t off;
      int arity;
    };
    std::vector<WField> wfields;
    size_t total = 0;
    for (const auto& d : rhs.derivatives) {
      Property* prop = ps.find(d.field);
      if (!prop)
        fail("E6001", "field '" + d.field + "' missing on '" + rhs.list + "'",
             d.span);
      wfields.push_back({prop, total, prop->arity});
      total += n * prop->arity;
    }

    PseOperator* op = rhs.slots.empty() ? nullptr : &build_pse(rhs.list);
    std::vector<std::vector<double>> slot_buf(rhs.slots.size());

    CompiledRhs& code = compiled_rhs(s.rhs_index, rhs, ps);
    std::vector<double> param_vals(code.param_names.size());

    auto f = [&](double t, const std::vector<double>& y,
                 std::vector<double>& dydt) {
      // Stage state into the property arrays (slots read field values).
      for (const auto& w : wfields)
        std::copy(y.begin() + w.off, y.begin() + w.off + n * w.arity,
                  w.prop->data.begin());
      for (size_t i = 0; i < rhs.slots.size(); ++i)
        op->apply(ps.find(rhs.slots[i].field)->data, slot_buf[i]);

      if (code.ok) {
        for (size_t i = 0; i < code.param_names.size(); ++i) {
          Value* v = lookup(code.param_names[i]);
          param_vals[i] = v ? v->s : 0.0;
        }
        for (size_t k = 0; k < wfields.size(); ++k) {
          const std::vector<Instr>& instrs = code.derivs[k];
          double* out = dydt.data() + wfields[k].off;
          for (size_t p = 0; p < n; ++p)
            out[p] = run_code(instrs, p, t, param_vals, code.fields, slot_buf);
        }
      } else {
        // Generic interpreted path (vector fields, random, ...).
        for (size_t p = 0; p < n; ++p) {
          particle_vars_[rhs.loop_var] = {rhs.list, p};
          scopes_.emplace_back();
          if (!timeloop_var_.empty())
            bind(timeloop_var_, Value::scalar(t));
          for (size_t i = 0; i < rhs.slots.size(); ++i)
            bind(rhs.slots[i].intermediate, Value::scalar(slot_buf[i][p]));
          for (size_t k = 0; k < wfields.size(); ++k) {
            Value v = eval(*rhs.derivatives[k].rhs);
            double* out = dydt.data() + wfields[k].off + p * wfields[k].arity;
            if (wfields[k].arity == 1) {
              out[0] = v.kind == Value::Scalar ? v.s : v.v.at(0);
            } else {
              for (int cidx = 0; cidx < wfields[k].arity; ++cidx)
                out[cidx] = v.v.at(cidx);
            }
          }
          scopes_.pop_back();
        }
        particle_vars_.erase(rhs.loop_var);
      }
    };

    std::vector<double> y(total);
    for (const auto& w : wfields)
      std::copy(w.prop->data.begin(), w.prop->data.end(), y.begin() + w.off);

    double dt = current_dt();
    if (rhs.integrator == "rk4")
      rk4_step(f, y, time_now_, dt);
    else
      euler_step(f, y, time_now_, dt);

    for (const auto& w : wfields)
      std::copy(y.begin() + w.off, y.begin() + w.off + n * w.arity,
                w.prop->data.begin());

    for (size_t k = 0; k < wfields.size(); ++k)
      for (double x : wfields[k].prop->data)
        if (!std::isfinite(x))
          fail("E6005",
               "non-finite value in field '" + rhs.derivatives[k].field +
                   "' at step " + std::to_string(step_index_),
               rhs.derivatives[k].span);
    record_phase("integrate", t_start);
  }

  double current_dt_ = 0.0;
  double current_dt() {
    if (current_dt_ <= 0.0)
      fail("E6001", "integration outside a timeloop");
    return current_dt_;
  }

  // --- output --------------------------------------------------------------

  void write_snapshot(const std::string& listname) {
    ParticleSet& ps = list(listname);
    fs::create_directories(opts_.out_dir);
    long snap = step_index_ >= 0 ? step_index_ : result_.steps_executed;
    std::string path =
        opts_.out_dir + "/" + listname + "_" + std::to_string(snap) + ".csv";
    std::ofstream out(path);
    if (!out) fail("E6002", "cannot write snapshot '" + path + "'");

    out << "step,t,id,x,y";
    if (ps.dim() == 3) out << ",z";
    for (const auto& pname : ps.prop_order) {
      const Property& prop = *ps.find(pname);
      if (prop.arity == 1)
        out << ',' << pname;
      else
        for (int c = 0; c < prop.arity; ++c)
          out << ',' << pname << '[' << c << ']';
    }
    out << '\n';

    char buf[32];
    auto emit = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    };
    for (size_t p = 0; p < ps.count; ++p) {
      out << snap;
      emit(time_now_);
      out << ',' << p;
      for (int ax = 0; ax < ps.dim(); ++ax) emit(ps.position(p)[ax]);
      for (const auto& pname : ps.prop_order) {
        const Property& prop = *ps.find(pname);
        for (int c = 0; c < prop.arity; ++c)
          emit(prop.data[p * prop.arity + c]);
      }
      out << '\n';
    }
    result_.snapshot_files.push_back(path);
  }

  void write_stats() {
    fs::create_directories(opts_.out_dir);
    std::string path = opts_.out_dir + "/stats.json";
    std::ofstream out(path);
    if (!out) fail("E6002", "cannot write stats '" + path + "'");
    out << "{\n";
    bool first = true;
    for (const auto& [phase, secs] : result_.phase_seconds) {
      if (!first) out << ",\n";
      first = false;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", secs);
      out << "  \"" << phase << "\": " << buf;
    }
    out << ",\n  \"steps\": " << result_.steps_executed << "\n}\n";
  }
};

}  // namespace

RunResult run(const lower::ExecutionPlan& plan, const RunOptions& opts) {
  if (!plan.ok)
    throw RuntimeError("E6001", "cannot execute a plan with lowering errors");
  Engine engine(plan, opts);
  return engine.run();
}

}  // namespace pm::rt
