#include "pm/parser.hpp"

#include <charconv>
#include <cstdlib>

namespace pm {

using namespace ast;

namespace {

class Parser {
public:
  Parser(const std::vector<Token>& tokens, DiagnosticSink& diags)
      : toks_(tokens), diags_(diags) {}

  std::unique_ptr<SourceModule> run() {
    auto mod = std::make_unique<SourceModule>();
    skip_newlines();
    mod->span = peek().span;
    if (!accept_keyword("module")) {
      error("expected 'module'");
      return mod;
    }
    mod->name = expect_identifier("module name");
    expect_stmt_end();

    while (!at_end()) {
      skip_newlines();
      if (at_end()) break;
      if (peek().is_keyword("dimensions")) {
        parse_dimensions(*mod);
      } else if (peek().is_keyword("param")) {
        parse_param(*mod);
      } else {
        if (auto s = parse_statement()) mod->statements.push_back(std::move(s));
      }
    }
    return mod;
  }

  ExprPtr parse_expr_entry() {
    skip_newlines();
    return parse_expr();
  }

private:
  // -- token plumbing -------------------------------------------------------
  const Token& peek(size_t off = 0) const {
    size_t i = pos_ + off;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& advance() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().is(TokenKind::EndOfFile); }

  void skip_newlines() {
    while (peek().is(TokenKind::Newline)) advance();
  }

  bool accept_keyword(const char* kw) {
    if (peek().is_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_op(const char* op) {
    if (peek().is_op(op)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_punct(const char* p) {
    if (peek().is_punct(p)) {
      advance();
      return true;
    }
    return false;
  }

  void error(const std::string& msg, const char* code = "E2001") {
    diags_.report(code, peek().span,
                  msg + " (found '" +
                      (peek().is(TokenKind::EndOfFile) ? "<eof>"
                       : peek().is(TokenKind::Newline) ? "<newline>"
                                                       : peek().lexeme) +
                      "')");
  }

  void expect_keyword(const char* kw) {
    if (!accept_keyword(kw)) error(std::string("expected '") + kw + "'");
  }
  void expect_op(const char* op) {
    if (!accept_op(op)) error(std::string("expected '") + op + "'");
  }
  void expect_punct(const char* p) {
    if (!accept_punct(p)) error(std::string("expected '") + p + "'");
  }

  std::string expect_identifier(const char* what) {
    if (peek().is(TokenKind::Identifier)) return advance().lexeme;
    error(std::string("expected ") + what);
    return "<error>";
  }

  void expect_stmt_end() {
    if (peek().is(TokenKind::Newline) || peek().is_punct(";")) {
      advance();
      return;
    }
    if (at_end() || peek().is_punct("}")) return;
    error("expected end of statement");
    sync_to_line_end();
  }

  void sync_to_line_end() {
    while (!at_end() && !peek().is(TokenKind::Newline)) advance();
  }

  // -- module-level declarations -------------------------------------------
  void parse_dimensions(SourceModule& mod) {
    expect_keyword("dimensions");
    if (accept_keyword("from")) {
      if (peek().is(TokenKind::StringLiteral)) {
        std::string lit = advance().lexeme;
        mod.dimension_imports.push_back(lit.substr(1, lit.size() - 2));
      } else {
        error("expected file name string");
      }
      expect_stmt_end();
      return;
    }
    expect_punct("{");
    skip_newlines();
    while (!peek().is_punct("}") && !at_end()) {
      DimensionDecl d;
      d.span = peek().span;
      d.name = expect_identifier("dimension name");
      if (accept_op("=")) d.definition = parse_dim_expr();
      if (peek().is(TokenKind::StringLiteral)) {
        std::string lit = advance().lexeme;
        d.description = lit.substr(1, lit.size() - 2);
      }
      mod.dimensions.push_back(std::move(d));
      expect_stmt_end();
      skip_newlines();
    }
    expect_punct("}");
    expect_stmt_end();
  }

  DimExpr parse_dim_expr() {
    DimExpr de;
    de.span = peek().span;
    do {
      std::string id = expect_identifier("dimension identifier");
      int exp = 1;
      if (accept_op("^")) exp = parse_int_literal();
      de.factors.emplace_back(std::move(id), exp);
    } while (accept_op("*"));
    return de;
  }

  int parse_int_literal() {
    int sign = 1;
    if (accept_op("-")) sign = -1;
    if (peek().is(TokenKind::IntegerLiteral))
      return sign * static_cast<int>(std::strtoll(advance().lexeme.c_str(), nullptr, 10));
    error("expected integer literal");
    return 0;
  }

  void parse_param(SourceModule& mod) {
    expect_keyword("param");
    ParamDecl p;
    p.span = peek().span;
    p.type = parse_type_spec();
    p.name = expect_identifier("parameter name");
    if (accept_op("=")) p.default_value = parse_expr();
    if (accept_keyword("range")) {
      expect_punct("[");
      double lo = parse_number();
      expect_punct(",");
      double hi = parse_number();
      expect_punct("]");
      p.range = {lo, hi};
    }
    mod.params.push_back(std::move(p));
    expect_stmt_end();
  }

  double parse_number() {
    int sign = 1;
    if (accept_op("-")) sign = -1;
    if (peek().is(TokenKind::IntegerLiteral) ||
        peek().is(TokenKind::RealLiteral))
      return sign * std::strtod(advance().lexeme.c_str(), nullptr);
    error("expected numeric literal");
    return 0.0;
  }

  bool peek_is_base_type() const {
    return peek().is_keyword("real") || peek().is_keyword("int") ||
           peek().is_keyword("bool") || peek().is_keyword("string") ||
           peek().is_keyword("vector") || peek().is_keyword("matrix");
  }

  TypeSpec parse_type_spec() {
    TypeSpec ts;
    ts.span = peek().span;
    auto base_of = [&](const std::string& kw) {
      if (kw == "real") return TypeSpec::Real;
      if (kw == "int") return TypeSpec::Int;
      if (kw == "bool") return TypeSpec::Bool;
      if (kw == "string") return TypeSpec::String;
      if (kw == "vector") return TypeSpec::Vector;
      return TypeSpec::Matrix;
    };
    if (!peek_is_base_type()) {
      error("expected type");
      return ts;
    }
    ts.base = base_of(advance().lexeme);
    if (ts.base == TypeSpec::Vector || ts.base == TypeSpec::Matrix) {
      expect_op("<");
      if (peek_is_base_type()) {
        ts.element = base_of(advance().lexeme);
      } else {
        error("expected element type");
      }
      expect_op(">");
    }
    if (accept_punct("[")) {
      ts.arity = parse_int_literal();
      expect_punct("]");
    }
    if (accept_punct("{")) {
      ts.dim = parse_dim_expr();
      expect_punct("}");
    }
    return ts;
  }

  // -- statements -----------------------------------------------------------
  StmtPtr parse_statement() {
    skip_newlines();
    if (at_end() || peek().is_punct("}")) return nullptr;

    if (peek().is_punct("@optimize")) {
      advance();
      skip_newlines();
      auto s = parse_statement();
      if (s) s->optimize = true;
      return s;
    }
    if (peek().is_keyword("inline")) {
      diags_.report("E2003", peek().span,
                    "inline foreign-code statements are not supported");
      sync_to_line_end();
      return nullptr;
    }

    const Token& t = peek();
    if (t.is_keyword("topology")) return parse_topology();
    if (t.is_keyword("particles")) return parse_particles();
    if (t.is_keyword("neighborlist")) return parse_neighborlist();
    if (t.is_keyword("apply_bc")) return parse_named_stmt(StmtKind::ApplyBc);
    if (t.is_keyword("update_neighbors"))
      return parse_named_stmt(StmtKind::UpdateNeighlist);
    if (t.is_keyword("write")) return parse_named_stmt(StmtKind::IoWrite);
    if (t.is_keyword("load")) return parse_load();
    if (t.is_keyword("timeloop")) return parse_timeloop();
    if (t.is_keyword("foreach")) return parse_foreach();
    if (t.is_keyword("if")) return parse_if();
    if (t.is_keyword("deqn")) return parse_deqn();
    if (peek_is_base_type()) return parse_var_decl();
    return parse_assign_or_expr();
  }

  StmtPtr make_stmt(StmtKind kind) {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->span = peek().span;
    return s;
  }

  StmtPtr parse_topology() {
    auto s = make_stmt(StmtKind::CreateTopology);
    expect_keyword("topology");
    s->name = expect_identifier("topology name");
    expect_keyword("boundary");
    if (accept_keyword("periodic")) {
      s->boundary = "periodic";
    } else if (accept_keyword("none")) {
      s->boundary = "none";
    } else {
      error("expected 'periodic' or 'none'");
    }
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_particles() {
    auto s = make_stmt(StmtKind::CreateParticles);
    expect_keyword("particles");
    s->name = expect_identifier("particle list name");
    expect_keyword("on");
    s->topology = expect_identifier("topology name");
    if (accept_keyword("grid")) {
      s->init_spec.kind = ParticleInitSpec::Grid;
      expect_punct("(");
      do {
        s->init_spec.grid_counts.push_back(parse_expr());
      } while (accept_punct(","));
      expect_punct(")");
    } else if (accept_keyword("load")) {
      s->init_spec.kind = ParticleInitSpec::Load;
      if (peek().is(TokenKind::StringLiteral)) {
        std::string lit = advance().lexeme;
        s->init_spec.file = lit.substr(1, lit.size() - 2);
      } else {
        error("expected file name string");
      }
      expect_keyword("columns");
      s->init_spec.columns = parse_column_list();
    } else if (accept_keyword("random")) {
      s->init_spec.kind = ParticleInitSpec::Random;
      expect_punct("(");
      s->init_spec.random_count = parse_expr();
      expect_punct(",");
      s->init_spec.random_seed = parse_expr();
      expect_punct(")");
    } else {
      error("expected 'grid', 'load', or 'random'");
    }
    if (accept_punct("{")) {
      skip_newlines();
      while (!peek().is_punct("}") && !at_end()) {
        PropDecl p;
        p.span = peek().span;
        p.type = parse_type_spec();
        p.name = expect_identifier("property name");
        if (accept_op("=")) p.init = parse_expr();
        s->props.push_back(std::move(p));
        expect_stmt_end();
        skip_newlines();
      }
      expect_punct("}");
    }
    expect_stmt_end();
    return s;
  }

  std::vector<std::string> parse_column_list() {
    std::vector<std::string> cols;
    expect_punct("(");
    do {
      std::string col = expect_identifier("column name");
      if (accept_punct("[")) {
        col += "[" + std::to_string(parse_int_literal()) + "]";
        expect_punct("]");
      }
      cols.push_back(std::move(col));
    } while (accept_punct(","));
    expect_punct(")");
    return cols;
  }

  StmtPtr parse_neighborlist() {
    auto s = make_stmt(StmtKind::CreateNeighlist);
    expect_keyword("neighborlist");
    s->name = expect_identifier("neighbor list name");
    expect_keyword("on");
    s->on_list = expect_identifier("particle list name");
    expect_keyword("cutoff");
    s->cutoff = parse_expr();
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_named_stmt(StmtKind kind) {
    auto s = make_stmt(kind);
    advance();  // keyword
    s->name = expect_identifier("name");
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_load() {
    auto s = make_stmt(StmtKind::LoadData);
    expect_keyword("load");
    s->name = expect_identifier("particle list name");
    expect_keyword("from");
    if (peek().is(TokenKind::StringLiteral)) {
      std::string lit = advance().lexeme;
      s->file = lit.substr(1, lit.size() - 2);
    } else {
      error("expected file name string");
    }
    expect_keyword("columns");
    s->columns = parse_column_list();
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_timeloop() {
    auto s = make_stmt(StmtKind::Timeloop);
    expect_keyword("timeloop");
    s->loop_var = expect_identifier("time variable");
    expect_op("=");
    s->time_start = parse_expr();
    expect_keyword("to");
    s->time_end = parse_expr();
    expect_keyword("step");
    s->time_step = parse_expr();
    s->body = parse_block();
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_foreach() {
    auto s = make_stmt(StmtKind::Foreach);
    expect_keyword("foreach");
    s->loop_var = expect_identifier("loop variable");
    expect_keyword("in");
    if (accept_keyword("neighbors")) {
      s->over_neighbors = true;
      expect_punct("(");
      s->neighbor_of = expect_identifier("particle variable");
      expect_punct(",");
      s->source_list = expect_identifier("neighbor list name");
      expect_punct(")");
    } else {
      s->source_list = expect_identifier("particle list name");
    }
    s->body = parse_block();
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_if() {
    auto s = make_stmt(StmtKind::IfElse);
    expect_keyword("if");
    s->cond = parse_expr();
    s->body = parse_block();
    if (accept_keyword("else")) {
      if (peek().is_keyword("if")) {
        s->else_body.push_back(parse_if());
        return s;
      }
      s->else_body = parse_block();
    }
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_deqn() {
    auto s = make_stmt(StmtKind::DeqnBlock);
    expect_keyword("deqn");
    expect_keyword("on");
    s->name = expect_identifier("particle list name");
    expect_keyword("using");
    if (peek().is_keyword("euler") || peek().is_keyword("rk4")) {
      s->integrator = advance().lexeme;
    } else {
      error("expected integrator ('euler' or 'rk4')");
      s->integrator = "euler";
    }
    expect_punct("{");
    skip_newlines();
    while (!peek().is_punct("}") && !at_end()) {
      Equation eq;
      eq.span = peek().span;
      if (accept_punct("@optimize")) {
        eq.optimize = true;
        skip_newlines();
        eq.span = peek().span;
      }
      expect_keyword("d_dt");
      expect_punct("(");
      eq.list_name = expect_identifier("particle list name");
      expect_op("->");
      eq.field_name = expect_identifier("field name");
      expect_punct(")");
      // optional explicit "/ dt" spelling
      if (peek().is_op("/")) {
        advance();
        if (accept_keyword("d_dt")) {
          if (peek().is(TokenKind::Identifier)) advance();  // the 't'
        } else if (peek().is(TokenKind::Identifier) && peek().lexeme == "dt") {
          advance();
        } else {
          error("expected 'dt' after '/'");
        }
      }
      expect_op("=");
      eq.rhs = parse_expr();
      s->equations.push_back(std::move(eq));
      expect_stmt_end();
      skip_newlines();
    }
    expect_punct("}");
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_var_decl() {
    auto s = make_stmt(StmtKind::VarDecl);
    s->decl_type = parse_type_spec();
    s->name = expect_identifier("variable name");
    if (accept_op("=")) {
      s->kind = StmtKind::VarInit;
      s->init = parse_expr();
    }
    expect_stmt_end();
    return s;
  }

  StmtPtr parse_assign_or_expr() {
    auto s = make_stmt(StmtKind::ExprStmt);
    auto lhs = parse_expr();
    if (accept_op("=")) {
      s->kind = StmtKind::Assign;
      s->target = std::move(lhs);
      s->value = parse_expr();
    } else {
      s->expr = std::move(lhs);
    }
    expect_stmt_end();
    return s;
  }

  std::vector<StmtPtr> parse_block() {
    std::vector<StmtPtr> body;
    skip_newlines();
    expect_punct("{");
    skip_newlines();
    while (!peek().is_punct("}") && !at_end()) {
      if (auto s = parse_statement()) body.push_back(std::move(s));
      skip_newlines();
    }
    expect_punct("}");
    return body;
  }

  // -- expressions ----------------------------------------------------------
  // Precedence, loosest first: logical < equality < relational < additive
  // < multiplicative < unary < power < postfix. '^' is right-associative;
  // unary minus binds looser than '^'.
  ExprPtr parse_expr() { return parse_logical(); }

  ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs, Span span) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Binary;
    e->span = span;
    e->bin_op = op;
    e->children.push_back(std::move(lhs));
    e->children.push_back(std::move(rhs));
    return e;
  }

  ExprPtr parse_logical() {
    auto lhs = parse_equality();
    for (;;) {
      Span sp = peek().span;
      if (accept_op("&&")) {
        lhs = make_binary(BinOp::And, std::move(lhs), parse_equality(), sp);
      } else if (accept_op("||")) {
        lhs = make_binary(BinOp::Or, std::move(lhs), parse_equality(), sp);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_equality() {
    auto lhs = parse_relational();
    for (;;) {
      Span sp = peek().span;
      if (accept_op("==")) {
        lhs = make_binary(BinOp::Eq, std::move(lhs), parse_relational(), sp);
      } else if (accept_op("!=")) {
        lhs = make_binary(BinOp::Ne, std::move(lhs), parse_relational(), sp);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_relational() {
    auto lhs = parse_additive();
    for (;;) {
      Span sp = peek().span;
      BinOp op;
      if (peek().is_op("<")) op = BinOp::Lt;
      else if (peek().is_op(">")) op = BinOp::Gt;
      else if (peek().is_op("<=")) op = BinOp::Le;
      else if (peek().is_op(">=")) op = BinOp::Ge;
      else return lhs;
      advance();
      lhs = make_binary(op, std::move(lhs), parse_additive(), sp);
    }
  }

  ExprPtr parse_additive() {
    auto lhs = parse_multiplicative();
    for (;;) {
      Span sp = peek().span;
      if (accept_op("+")) {
        lhs = make_binary(BinOp::Add, std::move(lhs), parse_multiplicative(), sp);
      } else if (accept_op("-")) {
        lhs = make_binary(BinOp::Sub, std::move(lhs), parse_multiplicative(), sp);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_multiplicative() {
    auto lhs = parse_unary();
    for (;;) {
      Span sp = peek().span;
      if (accept_op("*")) {
        lhs = make_binary(BinOp::Mul, std::move(lhs), parse_unary(), sp);
      } else if (accept_op("/")) {
        lhs = make_binary(BinOp::Div, std::move(lhs), parse_unary(), sp);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_unary() {
    Span sp = peek().span;
    UnOp op;
    if (peek().is_op("-")) op = UnOp::Neg;
    else if (peek().is_op("!")) op = UnOp::Not;
    else if (peek().is_op("sqrt")) op = UnOp::Sqrt;
    else return parse_power();
    advance();
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Unary;
    e->span = sp;
    e->un_op = op;
    e->children.push_back(parse_unary());
    return e;
  }

  ExprPtr parse_power() {
    auto base = parse_postfix();
    if (peek().is_op("^")) {
      Span sp = peek().span;
      advance();
      // right-associative; exponent may carry a unary minus
      return make_binary(BinOp::Pow, std::move(base), parse_unary(), sp);
    }
    return base;
  }

  ExprPtr parse_postfix() {
    auto e = parse_primary();
    for (;;) {
      if (peek().is_op("->")) {
        Span sp = peek().span;
        advance();
        auto pa = std::make_unique<Expr>();
        pa->kind = ExprKind::ParticleAccess;
        pa->span = sp;
        pa->name = expect_identifier("field or property name");
        pa->children.push_back(std::move(e));
        e = std::move(pa);
      } else if (peek().is_punct("[")) {
        Span sp = peek().span;
        advance();
        auto aa = std::make_unique<Expr>();
        aa->kind = ExprKind::ArrayAccess;
        aa->span = sp;
        aa->children.push_back(std::move(e));
        aa->children.push_back(parse_expr());
        expect_punct("]");
        e = std::move(aa);
      } else {
        return e;
      }
    }
  }

  // Numeric literals may carry a dimension annotation, 0.5{l * t^-1}.
  // A '{' also opens statement blocks, so only consume it when the token
  // stream ahead matches a one-line product-of-powers form.
  void accept_dim_annotation(Expr& e) {
    if (!peek().is_punct("{")) return;
    size_t i = 1;
    for (;;) {
      if (!peek(i).is(TokenKind::Identifier)) return;
      ++i;
      if (peek(i).is_op("^")) {
        ++i;
        if (peek(i).is_op("-")) ++i;
        if (!peek(i).is(TokenKind::IntegerLiteral)) return;
        ++i;
      }
      if (peek(i).is_op("*")) {
        ++i;
        continue;
      }
      break;
    }
    if (!peek(i).is_punct("}")) return;
    advance();  // '{'
    e.dim_annotation = parse_dim_expr();
    expect_punct("}");
  }

  ExprPtr parse_primary() {
    auto e = std::make_unique<Expr>();
    e->span = peek().span;
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::IntegerLiteral:
        e->kind = ExprKind::Literal;
        e->lit_kind = LiteralKind::Integer;
        e->text = t.lexeme;
        e->int_value = std::strtoll(t.lexeme.c_str(), nullptr, 10);
        advance();
        accept_dim_annotation(*e);
        return e;
      case TokenKind::RealLiteral:
        e->kind = ExprKind::Literal;
        e->lit_kind = LiteralKind::Real;
        e->text = t.lexeme;
        e->real_value = std::strtod(t.lexeme.c_str(), nullptr);
        advance();
        accept_dim_annotation(*e);
        return e;
      case TokenKind::StringLiteral:
        e->kind = ExprKind::Literal;
        e->lit_kind = LiteralKind::String;
        e->text = t.lexeme.substr(1, t.lexeme.size() - 2);
        advance();
        return e;
      case TokenKind::BooleanLiteral:
        e->kind = ExprKind::Literal;
        e->lit_kind = LiteralKind::Boolean;
        e->text = t.lexeme;
        e->bool_value = t.lexeme == "true";
        advance();
        return e;
      case TokenKind::Identifier:
        e->kind = ExprKind::VarAccess;
        e->name = t.lexeme;
        advance();
        return e;
      default:
        break;
    }
    if (t.is_op("laplacian")) {
      advance();
      e->kind = ExprKind::DiffOpApply;
      expect_punct("(");
      e->children.push_back(parse_expr());
      expect_punct(")");
      return e;
    }
    if (t.is_keyword("random")) {
      // builtin source of seeded uniform randomness, typed real
      advance();
      e->kind = ExprKind::VarAccess;
      e->name = "random";
      if (accept_punct("(")) expect_punct(")");
      return e;
    }
    if (t.is_punct("(")) {
      advance();
      e->kind = ExprKind::Paren;
      e->children.push_back(parse_expr());
      expect_punct(")");
      return e;
    }
    error("expected expression");
    advance();
    e->kind = ExprKind::Literal;
    e->lit_kind = LiteralKind::Integer;
    e->text = "0";
    return e;
  }

  const std::vector<Token>& toks_;
  DiagnosticSink& diags_;
  size_t pos_ = 0;
};

}  // namespace

ParseResult parse_module(const std::vector<Token>& tokens) {
  ParseResult r;
  Parser p(tokens, r.diags);
  r.module = p.run();
  return r;
}

ParseResult parse_source(const std::string& source) {
  auto lexed = tokenize(source);
  ParseResult r;
  for (auto& d : lexed.diags.all()) r.diags.all().push_back(d);
  if (lexed.diags.has_errors()) return r;
  Parser p(lexed.tokens, r.diags);
  r.module = p.run();
  return r;
}

ast::ExprPtr parse_expression(const std::string& source, DiagnosticSink& diags) {
  auto lexed = tokenize(source);
  for (auto& d : lexed.diags.all()) diags.all().push_back(d);
  if (lexed.diags.has_errors()) return nullptr;
  Parser p(lexed.tokens, diags);
  return p.parse_expr_entry();
}

}  // namespace pm
