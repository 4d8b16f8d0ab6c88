#include "pm/dimension.hpp"

#include <fstream>
#include <sstream>

#include "pm/parser.hpp"
#include "pm/token.hpp"

namespace pm::dim {

Dimension::Dimension(std::map<std::string, int> exponents)
    : exp_(std::move(exponents)) {
  for (auto it = exp_.begin(); it != exp_.end();) {
    if (it->second == 0)
      it = exp_.erase(it);
    else
      ++it;
  }
}

Dimension Dimension::times(const Dimension& o) const {
  std::map<std::string, int> r = exp_;
  for (const auto& [k, v] : o.exp_) r[k] += v;
  return Dimension(std::move(r));
}

Dimension Dimension::divide(const Dimension& o) const {
  std::map<std::string, int> r = exp_;
  for (const auto& [k, v] : o.exp_) r[k] -= v;
  return Dimension(std::move(r));
}

Dimension Dimension::power(int n) const {
  std::map<std::string, int> r;
  if (n != 0)
    for (const auto& [k, v] : exp_) r[k] = v * n;
  return Dimension(std::move(r));
}

std::optional<Dimension> Dimension::sqrt() const {
  std::map<std::string, int> r;
  for (const auto& [k, v] : exp_) {
    if (v % 2 != 0) return std::nullopt;  // no fractional dimensions
    r[k] = v / 2;
  }
  return Dimension(std::move(r));
}

std::string Dimension::to_string() const {
  if (exp_.empty()) return "1";
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : exp_) {
    if (!first) os << " * ";
    first = false;
    os << k;
    if (v != 1) os << '^' << v;
  }
  return os.str();
}

bool DimTable::declare(const ast::DimensionDecl& decl, DiagnosticSink& diags) {
  if (entries_.count(decl.name)) {
    diags.report("E4005", decl.span,
                 "dimension '" + decl.name + "' is already declared");
    return false;
  }
  entries_[decl.name] = Entry{decl.definition, std::nullopt, false};
  return true;
}

bool DimTable::is_declared(const std::string& name) const {
  return entries_.count(name) > 0;
}

std::optional<Dimension> DimTable::expand_name(const std::string& name,
                                               Span span,
                                               DiagnosticSink& diags) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    diags.report("E4004", span, "unknown dimension '" + name + "'");
    return std::nullopt;
  }
  const Entry& e = it->second;
  if (e.cached) return e.cached;
  if (!e.definition) {
    e.cached = Dimension::fundamental(name);
    return e.cached;
  }
  if (e.expanding) {
    diags.report("E4006", span,
                 "cyclic definition of dimension '" + name + "'");
    return std::nullopt;
  }
  e.expanding = true;
  auto d = expand(*e.definition, diags);
  e.expanding = false;
  if (d) e.cached = d;
  return d;
}

std::optional<Dimension> DimTable::expand(const ast::DimExpr& expr,
                                          DiagnosticSink& diags) const {
  Dimension acc;
  for (const auto& [name, exp] : expr.factors) {
    auto base = expand_name(name, expr.span, diags);
    if (!base) return std::nullopt;
    acc = acc.times(base->power(exp));
  }
  return acc;
}

bool load_dim_file(const std::string& path, DimTable& table,
                   DiagnosticSink& diags) {
  std::ifstream in(path);
  if (!in) {
    diags.report("E4007", {}, "cannot open dimension file '" + path + "'");
    return false;
  }
  std::string line;
  uint32_t lineno = 0;
  bool ok = true;
  while (std::getline(in, line)) {
    ++lineno;
    auto lexed = tokenize(line);
    if (lexed.diags.has_errors()) {
      for (auto d : lexed.diags.all()) {
        d.span.line = lineno;
        diags.all().push_back(d);
      }
      ok = false;
      continue;
    }
    size_t i = 0;
    const auto& toks = lexed.tokens;
    auto at = [&](size_t k) -> const Token& { return toks[std::min(k, toks.size() - 1)]; };
    if (at(i).is(TokenKind::EndOfFile) || at(i).is(TokenKind::Newline)) continue;
    ast::DimensionDecl decl;
    decl.span = {lineno, at(i).span.column, at(i).span.length};
    if (!at(i).is(TokenKind::Identifier)) {
      diags.report("E4008", decl.span, "expected dimension identifier");
      ok = false;
      continue;
    }
    decl.name = at(i++).lexeme;
    if (at(i).is_op("=")) {
      ++i;
      ast::DimExpr de;
      de.span = decl.span;
      bool bad = false;
      for (;;) {
        if (!at(i).is(TokenKind::Identifier)) {
          bad = true;
          break;
        }
        std::string id = at(i++).lexeme;
        int exp = 1;
        if (at(i).is_op("^")) {
          ++i;
          int sign = 1;
          if (at(i).is_op("-")) {
            sign = -1;
            ++i;
          }
          if (!at(i).is(TokenKind::IntegerLiteral)) {
            bad = true;
            break;
          }
          exp = sign * std::stoi(at(i++).lexeme);
        }
        de.factors.emplace_back(std::move(id), exp);
        if (at(i).is_op("*")) {
          ++i;
          continue;
        }
        break;
      }
      if (bad) {
        diags.report("E4008", decl.span, "malformed dimension definition");
        ok = false;
        continue;
      }
      decl.definition = std::move(de);
    }
    if (at(i).is(TokenKind::StringLiteral)) {
      const std::string& lit = at(i++).lexeme;
      decl.description = lit.substr(1, lit.size() - 2);
    }
    if (!table.declare(decl, diags)) ok = false;
  }
  return ok;
}

std::optional<Dimension> dim_infer(DimBinOp op, const Dimension& d1,
                                   const Dimension& d2) {
  switch (op) {
    case DimBinOp::Add:
    case DimBinOp::Sub:
      if (d1 == d2) return d1;
      return std::nullopt;
    case DimBinOp::Mul:
      return d1.times(d2);
    case DimBinOp::Div:
      return d1.divide(d2);
    case DimBinOp::Relational:
      if (d1 == d2) return Dimension::empty();
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace pm::dim
