#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pm/ast.hpp"

namespace pm::dim {

// A physical dimension in base form: fundamental name -> nonzero integer
// exponent. Empty map is the empty dimension.
class Dimension {
public:
  Dimension() = default;
  explicit Dimension(std::map<std::string, int> exponents);

  static Dimension empty() { return {}; }
  static Dimension fundamental(const std::string& name) {
    return Dimension({{name, 1}});
  }

  bool is_empty() const { return exp_.empty(); }
  const std::map<std::string, int>& exponents() const { return exp_; }

  Dimension times(const Dimension& o) const;   // exponent sum
  Dimension divide(const Dimension& o) const;  // exponent difference
  Dimension power(int n) const;                // exponents * n
  std::optional<Dimension> sqrt() const;       // nullopt on odd exponent

  bool operator==(const Dimension& o) const { return exp_ == o.exp_; }
  bool operator!=(const Dimension& o) const { return exp_ != o.exp_; }

  std::string to_string() const;  // e.g. "l * t^-2", "1" for empty

private:
  std::map<std::string, int> exp_;
};

// Declaration table; expansion to base form with cycle detection.
class DimTable {
public:
  // Declares a fundamental (no definition) or derived dimension.
  // Returns false and reports on redeclaration.
  bool declare(const ast::DimensionDecl& decl, DiagnosticSink& diags);

  bool is_declared(const std::string& name) const;

  // Recursively replaces derived dimensions by their definition.
  // Reports UnknownDimension / CyclicDefinition.
  std::optional<Dimension> expand(const ast::DimExpr& expr,
                                  DiagnosticSink& diags) const;
  std::optional<Dimension> expand_name(const std::string& name, Span span,
                                       DiagnosticSink& diags) const;

private:
  struct Entry {
    std::optional<ast::DimExpr> definition;
    mutable std::optional<Dimension> cached;
    mutable bool expanding = false;  // cycle marker
  };
  std::map<std::string, Entry> entries_;
};

// Loads declarations from a .dim file: one per line,
//   <id> [= <product-of-powers>] ["description"]
bool load_dim_file(const std::string& path, DimTable& table,
                   DiagnosticSink& diags);

enum class DimBinOp { Add, Sub, Mul, Div, Relational };

// I_op for binary operations on dimensions. Pow is handled separately
// because the exponent must be an integer literal. nullopt = ErrDim.
std::optional<Dimension> dim_infer(DimBinOp op, const Dimension& d1,
                                   const Dimension& d2);

}  // namespace pm::dim
