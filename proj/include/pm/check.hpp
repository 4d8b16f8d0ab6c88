#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pm/ast.hpp"
#include "pm/dimension.hpp"
#include "pm/types.hpp"

namespace pm::check {

// Pair [tau; delta]; the Error kind absorbs the dimension.
struct AnnotatedType {
  types::LatticeType type;
  dim::Dimension dimension;

  bool is_error() const { return type.is_error(); }
  static AnnotatedType error() {
    return {types::LatticeType(types::LatticeType::Error), {}};
  }
  std::string to_string() const;
};

// Ordered scopes; inner scopes shadow outer ones. Functional style:
// push/pop around blocks, lookups walk outward.
class TypingEnv {
public:
  TypingEnv() { scopes_.emplace_back(); }

  void push_scope() { scopes_.emplace_back(); }
  void pop_scope() { scopes_.pop_back(); }

  // Returns false if the name is already bound in the innermost scope.
  bool bind(const std::string& name, AnnotatedType t);
  const AnnotatedType* lookup(const std::string& name) const;
  bool bound_in_current_scope(const std::string& name) const;

private:
  std::vector<std::map<std::string, AnnotatedType>> scopes_;
};

struct PropInfo {
  types::LatticeType element_type;
  int arity = 1;
  dim::Dimension dimension;
  const ast::Expr* init = nullptr;

  types::LatticeType field_type() const {
    return types::LatticeType::field_of(element_type, arity);
  }
  // Value seen through particle access p->f.
  types::LatticeType access_type() const {
    return arity == 1 ? element_type
                      : types::LatticeType::vector_of(element_type);
  }
};

struct ListInfo {
  std::string topology;
  int space_dim = 2;
  // Property order follows declaration order (determinism contract).
  std::vector<std::string> prop_order;
  std::map<std::string, PropInfo> props;
  dim::Dimension position_dim;  // from an explicit `pos` property, if any

  const PropInfo* find(const std::string& name) const {
    auto it = props.find(name);
    return it == props.end() ? nullptr : &it->second;
  }
};

struct CheckedModule {
  const ast::SourceModule* module = nullptr;
  dim::DimTable dims;
  std::map<std::string, ListInfo> lists;
  std::map<std::string, std::string> neighbor_lists;  // nl -> particle list
  std::map<std::string, std::string> topologies;      // name -> boundary
  // Inferred annotated type for every expression node.
  std::map<const ast::Expr*, AnnotatedType> expr_types;
  DiagnosticSink diags;

  bool ok() const { return !diags.has_errors(); }
  AnnotatedType type_of(const ast::Expr& e) const {
    auto it = expr_types.find(&e);
    return it == expr_types.end() ? AnnotatedType::error() : it->second;
  }
};

// Expression-level inference (exposed for unit tests). The list table may
// be empty when no particle accesses occur. Exactly one diagnostic is
// emitted at the innermost failing node; Error absorbs upward.
//
// With `list_scalar_view` set, list-level accesses (list->f) read as the
// per-particle value instead of the field: equation bodies are implicitly
// evaluated inside a loop over the list's particles.
AnnotatedType infer(const ast::Expr& e, const TypingEnv& env,
                    const std::map<std::string, ListInfo>& lists,
                    DiagnosticSink& diags,
                    std::map<const ast::Expr*, AnnotatedType>* record = nullptr,
                    bool list_scalar_view = false,
                    const dim::DimTable* dims = nullptr);

// Whole-module static analysis: context validation, type and dimension
// checking. `base_dir` resolves .dim imports.
CheckedModule check_module(const ast::SourceModule& module,
                           const std::string& base_dir = ".");

}  // namespace pm::check
