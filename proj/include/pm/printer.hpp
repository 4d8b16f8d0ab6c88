#pragma once

#include <string>

#include "pm/ast.hpp"

namespace pm {

// Prints an expression with minimal parentheses; reparsing yields a
// structurally identical tree (modulo explicit Paren nodes).
std::string print_expr(const ast::Expr& e);

// Whole-module pretty printer (normalized ASCII spelling).
std::string print_module(const ast::SourceModule& m);

std::string print_dim_expr(const ast::DimExpr& d);
std::string print_type_spec(const ast::TypeSpec& t);

}  // namespace pm
