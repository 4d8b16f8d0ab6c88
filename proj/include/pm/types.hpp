#pragma once

#include <memory>
#include <optional>
#include <string>

#include "pm/ast.hpp"

namespace pm::types {

// The type lattice. Containers (Vector, Matrix, Field) hold an element
// type; Error is absorbing and never appears as an element type.
class LatticeType {
public:
  enum Kind {
    String,
    Boolean,
    Integer,
    Real,
    Vector,
    Matrix,
    Particle,
    ParticleList,
    Field,  // property / discretized field with arity n >= 1
    Displacement,
    Topology,
    Boundary,
    NeighborList,
    Error,
  };

  LatticeType() : kind_(Error) {}
  LatticeType(Kind k) : kind_(k) {}  // NOLINT: implicit by design

  static LatticeType vector_of(LatticeType elem);
  static LatticeType matrix_of(LatticeType elem);
  static LatticeType field_of(LatticeType elem, int arity);
  // Particle and ParticleList carry the list they refer to so field
  // lookups can resolve.
  static LatticeType particle_of(std::string list_name);
  static LatticeType particle_list_of(std::string list_name);

  Kind kind() const { return kind_; }
  bool is(Kind k) const { return kind_ == k; }
  bool is_error() const { return kind_ == Error; }
  bool is_scalar_numeric() const { return kind_ == Integer || kind_ == Real; }
  bool is_container() const {
    return kind_ == Vector || kind_ == Matrix || kind_ == Field;
  }

  const LatticeType& element() const { return *element_; }
  int arity() const { return arity_; }
  const std::string& list_name() const { return list_name_; }

  bool operator==(const LatticeType& o) const;
  bool operator!=(const LatticeType& o) const { return !(*this == o); }

  std::string to_string() const;

private:
  Kind kind_;
  std::shared_ptr<const LatticeType> element_;  // Vector/Matrix/Field
  int arity_ = 1;                               // Field
  std::string list_name_;                       // Particle
};

// tau1 <= tau2 (reflexive-transitive closure; Integer < Real is the only
// primitive edge, containers are covariant in their element type).
bool subtype(const LatticeType& t1, const LatticeType& t2);

// Least common supertype; nullopt across unrelated families.
std::optional<LatticeType> lcs(const LatticeType& t1, const LatticeType& t2);

// Unary inference tau_op; nullopt encodes bottom (rule ErrUnary applies).
std::optional<LatticeType> unary_result(ast::UnOp op, const LatticeType& t);

// Binary inference tables tau_op; nullopt encodes bottom (rule ErrBin).
std::optional<LatticeType> binary_result(ast::BinOp op, const LatticeType& t1,
                                         const LatticeType& t2);

}  // namespace pm::types
