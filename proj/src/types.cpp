#include "pm/types.hpp"

namespace pm::types {

using ast::BinOp;
using ast::UnOp;

LatticeType LatticeType::vector_of(LatticeType elem) {
  LatticeType t(Vector);
  t.element_ = std::make_shared<LatticeType>(std::move(elem));
  return t;
}

LatticeType LatticeType::matrix_of(LatticeType elem) {
  LatticeType t(Matrix);
  t.element_ = std::make_shared<LatticeType>(std::move(elem));
  return t;
}

LatticeType LatticeType::field_of(LatticeType elem, int arity) {
  LatticeType t(Field);
  t.element_ = std::make_shared<LatticeType>(std::move(elem));
  t.arity_ = arity;
  return t;
}

LatticeType LatticeType::particle_of(std::string list_name) {
  LatticeType t(Particle);
  t.list_name_ = std::move(list_name);
  return t;
}

LatticeType LatticeType::particle_list_of(std::string list_name) {
  LatticeType t(ParticleList);
  t.list_name_ = std::move(list_name);
  return t;
}

bool LatticeType::operator==(const LatticeType& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case Vector:
    case Matrix:
      return element() == o.element();
    case Field:
      return arity_ == o.arity_ && element() == o.element();
    default:
      return true;  // Particle equality ignores the originating list
  }
}

std::string LatticeType::to_string() const {
  switch (kind_) {
    case String: return "String";
    case Boolean: return "Boolean";
    case Integer: return "Integer";
    case Real: return "Real";
    case Vector: return "Vector<" + element().to_string() + ">";
    case Matrix: return "Matrix<" + element().to_string() + ">";
    case Particle: return "Particle";
    case ParticleList: return "ParticleList";
    case Field:
      return "Field<" + element().to_string() + ", " +
             std::to_string(arity_) + ">";
    case Displacement: return "Displacement";
    case Topology: return "Topology";
    case Boundary: return "Boundary";
    case NeighborList: return "NeighborList";
    case Error: return "Error";
  }
  return "?";
}

bool subtype(const LatticeType& t1, const LatticeType& t2) {
  if (t1 == t2) return true;
  if (t1.is(LatticeType::Integer) && t2.is(LatticeType::Real)) return true;
  if (t1.kind() == t2.kind() && t1.is_container()) {
    if (t1.is(LatticeType::Field) && t1.arity() != t2.arity()) return false;
    return subtype(t1.element(), t2.element());
  }
  return false;
}

std::optional<LatticeType> lcs(const LatticeType& t1, const LatticeType& t2) {
  if (t1.is_error() || t2.is_error()) return std::nullopt;
  if (t1 == t2) return t1;
  if (subtype(t1, t2)) return t2;
  if (subtype(t2, t1)) return t1;
  if (t1.kind() == t2.kind() && t1.is_container()) {
    if (t1.is(LatticeType::Field) && t1.arity() != t2.arity())
      return std::nullopt;
    auto e = lcs(t1.element(), t2.element());
    if (!e) return std::nullopt;
    switch (t1.kind()) {
      case LatticeType::Vector: return LatticeType::vector_of(*e);
      case LatticeType::Matrix: return LatticeType::matrix_of(*e);
      default: return LatticeType::field_of(*e, t1.arity());
    }
  }
  return std::nullopt;
}

std::optional<LatticeType> unary_result(UnOp op, const LatticeType& t) {
  switch (op) {
    case UnOp::Not:
      if (t.is(LatticeType::Boolean)) return t;
      return std::nullopt;
    case UnOp::Neg:
      if (t.is_scalar_numeric()) return t;
      if (t.is(LatticeType::Vector) || t.is(LatticeType::Field)) {
        auto e = unary_result(op, t.element());
        if (!e) return std::nullopt;
        return t;  // elementwise, shape preserved
      }
      return std::nullopt;
    case UnOp::Sqrt:
      if (t.is_scalar_numeric()) return LatticeType(LatticeType::Real);
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

// helpers for the four inference tables

std::optional<LatticeType> rebuild(const LatticeType& shape,
                                   std::optional<LatticeType> elem) {
  if (!elem) return std::nullopt;
  if (shape.is(LatticeType::Vector)) return LatticeType::vector_of(*elem);
  return LatticeType::field_of(*elem, shape.arity());
}

// tau_{+|-}
std::optional<LatticeType> add_sub(const LatticeType& a, const LatticeType& b) {
  using LT = LatticeType;
  if (a.is_scalar_numeric() && b.is_scalar_numeric()) return lcs(a, b);
  if (a.is_scalar_numeric() &&
      (b.is(LT::Vector) || b.is(LT::Field)))
    return rebuild(b, lcs(a, b.element()));
  if ((a.is(LT::Vector) || a.is(LT::Field)) && b.is_scalar_numeric())
    return rebuild(a, lcs(a.element(), b));
  if (a.is(LT::Vector) && b.is(LT::Vector))
    return rebuild(a, lcs(a.element(), b.element()));
  if (a.is(LT::Field) && b.is(LT::Field)) {
    if (a.arity() != b.arity()) return std::nullopt;  // "if n = m"
    return rebuild(a, lcs(a.element(), b.element()));
  }
  return std::nullopt;
}

// tau_*
std::optional<LatticeType> mul(const LatticeType& a, const LatticeType& b) {
  using LT = LatticeType;
  if (a.is_scalar_numeric() && b.is_scalar_numeric()) return lcs(a, b);
  if (a.is_scalar_numeric() && (b.is(LT::Vector) || b.is(LT::Field)))
    return rebuild(b, lcs(a, b.element()));
  if ((a.is(LT::Vector) || a.is(LT::Field)) && b.is_scalar_numeric())
    return rebuild(a, lcs(a.element(), b));
  return std::nullopt;  // vector*vector, field*field, mixed: undefined
}

// tau_/ : self-referential table entries recurse elementwise with the
// scalar rules as base case; all scalar divisions yield Real.
std::optional<LatticeType> div(const LatticeType& a, const LatticeType& b) {
  using LT = LatticeType;
  if (a.is_scalar_numeric() && b.is_scalar_numeric())
    return LatticeType(LT::Real);
  if (a.is_scalar_numeric() && (b.is(LT::Vector) || b.is(LT::Field)))
    return rebuild(b, div(a, b.element()));
  if ((a.is(LT::Vector) || a.is(LT::Field)) && b.is_scalar_numeric())
    return rebuild(a, div(a.element(), LatticeType(LT::Real)));
  return std::nullopt;
}

// tau_{a^b}
std::optional<LatticeType> pow_(const LatticeType& a, const LatticeType& b) {
  using LT = LatticeType;
  if (a.is(LT::Integer) && b.is(LT::Integer)) return LatticeType(LT::Integer);
  if (a.is_scalar_numeric() && b.is_scalar_numeric())
    return LatticeType(LT::Real);
  if (a.is(LT::Vector) && b.is_scalar_numeric())
    return rebuild(a, pow_(a.element(), b));
  if (a.is(LT::Field) && b.is_scalar_numeric())
    return rebuild(a, pow_(a.element(), LatticeType(LT::Real)));
  return std::nullopt;
}

}  // namespace

std::optional<LatticeType> binary_result(BinOp op, const LatticeType& t1,
                                         const LatticeType& t2) {
  using LT = LatticeType;
  if (t1.is_error() || t2.is_error()) return std::nullopt;
  if (ast::is_logical(op)) {
    if (t1.is(LT::Boolean) && t2.is(LT::Boolean)) return LatticeType(LT::Boolean);
    return std::nullopt;
  }
  if (ast::is_relational(op)) {
    // well-formed iff the arithmetic table is defined for the operand pair
    if (add_sub(t1, t2)) return LatticeType(LT::Boolean);
    return std::nullopt;
  }
  switch (op) {
    case BinOp::Add:
    case BinOp::Sub:
      return add_sub(t1, t2);
    case BinOp::Mul:
      return mul(t1, t2);
    case BinOp::Div:
      return div(t1, t2);
    case BinOp::Pow:
      return pow_(t1, t2);
    default:
      return std::nullopt;
  }
}

}  // namespace pm::types
