#pragma once

#include <string>
#include <vector>

#include "pm/check.hpp"

namespace pm::lower {

// A differential-operator application extracted from a deqn equation and
// replaced by a generated intermediate (dU, dV, ...).
struct DiffOpSlot {
  std::string field;         // operand field on the target list
  std::string intermediate;  // generated name, unique in the program
};

// d<field>/dt = rhs, with the rhs rewritten to per-particle form: field
// accesses go through the inserted loop variable, diff-ops through their
// intermediates.
struct FieldDerivative {
  std::string field;
  ast::ExprPtr rhs;
  bool optimize = false;
  Span span;
};

struct RhsProgram {
  std::string list;
  std::string integrator;  // euler | rk4
  std::string loop_var;    // inserted particle loop variable
  std::vector<DiffOpSlot> slots;
  std::vector<std::string> reads;   // fields read, declaration order
  std::vector<std::string> writes;  // state fields, equation order
  std::vector<FieldDerivative> derivatives;
};

struct Step {
  enum Kind {
    CreateTopology,
    CreateParticles,
    CreateNeighlist,
    Discretize,  // prepare the PSE operator for (list, field)
    Timeloop,    // nested body
    RhsIntegrate,
    Foreach,
    IfElse,  // nested body/else_body
    ApplyBc,
    RemapNeighbors,
    IoWrite,
    LoadData,
    VarDecl,
    VarInit,
    Assign,
    ExprStmt,
  };

  Kind kind;
  const ast::Stmt* stmt = nullptr;  // originating statement, if any
  int rhs_index = -1;               // RhsIntegrate
  std::string name;                 // list / neighbor list / field name
  std::string aux;                  // Discretize: field; Remap: list
  bool synthesized = false;         // inserted by the lowering pass
  std::vector<Step> body;
  std::vector<Step> else_body;
};

struct ExecutionPlan {
  const ast::SourceModule* module = nullptr;
  const check::CheckedModule* checked = nullptr;
  std::vector<RhsProgram> rhs;
  std::vector<Step> steps;

  bool ok = false;
  DiagnosticSink diags;
};

// Extracts one RhsProgram per deqn block (already rewritten to
// per-particle form). Diagnostics go to `diags`; on error the result may
// be partial.
std::vector<RhsProgram> extract_rhs(const check::CheckedModule& cm,
                                    DiagnosticSink& diags);

// Full lowering: RHS extraction, step ordering, dependency validation,
// synthesized apply-bc / neighbor-remap insertion after position writes.
ExecutionPlan build_plan(const check::CheckedModule& cm);

// Stable textual dump of the plan (the `ir` CLI verb).
std::string print_plan(const ExecutionPlan& plan);

}  // namespace pm::lower
