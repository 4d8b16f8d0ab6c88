#pragma once

#include <stdexcept>
#include <string>

#include "pm/diag.hpp"

namespace pm::rt {

// Runtime failures carry a stable E6xxx code plus, where available, the
// source span and timeloop step of the failing operation.
//   E6001 BadSpec          E6002 IoError         E6003 CutoffTooLarge
//   E6004 StaleList        E6005 NonFinite       E6006 ParamError
//   E6007 EvalError (division by zero, bad index, ...)
class RuntimeError : public std::runtime_error {
public:
  RuntimeError(std::string code, std::string message, Span span = {},
               long step = -1)
      : std::runtime_error(message),
        code_(std::move(code)),
        span_(span),
        step_(step) {}

  const std::string& code() const { return code_; }
  const Span& span() const { return span_; }
  long step() const { return step_; }

  void set_context(Span span, long step) {
    if (span_.line == 0) span_ = span;
    if (step_ < 0) step_ = step;
  }

private:
  std::string code_;
  Span span_;
  long step_;
};

}  // namespace pm::rt
