#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pm {

// Source location: 1-based line/column plus length in characters.
struct Span {
  uint32_t line = 0;
  uint32_t column = 0;
  uint32_t length = 0;

  bool operator==(const Span&) const = default;
  bool before(const Span& o) const {
    return line != o.line ? line < o.line : column < o.column;
  }
};

enum class Severity { Error, Warning, Note };

// Codes: E1xxx lexical, E2xxx syntactic/context, E3xxx types,
// E4xxx dimensions, E5xxx lowering, E6xxx runtime.
struct Diagnostic {
  std::string code;
  Severity severity = Severity::Error;
  Span span;
  std::string message;

  bool is_error() const { return severity == Severity::Error; }
};

class DiagnosticSink {
public:
  void report(std::string code, Span span, std::string message,
              Severity sev = Severity::Error) {
    diags_.push_back({std::move(code), sev, span, std::move(message)});
  }

  const std::vector<Diagnostic>& all() const { return diags_; }
  std::vector<Diagnostic>& all() { return diags_; }

  size_t error_count() const {
    size_t n = 0;
    for (const auto& d : diags_)
      if (d.is_error()) ++n;
    return n;
  }
  bool has_errors() const { return error_count() > 0; }

  void sort_by_span();

private:
  std::vector<Diagnostic> diags_;
};

// "file:line:col: error[E1001]: message"
std::string format_diagnostic(const Diagnostic& d, const std::string& file);
// One JSON object per line, for editor integration.
std::string format_diagnostic_json(const Diagnostic& d, const std::string& file);

}  // namespace pm
