#include "pm/diag.hpp"

#include <algorithm>
#include <sstream>

namespace pm {

void DiagnosticSink::sort_by_span() {
  std::stable_sort(diags_.begin(), diags_.end(),
                   [](const Diagnostic& a, const Diagnostic& b) {
                     return a.span.before(b.span);
                   });
}

static const char* severity_name(Severity s) {
  switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
  }
  return "error";
}

std::string format_diagnostic(const Diagnostic& d, const std::string& file) {
  std::ostringstream os;
  os << file << ':' << d.span.line << ':' << d.span.column << ": "
     << severity_name(d.severity) << '[' << d.code << "]: " << d.message;
  return os.str();
}

static void json_escape(std::ostream& os, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '"': os << "\\\""; break;
      case '\\': os << "\\\\"; break;
      case '\n': os << "\\n"; break;
      case '\t': os << "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          snprintf(buf, sizeof buf, "\\u%04x", c);
          os << buf;
        } else {
          os << c;
        }
    }
  }
}

std::string format_diagnostic_json(const Diagnostic& d, const std::string& file) {
  std::ostringstream os;
  os << "{\"file\":\"";
  json_escape(os, file);
  os << "\",\"line\":" << d.span.line << ",\"column\":" << d.span.column
     << ",\"length\":" << d.span.length << ",\"severity\":\""
     << severity_name(d.severity) << "\",\"code\":\"" << d.code
     << "\",\"message\":\"";
  json_escape(os, d.message);
  os << "\"}";
  return os.str();
}

}  // namespace pm
