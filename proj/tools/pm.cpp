// pm: command-line driver for the particle-method DSL.
//   pm check|ir|run|opt <file.pm> [options]
// Exit codes: 0 success, 1 diagnostics (or no marks for opt),
// 2 I/O or internal error, 3 runtime failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pm/check.hpp"
#include "pm/diag.hpp"
#include "pm/fpopt/optimize.hpp"
#include "pm/lowering.hpp"
#include "pm/parser.hpp"
#include "pm/printer.hpp"
#include "pm/runtime/engine.hpp"
#include "pm/runtime/error.hpp"

namespace {

struct Config {
  std::string command;
  std::string source_path;
  std::vector<std::string> overrides;  // name=value
  std::string params_file;
  std::string out_dir = "out";
  uint64_t seed = 0;
  int threads = 1;
  int io_every = 100;
  std::string format = "text";
  bool apply = false;
};

constexpr int kOk = 0;
constexpr int kDiagnostics = 1;
constexpr int kInternal = 2;
constexpr int kRuntime = 3;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

std::string dir_of(const std::string& path) {
  size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

void print_diags(const pm::DiagnosticSink& sink, const Config& cfg) {
  std::vector<pm::Diagnostic> diags = sink.all();
  std::stable_sort(diags.begin(), diags.end(),
                   [](const pm::Diagnostic& a, const pm::Diagnostic& b) {
                     return a.span.before(b.span);
                   });
  for (const auto& d : diags) {
    std::string line = cfg.format == "json-lines"
                           ? pm::format_diagnostic_json(d, cfg.source_path)
                           : pm::format_diagnostic(d, cfg.source_path);
    std::fprintf(stderr, "%s\n", line.c_str());
  }
}

// Parses "name=value" pairs plus an optional key = value file.
bool collect_params(const Config& cfg, std::map<std::string, double>& out,
                    std::string& error) {
  auto add = [&](const std::string& text) {
    size_t eq = text.find('=');
    if (eq == std::string::npos) {
      error = "malformed parameter override '" + text + "' (expected name=value)";
      return false;
    }
    std::string name = text.substr(0, eq);
    std::string value = text.substr(eq + 1);
    // Trim surrounding blanks so file entries like "k = 0.05" work.
    auto trim = [](std::string& s) {
      size_t b = s.find_first_not_of(" \t");
      size_t e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(name);
    trim(value);
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (name.empty() || end == value.c_str() || *end != '\0') {
      error = "malformed parameter override '" + text + "'";
      return false;
    }
    out[name] = v;
    return true;
  };

  if (!cfg.params_file.empty()) {
    std::string text;
    if (!read_file(cfg.params_file, text)) {
      error = "cannot read parameter file " + cfg.params_file;
      return false;
    }
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      size_t b = line.find_first_not_of(" \t");
      if (b == std::string::npos || line[b] == '#') continue;
      if (!add(line)) return false;
    }
  }
  for (const auto& o : cfg.overrides)
    if (!add(o)) return false;
  return true;
}

// Shared front half: parse + static checks. Returns exit code; on 0 the
// module and checked module are populated.
int load_and_check(const Config& cfg, pm::ParseResult& parsed,
                   pm::check::CheckedModule& cm) {
  std::string source;
  if (!read_file(cfg.source_path, source)) {
    std::fprintf(stderr, "pm: cannot read %s\n", cfg.source_path.c_str());
    return kInternal;
  }
  parsed = pm::parse_source(source);
  if (!parsed.module || parsed.diags.has_errors()) {
    print_diags(parsed.diags, cfg);
    return kDiagnostics;
  }
  cm = pm::check::check_module(*parsed.module, dir_of(cfg.source_path));
  if (!cm.ok()) {
    print_diags(cm.diags, cfg);
    return kDiagnostics;
  }
  return kOk;
}

int cmd_check(const Config& cfg) {
  pm::ParseResult parsed;
  pm::check::CheckedModule cm;
  return load_and_check(cfg, parsed, cm);
}

int cmd_ir(const Config& cfg) {
  pm::ParseResult parsed;
  pm::check::CheckedModule cm;
  if (int rc = load_and_check(cfg, parsed, cm)) return rc;
  pm::lower::ExecutionPlan plan = pm::lower::build_plan(cm);
  if (!plan.ok) {
    print_diags(plan.diags, cfg);
    return kDiagnostics;
  }
  std::fputs(pm::lower::print_plan(plan).c_str(), stdout);
  return kOk;
}

int cmd_run(const Config& cfg) {
  pm::ParseResult parsed;
  pm::check::CheckedModule cm;
  if (int rc = load_and_check(cfg, parsed, cm)) return rc;
  pm::lower::ExecutionPlan plan = pm::lower::build_plan(cm);
  if (!plan.ok) {
    print_diags(plan.diags, cfg);
    return kDiagnostics;
  }
  pm::rt::RunOptions opts;
  std::string err;
  if (!collect_params(cfg, opts.params, err)) {
    std::fprintf(stderr, "pm: %s\n", err.c_str());
    return kInternal;
  }
  opts.out_dir = cfg.out_dir;
  opts.base_dir = dir_of(cfg.source_path);
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;
  opts.io_every = cfg.io_every;
  try {
    pm::rt::RunResult res = pm::rt::run(plan, opts);
    std::fprintf(stdout, "%ld steps, %zu snapshots, %.3f s total\n",
                 res.steps_executed, res.snapshot_files.size(),
                 res.phase_seconds.count("total") ? res.phase_seconds.at("total")
                                                  : 0.0);
    return kOk;
  } catch (const pm::rt::RuntimeError& e) {
    pm::Diagnostic d{e.code(), pm::Severity::Error, e.span(), e.what()};
    std::string line = cfg.format == "json-lines"
                           ? pm::format_diagnostic_json(d, cfg.source_path)
                           : pm::format_diagnostic(d, cfg.source_path);
    std::fprintf(stderr, "%s\n", line.c_str());
    if (e.step() >= 0) std::fprintf(stderr, "pm: failed at step %ld\n", e.step());
    return kRuntime;
  }
}

int cmd_opt(const Config& cfg) {
  pm::ParseResult parsed;
  pm::check::CheckedModule cm;
  if (int rc = load_and_check(cfg, parsed, cm)) return rc;
  try {
    std::vector<pm::fpopt::Mark> marks = pm::fpopt::collect_marked(*parsed.module);
    if (marks.empty()) {
      std::fprintf(stderr,
                   "pm: no @optimize marks in %s (mark an equation or "
                   "assignment to analyze it)\n",
                   cfg.source_path.c_str());
      return kDiagnostics;
    }
    std::vector<pm::fpopt::Analysis> analyses;
    for (const auto& m : marks)
      analyses.push_back(pm::fpopt::analyze_mark(m, 256, cfg.seed));

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    std::string report_path =
        cfg.out_dir + "/" + parsed.module->name + ".fpopt.txt";
    std::ofstream report(report_path);
    if (!report) {
      std::fprintf(stderr, "pm: cannot write %s\n", report_path.c_str());
      return kInternal;
    }
    report << pm::fpopt::format_report(analyses);
    std::fprintf(stdout, "wrote %s (%zu mark%s)\n", report_path.c_str(),
                 analyses.size(), analyses.size() == 1 ? "" : "s");

    if (cfg.apply) {
      for (const auto& a : analyses)
        pm::fpopt::apply_annotation(*parsed.module, a.id, a,
                                    dir_of(cfg.source_path));
      std::string out_path =
          cfg.out_dir + "/" + parsed.module->name + ".opt.pm";
      std::ofstream out(out_path);
      if (!out) {
        std::fprintf(stderr, "pm: cannot write %s\n", out_path.c_str());
        return kInternal;
      }
      out << pm::print_module(*parsed.module);
      std::fprintf(stdout, "wrote %s\n", out_path.c_str());
    }
    return kOk;
  } catch (const pm::fpopt::FpoptError& e) {
    std::fprintf(stderr, "pm: %s\n", e.what());
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle-method DSL compiler and runtime"};
  app.require_subcommand(1);

  Config cfg;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", cfg.source_path, "source .pm file")->required();
    sub->add_option("-p,--param", cfg.overrides,
                    "parameter override name=value (repeatable)");
    sub->add_option("--params", cfg.params_file, "key = value parameter file");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--threads", cfg.threads, "worker thread count");
    sub->add_option("--io-every", cfg.io_every, "snapshot cadence in steps");
    sub->add_option("--format", cfg.format, "diagnostic format")
        ->check(CLI::IsMember({"text", "json-lines"}));
  };

  CLI::App* check = app.add_subcommand("check", "static analysis only");
  add_common(check);
  CLI::App* ir = app.add_subcommand("ir", "print the lowered execution plan");
  add_common(ir);
  CLI::App* run = app.add_subcommand("run", "execute the simulation");
  add_common(run);
  CLI::App* opt = app.add_subcommand("opt", "floating-point accuracy analysis");
  add_common(opt);
  opt->add_flag("--apply", cfg.apply, "substitute winners and re-check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kInternal : kOk;
  }

  try {
    if (check->parsed()) return cmd_check(cfg);
    if (ir->parsed()) return cmd_ir(cfg);
    if (run->parsed()) return cmd_run(cfg);
    if (opt->parsed()) return cmd_opt(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pm: internal error: %s\n", e.what());
    return kInternal;
  }
  return kInternal;
}
