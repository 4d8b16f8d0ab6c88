#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pm/lowering.hpp"
#include "pm/runtime/particles.hpp"

namespace pm::rt {

struct RunOptions {
  std::map<std::string, double> params;  // overrides for declared params
  std::string out_dir = "out";
  std::string base_dir = ".";  // resolves data files named in the program
  uint64_t seed = 0;
  int threads = 1;
  int io_every = 100;  // io-write cadence inside the timeloop
  bool write_snapshots = true;
  bool write_stats = true;
};

struct RunResult {
  std::map<std::string, ParticleSet> lists;  // final particle state
  std::map<std::string, double> phase_seconds;
  long steps_executed = 0;
  std::vector<std::string> snapshot_files;
};

// Executes the plan start to finish. Throws RuntimeError (E6xxx) on
// failure; the error carries the source span and timeloop step where
// available. Identical plan + params + seed give bitwise-identical
// snapshots.
RunResult run(const lower::ExecutionPlan& plan, const RunOptions& opts);

}  // namespace pm::rt
