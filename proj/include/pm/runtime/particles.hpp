#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pm::rt {

// Axis-aligned simulation domain. Periodic axes wrap positions into
// [lo, hi) and use minimum-image distances.
struct DomainBox {
  int dim = 2;
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
  std::array<bool, 3> periodic{false, false, false};

  double edge(int axis) const { return hi[axis] - lo[axis]; }
  double min_edge() const {
    double m = edge(0);
    for (int a = 1; a < dim; ++a) m = std::min(m, edge(a));
    return m;
  }
};

// Minimum-image displacement a - b, written to out[0..dim).
void minimum_image(const DomainBox& box, const double* a, const double* b,
                   double* out);

struct Property {
  int arity = 1;
  std::vector<double> data;   // count * arity, particle-major
  std::vector<double> delta;  // accumulation scratch, same layout
};

// Structure-of-arrays particle storage: positions plus named property
// columns, with parallel delta buffers for pairwise accumulation.
struct ParticleSet {
  DomainBox box;
  size_t count = 0;
  std::vector<double> pos;   // count * dim, particle-major
  std::vector<double> dpos;  // position deltas
  double spacing = 0.0;      // inter-particle spacing h for grid layouts
  std::vector<std::string> prop_order;
  std::map<std::string, Property> props;

  int dim() const { return box.dim; }
  double* position(size_t p) { return &pos[p * box.dim]; }
  const double* position(size_t p) const { return &pos[p * box.dim]; }

  Property& add_prop(const std::string& name, int arity);
  Property* find(const std::string& name);
  const Property* find(const std::string& name) const;

  void zero_deltas();
};

// Grid layout: counts[a] >= 2 particles per axis at spacing edge/n,
// anchored at the low corner (periodic-consistent). Throws BadSpec.
ParticleSet create_grid(const DomainBox& box, const std::vector<long>& counts);

// n particles placed uniformly at random (seeded, reproducible).
ParticleSet create_random(const DomainBox& box, size_t n, uint64_t seed);

// Reads a whitespace- or comma-separated numeric table. Columns are
// mapped by name: x, y, z fill positions; anything else fills the named
// property (with an optional [i] component suffix). Properties must be
// added to `ps` before the call. Throws IoError / BadSpec.
void load_columns(ParticleSet& ps, const std::string& file,
                  const std::vector<std::string>& columns);

// Wraps positions on periodic axes into [lo, hi); idempotent;
// non-periodic axes are untouched.
void apply_bc(ParticleSet& ps);

}  // namespace pm::rt
