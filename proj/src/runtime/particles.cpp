#include "pm/runtime/particles.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pm/runtime/error.hpp"
#include "pm/runtime/rng.hpp"

namespace pm::rt {

void minimum_image(const DomainBox& box, const double* a, const double* b,
                   double* out) {
  for (int ax = 0; ax < box.dim; ++ax) {
    double d = a[ax] - b[ax];
    if (box.periodic[ax]) {
      double e = box.edge(ax);
      d -= e * std::nearbyint(d / e);
    }
    out[ax] = d;
  }
}

Property& ParticleSet::add_prop(const std::string& name, int arity) {
  auto [it, inserted] = props.try_emplace(name);
  if (inserted) {
    it->second.arity = arity;
    it->second.data.assign(count * arity, 0.0);
    prop_order.push_back(name);
  }
  return it->second;
}

Property* ParticleSet::find(const std::string& name) {
  auto it = props.find(name);
  return it == props.end() ? nullptr : &it->second;
}

const Property* ParticleSet::find(const std::string& name) const {
  auto it = props.find(name);
  return it == props.end() ? nullptr : &it->second;
}

void ParticleSet::zero_deltas() {
  dpos.assign(count * box.dim, 0.0);
  for (auto& [name, p] : props) p.delta.assign(p.data.size(), 0.0);
}

ParticleSet create_grid(const DomainBox& box, const std::vector<long>& counts) {
  if (counts.size() != static_cast<size_t>(box.dim))
    throw RuntimeError("E6001", "grid spec has " +
                                    std::to_string(counts.size()) +
                                    " axes, domain has " +
                                    std::to_string(box.dim));
  size_t n = 1;
  for (long c : counts) {
    if (c < 2)
      throw RuntimeError("E6001",
                         "grid needs at least 2 particles per axis, got " +
                             std::to_string(c));
    n *= static_cast<size_t>(c);
  }

  ParticleSet ps;
  ps.box = box;
  ps.count = n;
  ps.pos.resize(n * box.dim);
  ps.spacing = box.edge(0) / static_cast<double>(counts[0]);
  for (int ax = 1; ax < box.dim; ++ax)
    ps.spacing = std::min(ps.spacing,
                          box.edge(ax) / static_cast<double>(counts[ax]));

  std::array<long, 3> idx{0, 0, 0};
  for (size_t p = 0; p < n; ++p) {
    for (int ax = 0; ax < box.dim; ++ax) {
      double h = box.edge(ax) / static_cast<double>(counts[ax]);
      ps.pos[p * box.dim + ax] = box.lo[ax] + static_cast<double>(idx[ax]) * h;
    }
    for (int ax = 0; ax < box.dim; ++ax) {
      if (++idx[ax] < counts[ax]) break;
      idx[ax] = 0;
    }
  }
  return ps;
}

ParticleSet create_random(const DomainBox& box, size_t n, uint64_t seed) {
  ParticleSet ps;
  ps.box = box;
  ps.count = n;
  ps.pos.resize(n * box.dim);
  // Quasi-uniform spacing estimate for operator discretization.
  ps.spacing = box.min_edge() / std::pow(static_cast<double>(std::max<size_t>(n, 1)),
                                         1.0 / box.dim);
  SplitMix64 rng(seed);
  for (size_t p = 0; p < n; ++p)
    for (int ax = 0; ax < box.dim; ++ax)
      ps.pos[p * box.dim + ax] = box.lo[ax] + rng.next_double() * box.edge(ax);
  return ps;
}

namespace {

// "v[1]" -> {"v", 1}; "m" -> {"m", 0}.
std::pair<std::string, int> split_column(const std::string& col) {
  auto lb = col.find('[');
  if (lb == std::string::npos) return {col, 0};
  return {col.substr(0, lb), std::stoi(col.substr(lb + 1))};
}

}  // namespace

void load_columns(ParticleSet& ps, const std::string& file,
                  const std::vector<std::string>& columns) {
  std::ifstream in(file);
  if (!in) throw RuntimeError("E6002", "cannot open data file '" + file + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.empty()) continue;  // blank or comment-free empty line
    if (row.size() != columns.size())
      throw RuntimeError("E6002", file + ":" + std::to_string(lineno) +
                                      ": expected " +
                                      std::to_string(columns.size()) +
                                      " columns, got " +
                                      std::to_string(row.size()));
    rows.push_back(std::move(row));
  }

  ps.count = rows.size();
  ps.pos.assign(ps.count * ps.box.dim, 0.0);
  for (auto& [name, prop] : ps.props)
    prop.data.assign(ps.count * prop.arity, 0.0);

  for (size_t c = 0; c < columns.size(); ++c) {
    const std::string& col = columns[c];
    int axis = col == "x" ? 0 : col == "y" ? 1 : col == "z" ? 2 : -1;
    if (axis >= 0) {
      if (axis >= ps.box.dim)
        throw RuntimeError("E6001", "column '" + col +
                                        "' exceeds domain dimension");
      for (size_t r = 0; r < rows.size(); ++r)
        ps.pos[r * ps.box.dim + axis] = rows[r][c];
      continue;
    }
    auto [name, comp] = split_column(col);
    Property* prop = ps.find(name);
    if (!prop)
      throw RuntimeError("E6001", "column '" + col +
                                      "' names no declared property");
    if (comp < 0 || comp >= prop->arity)
      throw RuntimeError("E6001", "column '" + col + "' component out of range");
    for (size_t r = 0; r < rows.size(); ++r)
      prop->data[r * prop->arity + comp] = rows[r][c];
  }
}

void apply_bc(ParticleSet& ps) {
  const DomainBox& box = ps.box;
  for (size_t p = 0; p < ps.count; ++p) {
    double* x = ps.position(p);
    for (int ax = 0; ax < box.dim; ++ax) {
      if (!box.periodic[ax]) continue;
      double e = box.edge(ax);
      double r = x[ax] - box.lo[ax];
      r -= e * std::floor(r / e);
      if (r >= e) r -= e;  // guard against floor rounding at the edge
      x[ax] = box.lo[ax] + r;
    }
  }
}

}  // namespace pm::rt
