#include "pm/runtime/cell_list.hpp"

#include <algorithm>
#include <cmath>

#include "pm/runtime/error.hpp"

namespace pm::rt {

CellList::CellList(const ParticleSet& ps, double cutoff, double skin)
    : cutoff_(cutoff), skin_(skin) {
  if (cutoff <= 0.0)
    throw RuntimeError("E6001", "neighbor cutoff must be positive");
  rebuild(ps);
}

void CellList::rebuild(const ParticleSet& ps) {
  const DomainBox& box = ps.box;
  double reach = cutoff_ + skin_;
  if (reach > 0.5 * box.min_edge())
    throw RuntimeError("E6003",
                       "cutoff " + std::to_string(reach) +
                           " exceeds half the smallest box edge " +
                           std::to_string(0.5 * box.min_edge()));

  const int d = box.dim;
  const size_t n = ps.count;

  // Cell grid: edge >= reach per axis.
  std::array<long, 3> ncell{1, 1, 1};
  std::array<double, 3> cell_edge{0, 0, 0};
  long total_cells = 1;
  for (int ax = 0; ax < d; ++ax) {
    ncell[ax] = std::max<long>(1, static_cast<long>(box.edge(ax) / reach));
    cell_edge[ax] = box.edge(ax) / static_cast<double>(ncell[ax]);
    total_cells *= ncell[ax];
  }

  auto cell_of = [&](const double* x) {
    long c = 0;
    for (int ax = d - 1; ax >= 0; --ax) {
      double r = (x[ax] - box.lo[ax]) / cell_edge[ax];
      long i = static_cast<long>(std::floor(r));
      i = std::clamp(i, 0L, ncell[ax] - 1);
      c = c * ncell[ax] + i;
    }
    return c;
  };

  // Bucket particles by cell (counting sort, deterministic order).
  std::vector<size_t> cell_count(total_cells + 1, 0);
  std::vector<long> pcell(n);
  for (size_t p = 0; p < n; ++p) {
    pcell[p] = cell_of(ps.position(p));
    ++cell_count[pcell[p] + 1];
  }
  for (long c = 0; c < total_cells; ++c) cell_count[c + 1] += cell_count[c];
  std::vector<uint32_t> bucket(n);
  {
    std::vector<size_t> cursor(cell_count.begin(), cell_count.end() - 1);
    for (size_t p = 0; p < n; ++p)
      bucket[cursor[pcell[p]]++] = static_cast<uint32_t>(p);
  }

  auto cell_index = [&](std::array<long, 3> ci) {
    long c = 0;
    for (int ax = d - 1; ax >= 0; --ax) {
      long i = ci[ax];
      if (box.periodic[ax]) {
        i = ((i % ncell[ax]) + ncell[ax]) % ncell[ax];
      } else if (i < 0 || i >= ncell[ax]) {
        return -1L;
      }
      c = c * ncell[ax] + i;
    }
    return c;
  };

  double r2max = reach * reach;
  offsets_.assign(n + 1, 0);
  indices_.clear();
  std::vector<uint32_t> mine;
  std::array<double, 3> dx{};
  for (size_t p = 0; p < n; ++p) {
    mine.clear();
    std::array<long, 3> base{0, 0, 0};
    {
      long c = pcell[p];
      for (int ax = 0; ax < d; ++ax) {
        base[ax] = c % ncell[ax];
        c /= ncell[ax];
      }
    }
    std::array<long, 3> off{-1, -1, -1};
    if (d == 2) off[2] = 0;
    for (;;) {
      std::array<long, 3> ci{base[0] + off[0], base[1] + off[1],
                             base[2] + (d == 3 ? off[2] : 0)};
      long c = cell_index(ci);
      if (c >= 0) {
        // Small grids can alias the same cell through periodic wrap;
        // visiting it twice would duplicate neighbors, so dedup below
        // via sort+unique.
        for (size_t k = cell_count[c]; k < cell_count[c + 1]; ++k) {
          uint32_t q = bucket[k];
          if (q == p) continue;
          minimum_image(box, ps.position(p), ps.position(q), dx.data());
          double r2 = 0;
          for (int ax = 0; ax < d; ++ax) r2 += dx[ax] * dx[ax];
          if (r2 <= r2max) mine.push_back(q);
        }
      }
      int ax = 0;
      for (; ax < d; ++ax) {
        if (++off[ax] <= 1) break;
        off[ax] = -1;
      }
      if (ax == d) break;
    }
    std::sort(mine.begin(), mine.end());
    mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
    indices_.insert(indices_.end(), mine.begin(), mine.end());
    offsets_[p + 1] = indices_.size();
  }

  build_pos_ = ps.pos;
  build_box_ = box;
}

void CellList::ensure_fresh(const ParticleSet& ps) const {
  if (ps.pos.size() != build_pos_.size())
    throw RuntimeError("E6004", "neighbor list built for a different set");
  double limit = 0.5 * skin_;
  const int d = ps.box.dim;
  std::array<double, 3> dx{};
  for (size_t p = 0; p < ps.count; ++p) {
    minimum_image(ps.box, ps.position(p), &build_pos_[p * d], dx.data());
    double r2 = 0;
    for (int ax = 0; ax < d; ++ax) r2 += dx[ax] * dx[ax];
    if (r2 > limit * limit)
      throw RuntimeError("E6004",
                         "neighbor list is stale: particle " +
                             std::to_string(p) + " moved beyond the skin");
  }
}

}  // namespace pm::rt
