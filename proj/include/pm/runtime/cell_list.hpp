#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pm/runtime/particles.hpp"

namespace pm::rt {

// Cell-list neighbor search with precomputed per-particle neighbor lists
// (CSR layout). Guarantees: for every pair with minimum-image distance
// <= cutoff, each particle appears in the other's list; no self entries;
// each list is sorted ascending for reproducible accumulation order.
class CellList {
public:
  // Throws CutoffTooLarge if cutoff + skin exceeds half the smallest box
  // edge (minimum-image validity). The skin extends the search radius so
  // small moves do not stale the list.
  CellList(const ParticleSet& ps, double cutoff, double skin = 0.0);

  double cutoff() const { return cutoff_; }
  double skin() const { return skin_; }
  size_t particle_count() const { return offsets_.size() - 1; }

  std::span<const uint32_t> neighbors(size_t p) const {
    return {indices_.data() + offsets_[p], offsets_[p + 1] - offsets_[p]};
  }

  // Throws StaleList if any particle moved more than skin/2 since build
  // (with zero skin, any move at all counts).
  void ensure_fresh(const ParticleSet& ps) const;

  void rebuild(const ParticleSet& ps);

private:
  double cutoff_ = 0.0;
  double skin_ = 0.0;
  std::vector<size_t> offsets_;
  std::vector<uint32_t> indices_;
  std::vector<double> build_pos_;
  DomainBox build_box_;
};

}  // namespace pm::rt
