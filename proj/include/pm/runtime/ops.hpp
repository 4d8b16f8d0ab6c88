#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "pm/runtime/cell_list.hpp"
#include "pm/runtime/particles.hpp"

namespace pm::rt {

// Particle Strength Exchange discretization of the Laplacian with a
// second-order Gaussian kernel:
//   Q_eps f(p) = eps^-2 * sum_q (f_q - f_p) * eta_eps(x_p - x_q) * V_q
// with V_q = h^d and eta_eps(x) = eps^-d * (4 / pi^(d/2)) * exp(-|x|^2/eps^2).
// Per particle, the weights are renormalized so the discrete second
// moment matches the continuous one (the operator is exact on
// quadratics); this removes the lattice quadrature bias at eps ~ h.
// Weights depend only on the geometry, so they are computed once and
// reused for every field and integration stage. On uniform layouts the
// weight matrix is symmetric, which makes the exchange conservative:
// sum_p Q f(p) = 0.
class PseOperator {
public:
  // eps ~ particle spacing; the neighbor cutoff should be >= 4*eps.
  PseOperator(const ParticleSet& ps, const CellList& nl, double eps);

  // out[p] = Q_eps f(p) for a scalar field given as a contiguous array.
  void apply(const std::vector<double>& f, std::vector<double>& out) const;

  double eps() const { return eps_; }

private:
  double eps_;
  std::vector<size_t> offsets_;
  std::vector<uint32_t> neighbor_;
  std::vector<double> weight_;
};

// Convenience single-shot form.
std::vector<double> pse_laplacian(const ParticleSet& ps,
                                  const std::vector<double>& field,
                                  const CellList& nl, double eps);

// Pair interaction: receives the minimum-image displacement x_p - x_q
// and its squared length; writes contributions for particle p into the
// delta buffers of `ps`.
using InteractionKernel =
    std::function<void(ParticleSet& ps, size_t p, size_t q, const double* dx,
                       double r2)>;

// Accumulates kernel contributions into the (pre-zeroed) delta buffers.
// Iteration order is fixed: p ascending, q ascending within each
// neighbor list, so results are bitwise reproducible.
void pairwise_accumulate(ParticleSet& ps, const CellList& nl,
                         const InteractionKernel& kernel);

// Lennard-Jones force and energy; accumulates into the deltas of the
// "F" (force, arity d) and "E" (potential energy, arity 1) properties.
//   F_vec = 24*eps*r_vec*(2*sigma^12/rs^7 - sigma^6/rs^4), rs = |r_vec|^2
//   E     = 4*eps*((sigma/r)^12 - (sigma/r)^6)
// Pair energy is split half/half so sum_p E_p is the total potential.
// Pairs beyond r_c contribute nothing.
InteractionKernel lj_kernel(double eps, double sigma, double r_c);

// Gray-Scott reaction-diffusion right-hand side at one particle, given
// the field values and the discretized Laplacians dU, dV:
//   du/dt = Du*dU - U*V^2 + F*(1 - U)
//   dv/dt = Dv*dV + U*V^2 - (F + k)*V
struct GrayScottRhs {
  double Du, Dv, F, k;
  std::pair<double, double> operator()(double U, double V, double dU,
                                       double dV) const {
    return {Du * dU - U * V * V + F * (1.0 - U),
            Dv * dV + U * V * V - (F + k) * V};
  }
};

}  // namespace pm::rt
