#include "pm/runtime/integrate.hpp"

namespace pm::rt {

void euler_step(const OdeRhs& f, std::vector<double>& y, double t, double dt) {
  std::vector<double> k(y.size());
  f(t, y, k);
  for (size_t i = 0; i < y.size(); ++i) y[i] += dt * k[i];
}

void rk4_step(const OdeRhs& f, std::vector<double>& y, double t, double dt) {
  const size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);

  f(t, y, k1);
  for (size_t i = 0; i < n; ++i) stage[i] = y[i] + 0.5 * dt * k1[i];
  f(t + 0.5 * dt, stage, k2);
  for (size_t i = 0; i < n; ++i) stage[i] = y[i] + 0.5 * dt * k2[i];
  f(t + 0.5 * dt, stage, k3);
  for (size_t i = 0; i < n; ++i) stage[i] = y[i] + dt * k3[i];
  f(t + dt, stage, k4);

  for (size_t i = 0; i < n; ++i)
    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace pm::rt
