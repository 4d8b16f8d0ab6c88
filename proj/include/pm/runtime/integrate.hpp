#pragma once

#include <functional>
#include <vector>

namespace pm::rt {

// y' = f(t, y). `f` receives the stage state and fills dydt (same size).
using OdeRhs = std::function<void(double t, const std::vector<double>& y,
                                  std::vector<double>& dydt)>;

// Forward Euler: y <- y + dt * f(t, y).
void euler_step(const OdeRhs& f, std::vector<double>& y, double t, double dt);

// Classical 4-stage Runge-Kutta on the stacked state vector.
void rk4_step(const OdeRhs& f, std::vector<double>& y, double t, double dt);

}  // namespace pm::rt
