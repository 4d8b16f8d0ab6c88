#pragma once

#include <cstdint>
#include <vector>

#include "pm/fpopt/fexpr.hpp"

namespace pm::fpopt {

// Sampling description for the free variables of one expression.
// Variables without a declared range are sampled exponent-uniformly over
// the finite doubles (uniform over bit patterns); declared ranges sample
// uniformly in value. A half-open range [lo, inf) samples
// exponent-uniformly over finite doubles >= lo.
struct SamplePlan {
  std::vector<VarBinding> vars;
  int count = 256;
  uint64_t seed = 0;
};

// points[i] holds one value per plan variable, in plan order.
struct SampleSet {
  std::vector<std::string> var_names;
  std::vector<std::vector<double>> points;
};

struct ErrorEstimate {
  std::vector<double> bits;  // per sample, in [0, 64]
  double mean = 0.0;
  int samples = 0;
};

// Evaluates in IEEE double precision.
double eval_double(const FExpr& e, const SampleSet& s, size_t point);

// Evaluates in a >= 256-bit extended-precision oracle and rounds the
// result to double. Returns NaN when the value is undefined (domain
// error) or infinite at full precision.
double eval_oracle(const FExpr& e, const SampleSet& s, size_t point);

// log2(1 + ulp_distance(approx, exact)), capped at 64. Non-finite or NaN
// disagreements count as 64; agreement (including equal infinities) as 0.
double bits_of_error(double approx, double exact);

// Draws plan.count samples for which the oracle value of `e` is defined,
// resampling on domain errors. Throws FpoptError("NoValidSamples") if
// fewer than count/10 valid samples are found in 100*count attempts.
SampleSet draw_samples(const FExpr& e, const SamplePlan& plan);

// Error of `e` on an existing sample set. Samples where the oracle of
// `e` itself is undefined score 64 bits.
ErrorEstimate estimate_on(const FExpr& e, const SampleSet& s);

// Convenience: draw samples for `e`, then estimate on them.
ErrorEstimate estimate_error(const FExpr& e, const SamplePlan& plan);

}  // namespace pm::fpopt
