#include "pm/fpopt/analyze.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include "pm/runtime/rng.hpp"

namespace pm::fpopt {

namespace {

constexpr mpfr_prec_t kOraclePrec = 256;

// RAII wrapper for one mpfr value at oracle precision.
class Mp {
public:
  Mp() { mpfr_init2(v_, kOraclePrec); }
  ~Mp() { mpfr_clear(v_); }
  Mp(const Mp&) = delete;
  Mp& operator=(const Mp&) = delete;
  mpfr_ptr get() { return v_; }

private:
  mpfr_t v_;
};

void eval_mpfr(const FExpr& e, const std::vector<double>& point,
               const std::map<std::string, size_t>& index, mpfr_ptr out) {
  switch (e.kind) {
    case FExpr::Const:
      mpfr_set_d(out, e.value, MPFR_RNDN);
      return;
    case FExpr::Var:
      mpfr_set_d(out, point[index.at(e.name)], MPFR_RNDN);
      return;
    case FExpr::Neg: {
      eval_mpfr(*e.kids[0], point, index, out);
      mpfr_neg(out, out, MPFR_RNDN);
      return;
    }
    case FExpr::Sqrt: {
      eval_mpfr(*e.kids[0], point, index, out);
      mpfr_sqrt(out, out, MPFR_RNDN);
      return;
    }
    default: {
      Mp rhs;
      eval_mpfr(*e.kids[0], point, index, out);
      eval_mpfr(*e.kids[1], point, index, rhs.get());
      switch (e.kind) {
        case FExpr::Add: mpfr_add(out, out, rhs.get(), MPFR_RNDN); return;
        case FExpr::Sub: mpfr_sub(out, out, rhs.get(), MPFR_RNDN); return;
        case FExpr::Mul: mpfr_mul(out, out, rhs.get(), MPFR_RNDN); return;
        case FExpr::Div: mpfr_div(out, out, rhs.get(), MPFR_RNDN); return;
        case FExpr::Pow: mpfr_pow(out, out, rhs.get(), MPFR_RNDN); return;
        default: break;
      }
    }
  }
}

std::map<std::string, size_t> name_index(const SampleSet& s) {
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < s.var_names.size(); ++i) index[s.var_names[i]] = i;
  return index;
}

double eval_double_rec(const FExpr& e, const std::vector<double>& point,
                       const std::map<std::string, size_t>& index) {
  switch (e.kind) {
    case FExpr::Const: return e.value;
    case FExpr::Var: return point[index.at(e.name)];
    case FExpr::Neg: return -eval_double_rec(*e.kids[0], point, index);
    case FExpr::Sqrt: return std::sqrt(eval_double_rec(*e.kids[0], point, index));
    default: {
      double a = eval_double_rec(*e.kids[0], point, index);
      double b = eval_double_rec(*e.kids[1], point, index);
      switch (e.kind) {
        case FExpr::Add: return a + b;
        case FExpr::Sub: return a - b;
        case FExpr::Mul: return a * b;
        case FExpr::Div: return a / b;
        case FExpr::Pow: return std::pow(a, b);
        default: return std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
}

// Monotone integer ordering of doubles: consecutive representable values
// differ by one; -0.0 and +0.0 map to the same ordinal.
int64_t ordinal(double x) {
  int64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  return bits < 0 ? std::numeric_limits<int64_t>::min() - bits : bits;
}

// Counter-based random stream: the value for (seed, attempt, variable) is
// independent of evaluation order, so parallel and serial sampling agree.
uint64_t stream(uint64_t seed, uint64_t attempt, uint64_t var) {
  rt::SplitMix64 g(seed ^ (attempt * 0x9E3779B97F4A7C15ULL) ^
                   (var * 0xBF58476D1CE4E5B9ULL));
  return g.next();
}

// One candidate value for a variable; may be rejected by the caller.
double draw_value(const VarBinding& v, uint64_t raw) {
  if (v.range) {
    auto [lo, hi] = *v.range;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      double u = static_cast<double>(raw >> 11) * 0x1.0p-53;
      return lo + u * (hi - lo);
    }
    // Half-open [lo, inf): exponent-uniform over finite doubles >= lo.
    double x;
    std::memcpy(&x, &raw, sizeof x);
    x = std::fabs(x);
    return (std::isfinite(x) && x >= lo) ? x
                                         : std::numeric_limits<double>::quiet_NaN();
  }
  // Unrestricted: uniform over bit patterns, i.e. exponent-uniform.
  double x;
  std::memcpy(&x, &raw, sizeof x);
  return std::isfinite(x) ? x : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double eval_double(const FExpr& e, const SampleSet& s, size_t point) {
  return eval_double_rec(e, s.points[point], name_index(s));
}

double eval_oracle(const FExpr& e, const SampleSet& s, size_t point) {
  Mp out;
  eval_mpfr(e, s.points[point], name_index(s), out.get());
  if (mpfr_nan_p(out.get()) || mpfr_inf_p(out.get()))
    return std::numeric_limits<double>::quiet_NaN();
  return mpfr_get_d(out.get(), MPFR_RNDN);
}

double bits_of_error(double approx, double exact) {
  if (std::isnan(approx) || std::isnan(exact))
    return (std::isnan(approx) && std::isnan(exact)) ? 0.0 : 64.0;
  if (std::isinf(approx) || std::isinf(exact))
    return approx == exact ? 0.0 : 64.0;
  int64_t oa = ordinal(approx), ob = ordinal(exact);
  uint64_t ulps = oa > ob ? static_cast<uint64_t>(oa) - static_cast<uint64_t>(ob)
                          : static_cast<uint64_t>(ob) - static_cast<uint64_t>(oa);
  double bits = std::log2(1.0 + static_cast<double>(ulps));
  return std::min(bits, 64.0);
}

SampleSet draw_samples(const FExpr& e, const SamplePlan& plan) {
  SampleSet s;
  for (const auto& v : plan.vars) s.var_names.push_back(v.name);
  auto index = name_index(s);

  const uint64_t max_attempts = 100ULL * plan.count;
  std::vector<double> point(plan.vars.size());
  Mp out;
  for (uint64_t attempt = 0;
       attempt < max_attempts && s.points.size() < size_t(plan.count);
       ++attempt) {
    bool ok = true;
    for (size_t v = 0; v < plan.vars.size(); ++v) {
      point[v] = draw_value(plan.vars[v], stream(plan.seed, attempt, v));
      if (std::isnan(point[v])) ok = false;
    }
    if (!ok) continue;
    eval_mpfr(e, point, index, out.get());
    if (mpfr_nan_p(out.get()) || mpfr_inf_p(out.get())) continue;
    s.points.push_back(point);
  }
  if (s.points.size() < size_t(plan.count) / 10)
    throw FpoptError("NoValidSamples",
                     "only " + std::to_string(s.points.size()) +
                         " valid samples in " + std::to_string(max_attempts) +
                         " attempts");
  return s;
}

ErrorEstimate estimate_on(const FExpr& e, const SampleSet& s) {
  ErrorEstimate est;
  auto index = name_index(s);
  Mp out;
  for (const auto& point : s.points) {
    double approx = eval_double_rec(e, point, index);
    eval_mpfr(e, point, index, out.get());
    double exact = (mpfr_nan_p(out.get()) || mpfr_inf_p(out.get()))
                       ? std::numeric_limits<double>::quiet_NaN()
                       : mpfr_get_d(out.get(), MPFR_RNDN);
    // An undefined oracle here means the sample lies outside this
    // expression's validity domain; score the worst case.
    double bits = std::isnan(exact) ? 64.0 : bits_of_error(approx, exact);
    est.bits.push_back(bits);
  }
  est.samples = static_cast<int>(est.bits.size());
  double sum = 0.0;
  for (double b : est.bits) sum += b;
  est.mean = est.samples ? sum / est.samples : 0.0;
  return est;
}

ErrorEstimate estimate_error(const FExpr& e, const SamplePlan& plan) {
  return estimate_on(e, draw_samples(e, plan));
}

}  // namespace pm::fpopt
