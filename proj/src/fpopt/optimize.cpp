#include "pm/fpopt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>

namespace pm::fpopt {

// ---------------------------------------------------------------------------
// Simplifier.

namespace {

bool integral_const(const FExpr& e, long long* out) {
  if (e.kind != FExpr::Const) return false;
  double ip;
  if (std::modf(e.value, &ip) != 0.0 || std::fabs(e.value) > 64) return false;
  *out = static_cast<long long>(e.value);
  return true;
}

// Exact double arithmetic checks: fold constants only when the result is
// the true real value, so every simplification is mathematically sound.
bool exact_add(double a, double b, double* out) {
  double s = a + b;
  if (!std::isfinite(s)) return false;
  if (s - a != b || s - b != a) return false;
  *out = s;
  return true;
}

bool exact_mul(double a, double b, double* out) {
  double p = a * b;
  if (!std::isfinite(p)) return false;
  if (std::fma(a, b, -p) != 0.0) return false;
  *out = p;
  return true;
}

// One additive term: sign * coeff * expr, or a plain constant when
// expr is null.
struct Term {
  long long coeff = 1;  // may be negative
  FExprPtr expr;        // null: constant term with `value`
  double value = 0.0;
};

void flatten_sum(const FExprPtr& e, int sign, std::vector<Term>& terms) {
  switch (e->kind) {
    case FExpr::Add:
      flatten_sum(e->kids[0], sign, terms);
      flatten_sum(e->kids[1], sign, terms);
      return;
    case FExpr::Sub:
      flatten_sum(e->kids[0], sign, terms);
      flatten_sum(e->kids[1], -sign, terms);
      return;
    case FExpr::Neg:
      flatten_sum(e->kids[0], -sign, terms);
      return;
    case FExpr::Const:
      terms.push_back({sign, nullptr, e->value});
      return;
    default:
      terms.push_back({sign, e, 0.0});
      return;
  }
}

FExprPtr rebuild_sum(const std::vector<Term>& terms) {
  if (terms.empty()) return fconst(0.0);
  FExprPtr acc;
  for (const auto& t : terms) {
    if (!t.expr) {
      double sv = t.coeff < 0 ? -t.value : t.value;  // signed constant
      if (!acc)
        acc = fconst(sv);
      else if (sv < 0.0 || (sv == 0.0 && std::signbit(sv)))
        acc = fnode(FExpr::Sub, acc, fconst(-sv));
      else
        acc = fnode(FExpr::Add, acc, fconst(sv));
      continue;
    }
    long long mag = std::llabs(t.coeff);
    FExprPtr piece = t.expr;
    if (mag != 1)
      piece = fnode(FExpr::Mul, fconst(static_cast<double>(mag)), piece);
    if (!acc)
      acc = t.coeff < 0 ? fnode(FExpr::Neg, piece) : piece;
    else
      acc = fnode(t.coeff < 0 ? FExpr::Sub : FExpr::Add, acc, piece);
  }
  return acc;
}

// Combines like terms and folds constants; sets *changed only when a
// combination or fold occurred (pure re-association is not a change).
FExprPtr simplify_sum(const FExprPtr& e, bool* changed) {
  std::vector<Term> terms;
  flatten_sum(e, 1, terms);

  std::vector<Term> out;
  for (const auto& t : terms) {
    bool merged = false;
    for (auto& o : out) {
      if (t.expr && o.expr && fequal(*t.expr, *o.expr)) {
        o.coeff += t.coeff;
        merged = true;
        *changed = true;
        break;
      }
      if (!t.expr && !o.expr) {
        double sum;
        double tv = t.coeff < 0 ? -t.value : t.value;
        double ov = o.coeff < 0 ? -o.value : o.value;
        if (exact_add(ov, tv, &sum)) {
          o.coeff = 1;
          o.value = sum;
          merged = true;
          *changed = true;
          break;
        }
      }
    }
    if (!merged) out.push_back(t);
  }
  std::erase_if(out, [changed](const Term& t) {
    bool zero = t.expr ? t.coeff == 0 : t.value == 0.0;
    if (zero) *changed = true;
    return zero;
  });
  if (!*changed) return e;
  return rebuild_sum(out);
}

// One multiplicative factor: base ^ (halves/2), or a constant.
struct Factor {
  int halves = 2;  // exponent in units of 1/2; sign = direction
  FExprPtr base;   // null: constant with `value` (halves always +-2)
  double value = 1.0;
};

bool flatten_product(const FExprPtr& e, int halves, std::vector<Factor>& out,
                     int* sign, bool* changed);

void add_factor(const FExprPtr& e, int halves, std::vector<Factor>& out,
                int* sign, bool* changed) {
  long long n;
  if (e->kind == FExpr::Sqrt && halves % 2 == 0) {
    add_factor(e->kids[0], halves / 2, out, sign, changed);
    return;
  }
  if (e->kind == FExpr::Pow && integral_const(*e->kids[1], &n) &&
      std::llabs(n * halves) <= 256) {
    add_factor(e->kids[0], static_cast<int>(n) * halves, out, sign, changed);
    return;
  }
  if (e->kind == FExpr::Neg && std::abs(halves) == 2) {
    *sign = -*sign;
    add_factor(e->kids[0], halves, out, sign, changed);
    return;
  }
  if (e->kind == FExpr::Const && std::abs(halves) == 2) {
    out.push_back({halves, nullptr, e->value});
    return;
  }
  out.push_back({halves, e, 1.0});
}

bool flatten_product(const FExprPtr& e, int halves, std::vector<Factor>& out,
                     int* sign, bool* changed) {
  switch (e->kind) {
    case FExpr::Mul:
      flatten_product(e->kids[0], halves, out, sign, changed);
      flatten_product(e->kids[1], halves, out, sign, changed);
      return true;
    case FExpr::Div:
      flatten_product(e->kids[0], halves, out, sign, changed);
      flatten_product(e->kids[1], -halves, out, sign, changed);
      return true;
    default:
      add_factor(e, halves, out, sign, changed);
      return true;
  }
}

FExprPtr rebuild_factor(const FExprPtr& base, int halves) {
  int n = halves / 2, r = halves % 2;
  FExprPtr part;
  if (n == 1)
    part = base;
  else if (n >= 2)
    part = fnode(FExpr::Pow, base, fconst(static_cast<double>(n)));
  if (r) {
    FExprPtr s = fnode(FExpr::Sqrt, base);
    part = part ? fnode(FExpr::Mul, part, s) : s;
  }
  return part;
}

FExprPtr rebuild_product(const std::vector<Factor>& factors, int sign) {
  std::vector<FExprPtr> num, den;
  double cnum = 1.0, cden = 1.0;
  bool have_cnum = false, have_cden = false;
  for (const auto& f : factors) {
    if (!f.base) {
      if (f.halves > 0) {
        cnum = have_cnum ? cnum * f.value : f.value;
        have_cnum = true;
      } else {
        cden = have_cden ? cden * f.value : f.value;
        have_cden = true;
      }
      continue;
    }
    if (f.halves > 0)
      num.push_back(rebuild_factor(f.base, f.halves));
    else
      den.push_back(rebuild_factor(f.base, -f.halves));
  }
  if (sign < 0) {
    cnum = have_cnum ? -cnum : -1.0;
    have_cnum = true;
  }
  if (have_cnum && (cnum != 1.0 || num.empty()))
    num.insert(num.begin(), fconst(cnum));
  if (have_cden && (cden != 1.0 || den.empty()))
    den.insert(den.begin(), fconst(cden));

  auto fold = [](const std::vector<FExprPtr>& fs) -> FExprPtr {
    FExprPtr acc;
    for (const auto& f : fs) acc = acc ? fnode(FExpr::Mul, acc, f) : f;
    return acc;
  };
  FExprPtr n = fold(num), d = fold(den);
  if (!n) n = fconst(1.0);
  return d ? fnode(FExpr::Div, n, d) : n;
}

// Merges factors only when doing so removes a radical (odd half-exponents)
// or cancels between numerator and denominator; plain x*x is left alone so
// the search keeps control over evaluation order.
FExprPtr simplify_product(const FExprPtr& e, bool* changed) {
  std::vector<Factor> factors;
  int sign = 1;
  flatten_product(e, 2, factors, &sign, changed);

  std::vector<Factor> out;
  for (const auto& f : factors) {
    bool merged = false;
    for (auto& o : out) {
      if (f.base && o.base && fequal(*f.base, *o.base)) {
        bool radical = (f.halves % 2 != 0) || (o.halves % 2 != 0);
        bool cancel = (f.halves > 0) != (o.halves > 0);
        if (radical || cancel) {
          o.halves += f.halves;
          merged = true;
          *changed = true;
          break;
        }
      }
      if (!f.base && !o.base && f.halves == o.halves) {
        double prod;
        if (exact_mul(o.value, f.value, &prod)) {
          o.value = prod;
          merged = true;
          *changed = true;
          break;
        }
      }
    }
    if (!merged) out.push_back(f);
  }
  for (const auto& f : out) {
    if (!f.base && f.value == 0.0 && f.halves > 0) {
      *changed = true;
      return fconst(sign < 0 ? -0.0 : 0.0);
    }
  }
  size_t before = out.size();
  std::erase_if(out, [](const Factor& f) {
    return f.halves == 0 || (!f.base && f.value == 1.0);
  });
  if (out.size() != before) *changed = true;
  if (sign < 0) *changed = true;
  if (!*changed) return e;
  return rebuild_product(out, sign);
}

FExprPtr simplify_node(const FExprPtr& e, bool* changed);

FExprPtr simplify_children(const FExprPtr& e, bool* changed) {
  bool kid_changed = false;
  std::vector<FExprPtr> kids;
  for (const auto& k : e->kids) kids.push_back(simplify_node(k, &kid_changed));
  if (!kid_changed) return e;
  *changed = true;
  auto n = std::make_shared<FExpr>(*e);
  n->kids = std::move(kids);
  return n;
}

FExprPtr simplify_node(const FExprPtr& e0, bool* changed) {
  FExprPtr e = simplify_children(e0, changed);
  switch (e->kind) {
    case FExpr::Const:
    case FExpr::Var:
      return e;
    case FExpr::Add:
    case FExpr::Sub: {
      bool c = false;
      FExprPtr r = simplify_sum(e, &c);
      if (c) *changed = true;
      return r;
    }
    case FExpr::Mul:
    case FExpr::Div: {
      bool c = false;
      FExprPtr r = simplify_product(e, &c);
      if (c) *changed = true;
      return r;
    }
    case FExpr::Neg:
      if (e->kids[0]->kind == FExpr::Neg) {
        *changed = true;
        return e->kids[0]->kids[0];
      }
      if (e->kids[0]->kind == FExpr::Const) {
        *changed = true;
        return fconst(-e->kids[0]->value);
      }
      return e;
    case FExpr::Sqrt:
      if (e->kids[0]->kind == FExpr::Const && e->kids[0]->value >= 0.0) {
        double r = std::sqrt(e->kids[0]->value);
        if (r * r == e->kids[0]->value) {
          *changed = true;
          return fconst(r);
        }
      }
      return e;
    case FExpr::Pow: {
      long long n;
      if (integral_const(*e->kids[1], &n)) {
        if (n == 1) {
          *changed = true;
          return e->kids[0];
        }
        if (n == 0) {
          *changed = true;  // valid for base != 0
          return fconst(1.0);
        }
        if (e->kids[0]->kind == FExpr::Sqrt && n > 0 && n % 2 == 0) {
          *changed = true;  // sqrt(u)^(2k) = u^k, valid on sqrt's domain
          FExprPtr u = e->kids[0]->kids[0];
          return n == 2 ? u : fnode(FExpr::Pow, u, fconst(double(n / 2)));
        }
        if (e->kids[0]->kind == FExpr::Const && n > 0) {
          double acc = 1.0, ok = true;
          for (long long i = 0; i < n && ok; ++i)
            ok = exact_mul(acc, e->kids[0]->value, &acc);
          if (ok) {
            *changed = true;
            return fconst(acc);
          }
        }
      }
      return e;
    }
  }
  return e;
}

}  // namespace

FExprPtr simplify(const FExprPtr& e) {
  // Iterate to a fixed point; each pass strictly shrinks or is final.
  FExprPtr cur = e;
  for (int i = 0; i < 8; ++i) {
    bool changed = false;
    cur = simplify_node(cur, &changed);
    if (!changed) break;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Rewrite rules.

namespace {

bool contains_sqrt(const FExpr& e) {
  if (e.kind == FExpr::Sqrt) return true;
  for (const auto& k : e.kids)
    if (contains_sqrt(*k)) return true;
  return false;
}

using RuleOut = std::vector<std::pair<FExprPtr, const char*>>;

void add(RuleOut& out, FExprPtr e, const char* rule) {
  out.emplace_back(std::move(e), rule);
}

// All rule applications at the root of `e`. Every rule is an identity of
// real arithmetic on its validity domain (noted where narrower).
void rules_at(const FExprPtr& e, RuleOut& out) {
  const auto& k = e->kids;
  switch (e->kind) {
    case FExpr::Add: {
      const FExprPtr &a = k[0], &b = k[1];
      add(out, fnode(FExpr::Add, b, a), "commute");
      if (a->kind == FExpr::Add)
        add(out, fnode(FExpr::Add, a->kids[0], fnode(FExpr::Add, a->kids[1], b)),
            "associate");
      if (a->kind == FExpr::Sub)
        add(out, fnode(FExpr::Sub, a->kids[0], fnode(FExpr::Sub, a->kids[1], b)),
            "associate");
      if (b->kind == FExpr::Add)
        add(out, fnode(FExpr::Add, fnode(FExpr::Add, a, b->kids[0]), b->kids[1]),
            "associate");
      if (b->kind == FExpr::Sub)
        add(out, fnode(FExpr::Sub, fnode(FExpr::Add, a, b->kids[0]), b->kids[1]),
            "associate");
      if (a->kind == FExpr::Mul && b->kind == FExpr::Mul) {
        const FExprPtr &x = a->kids[0], &y = a->kids[1];
        const FExprPtr &u = b->kids[0], &v = b->kids[1];
        if (fequal(*x, *u))
          add(out, fnode(FExpr::Mul, x, fnode(FExpr::Add, y, v)), "factor");
        if (fequal(*x, *v))
          add(out, fnode(FExpr::Mul, x, fnode(FExpr::Add, y, u)), "factor");
        if (fequal(*y, *u))
          add(out, fnode(FExpr::Mul, y, fnode(FExpr::Add, x, v)), "factor");
        if (fequal(*y, *v))
          add(out, fnode(FExpr::Mul, y, fnode(FExpr::Add, x, u)), "factor");
      }
      if (a->kind == FExpr::Div && b->kind == FExpr::Div) {
        if (fequal(*a->kids[1], *b->kids[1]))
          add(out,
              fnode(FExpr::Div, fnode(FExpr::Add, a->kids[0], b->kids[0]),
                    a->kids[1]),
              "fraction");
        else
          add(out,
              fnode(FExpr::Div,
                    fnode(FExpr::Add, fnode(FExpr::Mul, a->kids[0], b->kids[1]),
                          fnode(FExpr::Mul, b->kids[0], a->kids[1])),
                    fnode(FExpr::Mul, a->kids[1], b->kids[1])),
              "fraction");
      } else if (b->kind == FExpr::Div) {
        add(out,
            fnode(FExpr::Div,
                  fnode(FExpr::Add, fnode(FExpr::Mul, a, b->kids[1]),
                        b->kids[0]),
                  b->kids[1]),
            "fraction");
      } else if (a->kind == FExpr::Div) {
        add(out,
            fnode(FExpr::Div,
                  fnode(FExpr::Add, a->kids[0],
                        fnode(FExpr::Mul, b, a->kids[1])),
                  a->kids[1]),
            "fraction");
      }
      if (contains_sqrt(*a) || contains_sqrt(*b))
        // Valid where a != b (the introduced divisor a - b is nonzero).
        add(out,
            fnode(FExpr::Div,
                  fnode(FExpr::Sub, fnode(FExpr::Mul, a, a),
                        fnode(FExpr::Mul, b, b)),
                  fnode(FExpr::Sub, a, b)),
            "conjugate");
      break;
    }
    case FExpr::Sub: {
      const FExprPtr &a = k[0], &b = k[1];
      add(out, fnode(FExpr::Neg, fnode(FExpr::Sub, b, a)), "commute");
      if (a->kind == FExpr::Add)
        add(out, fnode(FExpr::Add, a->kids[0], fnode(FExpr::Sub, a->kids[1], b)),
            "associate");
      if (a->kind == FExpr::Sub)
        add(out, fnode(FExpr::Sub, a->kids[0], fnode(FExpr::Add, a->kids[1], b)),
            "associate");
      if (b->kind == FExpr::Add)
        add(out, fnode(FExpr::Sub, fnode(FExpr::Sub, a, b->kids[0]), b->kids[1]),
            "associate");
      if (b->kind == FExpr::Sub)
        add(out, fnode(FExpr::Add, fnode(FExpr::Sub, a, b->kids[0]), b->kids[1]),
            "associate");
      if (a->kind == FExpr::Mul && b->kind == FExpr::Mul) {
        const FExprPtr &x = a->kids[0], &y = a->kids[1];
        const FExprPtr &u = b->kids[0], &v = b->kids[1];
        if (fequal(*x, *u))
          add(out, fnode(FExpr::Mul, x, fnode(FExpr::Sub, y, v)), "factor");
        if (fequal(*x, *v))
          add(out, fnode(FExpr::Mul, x, fnode(FExpr::Sub, y, u)), "factor");
        if (fequal(*y, *u))
          add(out, fnode(FExpr::Mul, y, fnode(FExpr::Sub, x, v)), "factor");
        if (fequal(*y, *v))
          add(out, fnode(FExpr::Mul, y, fnode(FExpr::Sub, x, u)), "factor");
      }
      if (a->kind == FExpr::Div && b->kind == FExpr::Div) {
        if (fequal(*a->kids[1], *b->kids[1]))
          add(out,
              fnode(FExpr::Div, fnode(FExpr::Sub, a->kids[0], b->kids[0]),
                    a->kids[1]),
              "fraction");
        else
          add(out,
              fnode(FExpr::Div,
                    fnode(FExpr::Sub, fnode(FExpr::Mul, a->kids[0], b->kids[1]),
                          fnode(FExpr::Mul, b->kids[0], a->kids[1])),
                    fnode(FExpr::Mul, a->kids[1], b->kids[1])),
              "fraction");
      } else if (b->kind == FExpr::Div) {
        add(out,
            fnode(FExpr::Div,
                  fnode(FExpr::Sub, fnode(FExpr::Mul, a, b->kids[1]),
                        b->kids[0]),
                  b->kids[1]),
            "fraction");
      } else if (a->kind == FExpr::Div) {
        add(out,
            fnode(FExpr::Div,
                  fnode(FExpr::Sub, a->kids[0],
                        fnode(FExpr::Mul, b, a->kids[1])),
                  a->kids[1]),
            "fraction");
      }
      if (contains_sqrt(*a) || contains_sqrt(*b))
        // Valid where a != -b (the introduced divisor a + b is nonzero).
        add(out,
            fnode(FExpr::Div,
                  fnode(FExpr::Sub, fnode(FExpr::Mul, a, a),
                        fnode(FExpr::Mul, b, b)),
                  fnode(FExpr::Add, a, b)),
            "conjugate");
      break;
    }
    case FExpr::Mul: {
      const FExprPtr &a = k[0], &b = k[1];
      add(out, fnode(FExpr::Mul, b, a), "commute");
      if (a->kind == FExpr::Mul)
        add(out, fnode(FExpr::Mul, a->kids[0], fnode(FExpr::Mul, a->kids[1], b)),
            "associate");
      if (a->kind == FExpr::Div)
        add(out, fnode(FExpr::Div, fnode(FExpr::Mul, a->kids[0], b), a->kids[1]),
            "associate");
      if (b->kind == FExpr::Mul)
        add(out, fnode(FExpr::Mul, fnode(FExpr::Mul, a, b->kids[0]), b->kids[1]),
            "associate");
      if (b->kind == FExpr::Div)
        add(out, fnode(FExpr::Div, fnode(FExpr::Mul, a, b->kids[0]), b->kids[1]),
            "associate");
      if (b->kind == FExpr::Add || b->kind == FExpr::Sub)
        add(out,
            fnode(b->kind, fnode(FExpr::Mul, a, b->kids[0]),
                  fnode(FExpr::Mul, a, b->kids[1])),
            "distribute");
      if (a->kind == FExpr::Add || a->kind == FExpr::Sub)
        add(out,
            fnode(a->kind, fnode(FExpr::Mul, a->kids[0], b),
                  fnode(FExpr::Mul, a->kids[1], b)),
            "distribute");
      if (a->kind == FExpr::Sqrt && b->kind == FExpr::Sqrt)
        add(out, fnode(FExpr::Sqrt, fnode(FExpr::Mul, a->kids[0], b->kids[0])),
            "sqrt-combine");
      break;
    }
    case FExpr::Div: {
      const FExprPtr &a = k[0], &b = k[1];
      if (a->kind == FExpr::Div)
        add(out, fnode(FExpr::Div, a->kids[0], fnode(FExpr::Mul, a->kids[1], b)),
            "associate");
      if (b->kind == FExpr::Div)
        add(out, fnode(FExpr::Div, fnode(FExpr::Mul, a, b->kids[1]), b->kids[0]),
            "associate");
      if (b->kind == FExpr::Mul) {
        add(out,
            fnode(FExpr::Div, fnode(FExpr::Div, a, b->kids[0]), b->kids[1]),
            "associate");
      }
      if (a->kind == FExpr::Add || a->kind == FExpr::Sub)
        add(out,
            fnode(a->kind, fnode(FExpr::Div, a->kids[0], b),
                  fnode(FExpr::Div, a->kids[1], b)),
            "distribute");
      if (a->kind == FExpr::Sqrt && b->kind == FExpr::Sqrt)
        add(out, fnode(FExpr::Sqrt, fnode(FExpr::Div, a->kids[0], b->kids[0])),
            "sqrt-combine");
      break;
    }
    case FExpr::Pow: {
      long long n;
      if (integral_const(*k[1], &n) && n >= 2 && n <= 32) {
        add(out, fnode(FExpr::Mul, k[0], fnode(FExpr::Pow, k[0], fconst(double(n - 1)))),
            "pow-expand");
        if (n >= 4 && n % 2 == 0)
          add(out,
              fnode(FExpr::Mul, fnode(FExpr::Pow, k[0], fconst(double(n / 2))),
                    fnode(FExpr::Pow, k[0], fconst(double(n / 2)))),
              "pow-split");
        if (k[0]->kind == FExpr::Mul || k[0]->kind == FExpr::Div)
          add(out,
              fnode(k[0]->kind, fnode(FExpr::Pow, k[0]->kids[0], fconst(double(n))),
                    fnode(FExpr::Pow, k[0]->kids[1], fconst(double(n)))),
              "pow-distribute");
      }
      break;
    }
    case FExpr::Sqrt: {
      // Valid where both parts of the product/quotient are nonnegative.
      if (k[0]->kind == FExpr::Mul || k[0]->kind == FExpr::Div)
        add(out,
            fnode(k[0]->kind, fnode(FExpr::Sqrt, k[0]->kids[0]),
                  fnode(FExpr::Sqrt, k[0]->kids[1])),
            "sqrt-distribute");
      break;
    }
    default:
      break;
  }
}

// Rebuilds `root` with the subtree at `target` replaced by `repl`.
FExprPtr replace_at(const FExprPtr& root, const FExpr* target, FExprPtr repl) {
  if (root.get() == target) return repl;
  for (size_t i = 0; i < root->kids.size(); ++i) {
    FExprPtr r = replace_at(root->kids[i], target, repl);
    if (r != root->kids[i]) {
      auto n = std::make_shared<FExpr>(*root);
      n->kids[i] = std::move(r);
      return n;
    }
  }
  return root;
}

void all_positions(const FExprPtr& e, std::vector<FExprPtr>& out) {
  out.push_back(e);
  for (const auto& kid : e->kids) all_positions(kid, out);
}

}  // namespace

std::vector<RuleApplication> rewrite_step(const FExprPtr& e) {
  std::vector<RuleApplication> results;
  std::set<std::string> seen{to_string(*e)};
  std::vector<FExprPtr> positions;
  all_positions(e, positions);
  for (const auto& pos : positions) {
    RuleOut local;
    rules_at(pos, local);
    for (auto& [repl, rule] : local) {
      FExprPtr whole = simplify(replace_at(e, pos.get(), repl));
      std::string key = to_string(*whole);
      if (seen.insert(key).second) results.push_back({std::move(whole), rule});
    }
  }
  return results;
}

// ---------------------------------------------------------------------------
// Search.

std::vector<RewriteCandidate> search_rewrites(const FExprPtr& original,
                                              const SampleSet& samples,
                                              const SearchConfig& cfg) {
  ErrorEstimate orig_est = estimate_on(*original, samples);

  std::map<std::string, RewriteCandidate> pool;

  struct FrontierItem {
    FExprPtr expr;
    std::vector<std::string> provenance;
  };
  std::vector<FrontierItem> frontier{{original, {}}};

  // The canonical simplification of the original competes as a candidate
  // in its own right (constant folding alone can change rounding).
  FExprPtr simplified = simplify(original);
  if (to_string(*simplified) != to_string(*original)) {
    RewriteCandidate c{simplified, {"simplify"}, estimate_on(*simplified, samples)};
    pool.emplace(to_string(*simplified), c);
    frontier.push_back({simplified, {"simplify"}});
  }

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::vector<FrontierItem> next;
    for (const auto& item : frontier) {
      for (auto& app : rewrite_step(item.expr)) {
        std::string key = to_string(*app.result);
        if (key == to_string(*original) || pool.count(key)) continue;
        std::vector<std::string> prov = item.provenance;
        prov.push_back(app.rule);
        RewriteCandidate c{app.result, prov, estimate_on(*app.result, samples)};
        pool.emplace(key, c);
        next.push_back({app.result, std::move(prov)});
      }
    }

    // Pointwise filter: keep only candidates that match the best accuracy
    // (including the original's) on at least one sample point.
    size_t ns = samples.points.size();
    std::vector<double> best(orig_est.bits.begin(), orig_est.bits.end());
    for (const auto& [key, c] : pool)
      for (size_t i = 0; i < ns; ++i) best[i] = std::min(best[i], c.est.bits[i]);
    std::erase_if(pool, [&](const auto& kv) {
      for (size_t i = 0; i < ns; ++i)
        if (kv.second.est.bits[i] <= best[i]) return false;
      return true;
    });

    // Enforce the candidate cap deterministically.
    if (pool.size() > size_t(cfg.max_candidates)) {
      std::vector<std::pair<std::string, RewriteCandidate>> ranked(pool.begin(),
                                                                   pool.end());
      std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.second.est.mean != y.second.est.mean)
          return x.second.est.mean < y.second.est.mean;
        size_t ox = op_count(*x.second.expr), oy = op_count(*y.second.expr);
        if (ox != oy) return ox < oy;
        return x.first < y.first;
      });
      ranked.resize(cfg.max_candidates);
      pool.clear();
      pool.insert(ranked.begin(), ranked.end());
    }

    // Expand only surviving newcomers, best mean first.
    std::erase_if(next, [&](const FrontierItem& item) {
      return !pool.count(to_string(*item.expr));
    });
    std::sort(next.begin(), next.end(),
              [&](const FrontierItem& x, const FrontierItem& y) {
                const auto& ex = pool.at(to_string(*x.expr)).est;
                const auto& ey = pool.at(to_string(*y.expr)).est;
                if (ex.mean != ey.mean) return ex.mean < ey.mean;
                return to_string(*x.expr) < to_string(*y.expr);
              });
    if (next.size() > size_t(cfg.frontier)) next.resize(cfg.frontier);
    frontier = std::move(next);
    if (frontier.empty()) break;
  }

  std::vector<RewriteCandidate> out;
  for (auto& [key, c] : pool) out.push_back(std::move(c));
  std::sort(out.begin(), out.end(),
            [](const RewriteCandidate& x, const RewriteCandidate& y) {
              if (x.est.mean != y.est.mean) return x.est.mean < y.est.mean;
              size_t ox = op_count(*x.expr), oy = op_count(*y.expr);
              if (ox != oy) return ox < oy;
              return to_string(*x.expr) < to_string(*y.expr);
            });
  return out;
}

Analysis select_and_annotate(const std::string& id, const FExprPtr& original,
                             const ErrorEstimate& input,
                             std::vector<RewriteCandidate> candidates,
                             VarTable vars) {
  Analysis a;
  a.id = id;
  a.original = original;
  a.input = input;
  a.winner = original;
  a.output = input;
  a.vars = std::move(vars);

  for (auto& c : candidates) {
    bool better = false;
    if (c.est.mean < a.output.mean)
      better = true;
    else if (c.est.mean == a.output.mean) {
      size_t oc = op_count(*c.expr), ow = op_count(*a.winner);
      if (oc < ow || (oc == ow && to_string(*c.expr) < to_string(*a.winner)))
        better = true;
    }
    if (better) {
      a.winner = c.expr;
      a.output = c.est;
      a.provenance = c.provenance;
    }
  }
  a.improved = a.output.mean < a.input.mean;
  // Non-regression: the original always competes, so the winner can never
  // be worse on the selection sample set.
  if (a.output.mean > a.input.mean)
    throw FpoptError("RecheckFailed", "selection regressed on mark " + id);
  return a;
}

// ---------------------------------------------------------------------------
// Marks and module driving.

namespace {

void fill_ranges(VarTable& vars, const ast::SourceModule& module) {
  for (auto& v : vars.vars) {
    if (!v.source || v.source->kind != ast::ExprKind::VarAccess) continue;
    for (const auto& p : module.params)
      if (p.name == v.source->name && p.range) v.range = p.range;
  }
}

void collect_stmt(const ast::Stmt& s, const ast::SourceModule& module,
                  std::vector<Mark>& out);

void collect_body(const std::vector<ast::StmtPtr>& body,
                  const ast::SourceModule& module, std::vector<Mark>& out) {
  for (const auto& s : body) collect_stmt(*s, module, out);
}

void add_mark(const ast::Expr& e, const ast::SourceModule& module,
              std::vector<Mark>& out) {
  Mark m;
  m.id = module.name + "#" + std::to_string(out.size() + 1);
  m.expr = &e;
  m.fexpr = from_ast(e, m.vars);
  fill_ranges(m.vars, module);
  out.push_back(std::move(m));
}

void collect_stmt(const ast::Stmt& s, const ast::SourceModule& module,
                  std::vector<Mark>& out) {
  if (s.optimize) {
    const ast::Expr* e = nullptr;
    switch (s.kind) {
      case ast::StmtKind::VarInit: e = s.init.get(); break;
      case ast::StmtKind::Assign: e = s.value.get(); break;
      case ast::StmtKind::ExprStmt: e = s.expr.get(); break;
      default:
        throw FpoptError("Unsupported",
                         "@optimize must mark an expression-bearing "
                         "statement or equation");
    }
    add_mark(*e, module, out);
  }
  if (s.kind == ast::StmtKind::DeqnBlock)
    for (const auto& eq : s.equations)
      if (eq.optimize) add_mark(*eq.rhs, module, out);
  collect_body(s.body, module, out);
  collect_body(s.else_body, module, out);
}

}  // namespace

std::vector<Mark> collect_marked(const ast::SourceModule& module) {
  std::vector<Mark> out;
  collect_body(module.statements, module, out);
  return out;
}

Analysis analyze_mark(const Mark& mark, int sample_count, uint64_t seed,
                      const SearchConfig& cfg) {
  SamplePlan plan;
  for (const auto& v : mark.vars.vars)
    plan.vars.push_back(
        {v.name, v.source ? ast::clone(*v.source) : nullptr, v.range});
  plan.count = sample_count;
  plan.seed = seed;

  SampleSet samples = draw_samples(*mark.fexpr, plan);
  ErrorEstimate input = estimate_on(*mark.fexpr, samples);
  std::vector<RewriteCandidate> cands =
      search_rewrites(mark.fexpr, samples, cfg);

  VarTable vars;
  for (const auto& v : mark.vars.vars)
    vars.vars.push_back(
        {v.name, v.source ? ast::clone(*v.source) : nullptr, v.range});
  return select_and_annotate(mark.id, mark.fexpr, input, std::move(cands),
                             std::move(vars));
}

namespace {

// Locates the mutable expression slot of the n-th mark (1-based) inside a
// mutable module, mirroring collect_marked's traversal order.
ast::ExprPtr* find_mark_slot(std::vector<ast::StmtPtr>& body, size_t& counter,
                             size_t wanted) {
  for (auto& sp : body) {
    ast::Stmt& s = *sp;
    if (s.optimize) {
      ++counter;
      if (counter == wanted) {
        switch (s.kind) {
          case ast::StmtKind::VarInit: return &s.init;
          case ast::StmtKind::Assign: return &s.value;
          case ast::StmtKind::ExprStmt: return &s.expr;
          default: return nullptr;
        }
      }
    }
    if (s.kind == ast::StmtKind::DeqnBlock)
      for (auto& eq : s.equations)
        if (eq.optimize) {
          ++counter;
          if (counter == wanted) return &eq.rhs;
        }
    if (auto* r = find_mark_slot(s.body, counter, wanted)) return r;
    if (auto* r = find_mark_slot(s.else_body, counter, wanted)) return r;
  }
  return nullptr;
}

}  // namespace

void apply_annotation(ast::SourceModule& module, const std::string& id,
                      const Analysis& analysis, const std::string& base_dir) {
  std::string prefix = module.name + "#";
  if (id.rfind(prefix, 0) != 0)
    throw FpoptError("NoAnnotation", "unknown mark id " + id);
  size_t wanted = std::strtoull(id.c_str() + prefix.size(), nullptr, 10);
  size_t counter = 0;
  ast::ExprPtr* slot = find_mark_slot(module.statements, counter, wanted);
  if (!slot || !*slot)
    throw FpoptError("NoAnnotation", "unknown mark id " + id);

  ast::ExprPtr saved = std::move(*slot);
  *slot = to_ast(*analysis.winner, analysis.vars);
  (*slot)->span = saved->span;

  check::CheckedModule cm = check::check_module(module, base_dir);
  if (!cm.ok()) {
    *slot = std::move(saved);
    std::string detail;
    for (const auto& d : cm.diags.all())
      if (d.is_error()) { detail = d.message; break; }
    throw FpoptError("RecheckFailed",
                     "rewritten module no longer checks: " + detail);
  }
}

std::string format_report(const std::vector<Analysis>& analyses) {
  std::string out;
  char buf[128];
  for (const auto& a : analyses) {
    out += "mark " + a.id + "\n";
    out += "  original:  " + to_string(*a.original) + "\n";
    std::snprintf(buf, sizeof buf, "  input:     %.2f bits (mean over %d samples)\n",
                  a.input.mean, a.input.samples);
    out += buf;
    if (a.improved) {
      out += "  winner:    " + to_string(*a.winner) + "\n";
      std::snprintf(buf, sizeof buf, "  output:    %.2f bits\n", a.output.mean);
      out += buf;
      out += "  rules:     ";
      for (size_t i = 0; i < a.provenance.size(); ++i) {
        if (i) out += ", ";
        out += a.provenance[i];
      }
      out += "\n";
    } else {
      out += "  no improvement found; original kept\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace pm::fpopt
