#pragma once

// Internal: contiguous polynomial layout for hot evaluation loops, plus
// interval enclosures over boxes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bileveler/expression.hpp"

namespace bileveler::detail {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline Interval mul(Interval a, Interval b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

inline double ipow(double base, int exponent) {
  double r = 1.0;
  for (int k = 0; k < exponent; ++k) r *= base;
  return r;
}

inline Interval ipow(Interval a, int exponent) {
  const double l = ipow(a.lo, exponent), h = ipow(a.hi, exponent);
  if (exponent % 2 == 1) return {l, h};
  if (a.lo >= 0.0) return {l, h};
  if (a.hi <= 0.0) return {h, l};
  return {0.0, std::max(l, h)};
}

class FlatPoly {
 public:
  FlatPoly() = default;
  explicit FlatPoly(const PolyExpression& e) : constant_(e.constant()) {
    for (const Monomial& m : e.terms()) {
      Term t{m.coeff, m.modifier == Modifier::Abs, static_cast<std::uint32_t>(factors_.size()), 0};
      for (const Factor& f : m.factors) factors_.push_back(f);
      t.end = static_cast<std::uint32_t>(factors_.size());
      terms_.push_back(t);
    }
  }

  double eval(const double* p) const {
    double v = constant_;
    for (const Term& t : terms_) {
      double prod = 1.0;
      for (std::uint32_t k = t.begin; k < t.end; ++k) prod *= ipow(p[factors_[k].var], factors_[k].power);
      v += t.coeff * (t.abs ? std::abs(prod) : prod);
    }
    return v;
  }

  // Outward-widened enclosure of the polynomial over the box.
  Interval bound(const Interval* box) const {
    double lo = constant_, hi = constant_, scale = std::abs(constant_);
    for (const Term& t : terms_) {
      Interval prod{1.0, 1.0};
      for (std::uint32_t k = t.begin; k < t.end; ++k) prod = mul(prod, ipow(box[factors_[k].var], factors_[k].power));
      if (t.abs) {
        const double a = std::abs(prod.lo), b = std::abs(prod.hi);
        prod = (prod.lo <= 0.0 && prod.hi >= 0.0) ? Interval{0.0, std::max(a, b)}
                                                   : Interval{std::min(a, b), std::max(a, b)};
      }
      const Interval term = mul({t.coeff, t.coeff}, prod);
      lo += term.lo;
      hi += term.hi;
      scale += std::max(std::abs(term.lo), std::abs(term.hi));
    }
    const double margin = 1e-12 * scale + 1e-300;
    return {lo - margin, hi + margin};
  }

  bool empty() const { return terms_.empty(); }

 private:
  struct Term {
    double coeff;
    bool abs;
    std::uint32_t begin;
    std::uint32_t end;
  };
  double constant_ = 0.0;
  std::vector<Term> terms_;
  std::vector<Factor> factors_;
};

}  // namespace bileveler::detail
