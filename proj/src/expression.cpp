#include "bileveler/expression.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bileveler/error.hpp"

namespace bileveler {
namespace {

double ipow(double base, int exponent) {
  double result = 1.0;
  for (int k = 0; k < exponent; ++k) result *= base;
  return result;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double product(const std::vector<Factor>& factors, std::span<const double> point) {
  double p = 1.0;
  for (const Factor& f : factors) p *= ipow(point[f.var], f.power);
  return p;
}

void canonicalize_factors(std::vector<Factor>& factors) {
  std::sort(factors.begin(), factors.end(),
            [](const Factor& a, const Factor& b) { return a.var < b.var; });
  std::vector<Factor> merged;
  merged.reserve(factors.size());
  for (const Factor& f : factors) {
    if (f.power < 0) throw Error(ErrorCode::Structural, "negative power in monomial");
    if (f.power == 0) continue;
    if (!merged.empty() && merged.back().var == f.var)
      merged.back().power += f.power;
    else
      merged.push_back(f);
  }
  factors = std::move(merged);
}

}  // namespace

int Monomial::total_degree() const {
  int d = 0;
  for (const Factor& f : factors) d += f.power;
  return d;
}

int Monomial::power_of(std::size_t var) const {
  for (const Factor& f : factors)
    if (f.var == var) return f.power;
  return 0;
}

PolyExpression::PolyExpression(double constant, std::vector<Monomial> terms) : constant_(constant) {
  for (Monomial& m : terms) {
    canonicalize_factors(m.factors);
    if (m.factors.empty()) {
      // |1| == 1, so a factor-free abs term is a plain constant.
      constant_ += m.coeff;
      continue;
    }
    auto like = std::find_if(terms_.begin(), terms_.end(), [&](const Monomial& t) {
      return t.modifier == m.modifier && t.factors == m.factors;
    });
    if (like != terms_.end())
      like->coeff += m.coeff;
    else
      terms_.push_back(std::move(m));
  }
  std::erase_if(terms_, [](const Monomial& t) { return t.coeff == 0.0; });
}

PolyExpression PolyExpression::variable(std::size_t var, double coeff) {
  return power(var, 1, coeff);
}

PolyExpression PolyExpression::power(std::size_t var, int exponent, double coeff) {
  return PolyExpression(0.0, {Monomial{coeff, {Factor{var, exponent}}, Modifier::None}});
}

std::size_t PolyExpression::min_dimension() const {
  std::size_t dim = 0;
  for (const Monomial& m : terms_)
    for (const Factor& f : m.factors) dim = std::max(dim, f.var + 1);
  return dim;
}

double PolyExpression::evaluate(std::span<const double> point) const {
  if (point.size() < min_dimension())
    throw Error(ErrorCode::DimensionMismatch,
                "point has " + std::to_string(point.size()) + " components, expression needs " +
                    std::to_string(min_dimension()));
  double value = constant_;
  for (const Monomial& m : terms_) {
    double p = product(m.factors, point);
    value += m.coeff * (m.modifier == Modifier::Abs ? std::abs(p) : p);
  }
  return value;
}

std::vector<double> PolyExpression::gradient(std::span<const double> point) const {
  if (point.size() < min_dimension())
    throw Error(ErrorCode::DimensionMismatch,
                "point has " + std::to_string(point.size()) + " components, expression needs " +
                    std::to_string(min_dimension()));
  std::vector<double> grad(point.size(), 0.0);
  for (const Monomial& m : terms_) {
    double scale = m.coeff;
    if (m.modifier == Modifier::Abs) scale *= sign_of(product(m.factors, point));
    if (scale == 0.0) continue;
    for (std::size_t k = 0; k < m.factors.size(); ++k) {
      double partial = m.factors[k].power * ipow(point[m.factors[k].var], m.factors[k].power - 1);
      for (std::size_t j = 0; j < m.factors.size(); ++j)
        if (j != k) partial *= ipow(point[m.factors[j].var], m.factors[j].power);
      grad[m.factors[k].var] += scale * partial;
    }
  }
  return grad;
}

PolyExpression PolyExpression::derivative(std::size_t var) const {
  std::vector<Monomial> out;
  for (const Monomial& m : terms_) {
    int p = m.power_of(var);
    if (p == 0) continue;
    if (m.modifier == Modifier::Abs)
      throw Error(ErrorCode::Structural,
                  "symbolic derivative of an abs term in variable " + std::to_string(var));
    Monomial d{m.coeff * p, {}, Modifier::None};
    for (const Factor& f : m.factors) {
      if (f.var != var)
        d.factors.push_back(f);
      else if (p > 1)
        d.factors.push_back(Factor{var, p - 1});
    }
    out.push_back(std::move(d));
  }
  return PolyExpression(0.0, std::move(out));
}

int PolyExpression::degree_in_subset(std::span<const std::size_t> subset) const {
  int best = 0;
  for (const Monomial& m : terms_) {
    int d = 0;
    for (const Factor& f : m.factors)
      if (std::find(subset.begin(), subset.end(), f.var) != subset.end()) d += f.power;
    if (d > 0 && m.modifier == Modifier::Abs) return kInfiniteDegree;
    best = std::max(best, d);
  }
  return best;
}

int PolyExpression::degree_in(std::size_t var) const {
  const std::size_t subset[] = {var};
  return degree_in_subset(subset);
}

PolyExpression PolyExpression::substitute(std::span<const std::optional<double>> values,
                                          std::span<const std::size_t> new_index) const {
  double constant = constant_;
  std::vector<Monomial> out;
  for (const Monomial& m : terms_) {
    double bound = 1.0;
    Monomial rest{m.coeff, {}, m.modifier};
    for (const Factor& f : m.factors) {
      if (f.var < values.size() && values[f.var].has_value()) {
        bound *= ipow(*values[f.var], f.power);
      } else {
        if (f.var >= new_index.size())
          throw Error(ErrorCode::DimensionMismatch, "substitute: variable index out of range");
        rest.factors.push_back(Factor{new_index[f.var], f.power});
      }
    }
    rest.coeff *= (m.modifier == Modifier::Abs) ? std::abs(bound) : bound;
    if (rest.factors.empty())
      constant += rest.coeff;
    else
      out.push_back(std::move(rest));
  }
  return PolyExpression(constant, std::move(out));
}

PolyExpression PolyExpression::remap(std::span<const std::size_t> new_index) const {
  std::vector<Monomial> out = terms_;
  for (Monomial& m : out)
    for (Factor& f : m.factors) {
      if (f.var >= new_index.size())
        throw Error(ErrorCode::DimensionMismatch, "remap: variable index out of range");
      f.var = new_index[f.var];
    }
  return PolyExpression(constant_, std::move(out));
}

std::optional<PolyExpression::Affine> PolyExpression::affine(std::size_t dimension) const {
  Affine a{std::vector<double>(dimension, 0.0), constant_};
  for (const Monomial& m : terms_) {
    if (m.modifier == Modifier::Abs || m.total_degree() != 1) return std::nullopt;
    std::size_t v = m.factors.front().var;
    if (v >= dimension) throw Error(ErrorCode::DimensionMismatch, "affine: index out of range");
    a.coeffs[v] += m.coeff;
  }
  return a;
}

PolyExpression PolyExpression::operator-() const { return -1.0 * *this; }

PolyExpression operator+(const PolyExpression& a, const PolyExpression& b) {
  std::vector<Monomial> terms = a.terms_;
  terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
  return PolyExpression(a.constant_ + b.constant_, std::move(terms));
}

PolyExpression operator-(const PolyExpression& a, const PolyExpression& b) { return a + (-b); }

PolyExpression operator*(double s, const PolyExpression& a) {
  std::vector<Monomial> terms = a.terms_;
  for (Monomial& m : terms) m.coeff *= s;
  return PolyExpression(s * a.constant_, std::move(terms));
}

PolyExpression operator*(const PolyExpression& a, const PolyExpression& b) {
  auto has_abs = [](const PolyExpression& e) {
    return std::any_of(e.terms_.begin(), e.terms_.end(),
                       [](const Monomial& m) { return m.modifier == Modifier::Abs; });
  };
  if (has_abs(a) || has_abs(b))
    throw Error(ErrorCode::Structural, "product of abs-modified expressions is not a polynomial");
  std::vector<Monomial> terms;
  for (const Monomial& ma : a.terms_) {
    terms.push_back(Monomial{ma.coeff * b.constant_, ma.factors, Modifier::None});
    for (const Monomial& mb : b.terms_) {
      Monomial prod{ma.coeff * mb.coeff, ma.factors, Modifier::None};
      prod.factors.insert(prod.factors.end(), mb.factors.begin(), mb.factors.end());
      terms.push_back(std::move(prod));
    }
  }
  for (const Monomial& mb : b.terms_)
    terms.push_back(Monomial{a.constant_ * mb.coeff, mb.factors, Modifier::None});
  return PolyExpression(a.constant_ * b.constant_, std::move(terms));
}

}  // namespace bileveler
