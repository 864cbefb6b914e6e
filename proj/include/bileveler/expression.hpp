#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace bileveler {

enum class Modifier { None, Abs };

struct Factor {
  std::size_t var = 0;
  int power = 1;

  friend bool operator==(const Factor&, const Factor&) = default;
};

// coeff * modifier(prod_k point[var_k]^power_k). The abs modifier wraps only the
// product; the coefficient stays outside.
struct Monomial {
  double coeff = 0.0;
  std::vector<Factor> factors;
  Modifier modifier = Modifier::None;

  int total_degree() const;
  int power_of(std::size_t var) const;
  bool contains(std::size_t var) const { return power_of(var) > 0; }

  friend bool operator==(const Monomial&, const Monomial&) = default;
};

// Sentinel reported by degree queries for abs-modified terms.
inline constexpr int kInfiniteDegree = std::numeric_limits<int>::max();

// constant + sum of monomials. Construction canonicalizes: factors sorted by
// variable index with repeated indices merged, zero-coefficient terms dropped,
// and like terms combined. Instances are immutable.
class PolyExpression {
 public:
  PolyExpression() = default;
  explicit PolyExpression(double constant, std::vector<Monomial> terms = {});

  static PolyExpression variable(std::size_t var, double coeff = 1.0);
  static PolyExpression power(std::size_t var, int exponent, double coeff = 1.0);

  double constant() const { return constant_; }
  std::span<const Monomial> terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  // Smallest point dimension this expression can be evaluated on.
  std::size_t min_dimension() const;

  double evaluate(std::span<const double> point) const;
  std::vector<double> gradient(std::span<const double> point) const;

  // Symbolic partial derivative. Throws Structural if an abs term contains var.
  PolyExpression derivative(std::size_t var) const;

  // Maximum total degree of the subset's variables within any monomial;
  // kInfiniteDegree if an abs term touches the subset.
  int degree_in_subset(std::span<const std::size_t> subset) const;
  int degree_in(std::size_t var) const;

  // Replaces variable i with values[i] where engaged and re-indexes survivors
  // through new_index[i]. Abs terms keep their modifier on the unbound part.
  PolyExpression substitute(std::span<const std::optional<double>> values,
                            std::span<const std::size_t> new_index) const;

  // Re-indexes every variable through new_index.
  PolyExpression remap(std::span<const std::size_t> new_index) const;

  // Affine coefficients over `dimension` variables, or nullopt if any term is
  // nonlinear or abs-modified.
  struct Affine {
    std::vector<double> coeffs;
    double constant = 0.0;
  };
  std::optional<Affine> affine(std::size_t dimension) const;

  PolyExpression operator-() const;
  friend PolyExpression operator+(const PolyExpression& a, const PolyExpression& b);
  friend PolyExpression operator-(const PolyExpression& a, const PolyExpression& b);
  friend PolyExpression operator*(double s, const PolyExpression& a);
  // Polynomial product. Throws Structural when either side holds abs terms.
  friend PolyExpression operator*(const PolyExpression& a, const PolyExpression& b);

  friend bool operator==(const PolyExpression&, const PolyExpression&) = default;

 private:
  double constant_ = 0.0;
  std::vector<Monomial> terms_;
};

// Convenience free functions mirroring the member API.
inline double evaluate(const PolyExpression& e, std::span<const double> point) {
  return e.evaluate(point);
}
inline std::vector<double> gradient(const PolyExpression& e, std::span<const double> point) {
  return e.gradient(point);
}
inline int degree_in_subset(const PolyExpression& e, std::span<const std::size_t> subset) {
  return e.degree_in_subset(subset);
}

}  // namespace bileveler
