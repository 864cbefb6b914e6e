#pragma once

#include <span>
#include <vector>

namespace bileveler {

struct PhiSample {
  std::vector<double> x;
  double phi = 0.0;
};

// Gaussian RBF interpolant with a polynomial tail (linear when the centers
// span the space, constant otherwise).
struct SurrogateModel {
  std::vector<std::vector<double>> centers;
  std::vector<double> weights;
  double kernel_width = 0.0;
  std::vector<double> linear_tail;  // empty when only the constant is used
  double tail_constant = 0.0;

  bool trained() const { return !centers.empty(); }
  std::size_t dimension() const { return centers.empty() ? 0 : centers.front().size(); }
  double operator()(std::span<const double> x) const;
};

// Throws DegenerateSamples for fewer than two distinct points or for a
// repeated x carrying a different phi.
SurrogateModel fit_phi_surrogate(const std::vector<PhiSample>& samples);

}  // namespace bileveler
