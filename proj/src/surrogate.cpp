#include "bileveler/surrogate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "bileveler/error.hpp"

namespace bileveler {
namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double SurrogateModel::operator()(std::span<const double> x) const {
  if (!trained()) throw Error(ErrorCode::UntrainedSurrogate, "surrogate has no centers");
  if (x.size() != dimension()) throw Error(ErrorCode::DimensionMismatch, "surrogate queried with wrong dimension");
  double v = tail_constant;
  for (std::size_t i = 0; i < linear_tail.size(); ++i) v += linear_tail[i] * x[i];
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double r = distance(x, centers[k]) / kernel_width;
    v += weights[k] * std::exp(-r * r);
  }
  return v;
}

SurrogateModel fit_phi_surrogate(const std::vector<PhiSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::DegenerateSamples, "no samples");
  const std::size_t d = samples.front().x.size();
  std::vector<PhiSample> uniq;
  for (const PhiSample& s : samples) {
    if (s.x.size() != d) throw Error(ErrorCode::DimensionMismatch, "samples have mixed dimensions");
    auto same = std::find_if(uniq.begin(), uniq.end(), [&](const PhiSample& u) { return u.x == s.x; });
    if (same == uniq.end()) {
      uniq.push_back(s);
    } else if (std::abs(same->phi - s.phi) > 1e-12 * (1.0 + std::abs(s.phi))) {
      throw Error(ErrorCode::DegenerateSamples, "repeated sample point with conflicting values");
    }
  }
  const std::size_t n = uniq.size();
  if (n < 2) throw Error(ErrorCode::DegenerateSamples, "need at least two distinct samples");

  SurrogateModel m;
  std::vector<double> dists;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dists.push_back(distance(uniq[i].x, uniq[j].x));
  std::sort(dists.begin(), dists.end());
  const std::size_t mid = dists.size() / 2;
  m.kernel_width = dists.size() % 2 ? dists[mid] : 0.5 * (dists[mid - 1] + dists[mid]);

  Eigen::MatrixXd P(n, d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    P(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) P(i, j + 1) = uniq[i].x[j];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> tail_lu(P);
  tail_lu.setThreshold(1e-10);
  const bool linear = static_cast<std::size_t>(tail_lu.rank()) == d + 1;
  const std::size_t t = linear ? d + 1 : 1;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + t, n + t);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + t);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double r = distance(uniq[i].x, uniq[j].x) / m.kernel_width;
      A(i, j) = std::exp(-r * r);
    }
    for (std::size_t k = 0; k < t; ++k) A(i, n + k) = A(n + k, i) = P(i, k);
    rhs(i) = uniq[i].phi;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd sol = lu.solve(rhs);
  for (int round = 0; round < 3; ++round) sol += lu.solve(rhs - A * sol);

  for (std::size_t i = 0; i < n; ++i) {
    m.centers.push_back(uniq[i].x);
    m.weights.push_back(sol(i));
  }
  m.tail_constant = sol(n);
  if (linear)
    for (std::size_t j = 0; j < d; ++j) m.linear_tail.push_back(sol(n + 1 + j));
  return m;
}

}  // namespace bileveler
