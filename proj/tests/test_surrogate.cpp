#include <doctest.h>

#include <cmath>
#include <random>

#include "bileveler/error.hpp"
#include "bileveler/surrogate.hpp"

using namespace bileveler;

TEST_CASE("constant samples give a constant surrogate") {
  const SurrogateModel m = fit_phi_surrogate({{{0.0}, 3.5}, {{0.4}, 3.5}, {{1.0}, 3.5}});
  for (double x : {-1.0, 0.2, 0.7, 4.0}) CHECK(m(std::vector<double>{x}) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("identity samples interpolate at the nodes") {
  std::vector<PhiSample> s;
  for (int k = 0; k <= 4; ++k) s.push_back({{0.25 * k}, 0.25 * k});
  const SurrogateModel m = fit_phi_surrogate(s);
  for (const PhiSample& p : s) CHECK(std::abs(m(p.x) - p.phi) <= 1e-8);
  CHECK(m.kernel_width > 0.0);
}

TEST_CASE("leave-one-out on phi(x) = -x") {
  std::vector<PhiSample> all;
  for (int k = 0; k <= 8; ++k) all.push_back({{0.25 * k}, -0.25 * k});
  for (std::size_t out = 0; out < all.size(); ++out) {
    std::vector<PhiSample> train;
    for (std::size_t k = 0; k < all.size(); ++k)
      if (k != out) train.push_back(all[k]);
    CHECK(std::abs(fit_phi_surrogate(train)(all[out].x) - all[out].phi) < 1e-3);
  }
}

TEST_CASE("interpolation residual on scattered 2-D samples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<PhiSample> s;
  for (int k = 0; k < 25; ++k) {
    const double a = u(rng), b = u(rng);
    s.push_back({{a, b}, std::sin(a) * b + a * a});
  }
  const SurrogateModel m = fit_phi_surrogate(s);
  CHECK(m.linear_tail.size() == 2);
  for (const PhiSample& p : s) CHECK(std::abs(m(p.x) - p.phi) <= 1e-8);
}

TEST_CASE("collinear centers fall back to a constant tail") {
  const SurrogateModel m = fit_phi_surrogate({{{0.0, 0.0}, 1.0}, {{1.0, 1.0}, 2.0}, {{2.0, 2.0}, 0.0}});
  CHECK(m.linear_tail.empty());
  CHECK(m(std::vector<double>{1.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("degenerate samples") {
  auto code = [](const std::vector<PhiSample>& s) {
    try {
      fit_phi_surrogate(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Usage;
  };
  CHECK(code({{{0.5}, 1.0}, {{0.5}, 2.0}}) == ErrorCode::DegenerateSamples);
  CHECK(code({{{0.5}, 1.0}, {{0.5}, 1.0}}) == ErrorCode::DegenerateSamples);
  CHECK(code({}) == ErrorCode::DegenerateSamples);
  CHECK(code({{{0.5}, 1.0}, {{0.5, 1.0}, 1.0}}) == ErrorCode::DimensionMismatch);
  CHECK_NOTHROW(fit_phi_surrogate({{{0.5}, 1.0}, {{0.5}, 1.0}, {{0.7}, 1.0}}));
  CHECK_THROWS(SurrogateModel{}(std::vector<double>{0.0}));
}
