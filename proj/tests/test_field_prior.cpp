#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gkf/field_prior.hpp"
#include "oracles.hpp"

using namespace gkf;
using doctest::Approx;

TEST_CASE("BasisSet rejects duplicates and supports set algebra") {
  CHECK_THROWS_AS(BasisSet({{0, 0}, {0, 1e-12}}), std::invalid_argument);
  CHECK_THROWS_AS(BasisSet({{0, 0}, {1, 0}}, std::vector<std::int64_t>{3, 3}), std::invalid_argument);
  const BasisSet a({{0, 0}, {1, 0}, {0, 1}});
  const BasisSet b({{1, 0}, {2, 2}});
  const BasisSet u = basis_union(a, b);
  CHECK(u.size() == 4);
  CHECK(distance(u.point(3), {2, 2}) == 0.0);
  const BasisSet i = basis_intersection(a, b);
  CHECK(i.size() == 1);
  CHECK(i.is_subset_of(a));
  CHECK_FALSE(b.is_subset_of(a));
  CHECK(i.indices_in(a) == std::vector<Index>{1});
  CHECK_THROWS(b.indices_in(a));
  const auto sel = selection_map(a, i);
  CHECK(sel.selected() == std::vector<Index>{1});
  const BasisSet g = BasisSet::regular_grid({0, 0}, 2, 1, 0.5);
  CHECK(g.size() == 6);
  CHECK(*g.scale_tag() == 0.5);
  CHECK(min_spacing(g) == Approx(0.5));
}

TEST_CASE("covariance examples") {
  const ExponentialCovModel m(1.0, 1.0);
  CHECK(covariance(m, {0.3, 0.2}, {0.3, 0.2}) == 1.0);
  CHECK(covariance(m, {0, 0}, {0.6, 0.8}) == Approx(std::exp(-1.0)));
  CHECK(covariance(m, {0.1, 0.7}, {2, -1}) == covariance(m, {2, -1}, {0.1, 0.7}));
  CHECK_THROWS(ExponentialCovModel(0.0, 1.0));
  CHECK_THROWS(ExponentialCovModel(1.0, -1.0));
}

TEST_CASE("power spectrum examples") {
  const ExponentialCovModel m(1.0, 1.0);
  CHECK(power_spectrum(m, {0, 0}) == Approx(2 * std::numbers::pi));
  CHECK(power_spectrum(m, {1, 0}) == Approx(2 * std::numbers::pi / std::pow(2.0, 1.5)));
  CHECK(power_spectrum(m, {0.6, 0.8}) == Approx(power_spectrum(m, {1, 0})).epsilon(1e-15));
}

TEST_CASE("spectrum transform round trip") {
  const auto zero = verify_spectrum_transform(ExponentialCovModel(1.0, 1.0), {0.0});
  CHECK(zero.quadrature[0] == Approx(2 * std::numbers::pi).epsilon(1e-10));
  const auto c = verify_spectrum_transform(ExponentialCovModel(1.0, 1.0), {0.5, 1, 2, 5});
  CHECK(c.max_relative_error <= 1e-4);
  const auto k3 = verify_spectrum_transform(ExponentialCovModel(3.0, 1.0), {1.0});
  CHECK(k3.max_relative_error <= 1e-4);
  CHECK_THROWS(verify_spectrum_transform(ExponentialCovModel(1.0, 1.0), {-1.0}));
}

TEST_CASE("marginal_at_basis examples and kernel consistency") {
  const ExponentialCovModel m(2.0, 1.5, 0.25);
  const auto one = marginal_at_basis(m, BasisSet({{0.3, 0.3}}));
  CHECK(one.mean()(0) == 0.25);
  CHECK(one.cov()(0, 0) == 1.5);
  const auto far = marginal_at_basis(m, BasisSet({{0, 0}, {25, 0}}));
  CHECK(std::abs(far.cov()(0, 1)) < 1e-20);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<Point2> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({u(rng), u(rng)});
    const BasisSet a(pts);
    const BasisSet s({pts[5], pts[1], pts[6]});
    const auto direct = marginal_at_basis(m, s);
    const auto via = marginalize(marginal_at_basis(m, a), selection_map(a, s));
    CHECK((direct.cov() - via.cov()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((direct.mean() - via.mean()).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS(marginal_at_basis(m, BasisSet()));
}

TEST_CASE("conditional_at examples") {
  const ExponentialCovModel m(1.0, 2.0, 0.5);
  const BasisSet given({{0, 0}});
  const BasisSet query({{1, 0}});
  const Vector h = Vector::Constant(1, 1.7);
  const auto c = conditional_at(m, query, given, h);
  CHECK(c.mean()(0) == Approx(0.5 + std::exp(-1.0) * (1.7 - 0.5)));
  CHECK(c.cov()(0, 0) == Approx(2.0 * (1 - std::exp(-2.0))));
  const auto self = conditional_at(m, given, given, h);
  CHECK(self.mean()(0) == Approx(1.7));
  CHECK(std::abs(self.cov()(0, 0)) < 1e-8);
  const auto far = conditional_at(m, BasisSet({{100, 0}}), given, h);
  CHECK(far.mean()(0) == Approx(0.5));
  CHECK(far.cov()(0, 0) == Approx(2.0));
  // conditional variance never exceeds the prior variance
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    const BasisSet g({{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}});
    const BasisSet q({{u(rng), u(rng)}});
    const auto cq = conditional_at(m, q, g, Vector::Zero(3));
    CHECK(cq.cov()(0, 0) <= 2.0 + 1e-12);
  }
}

TEST_CASE("spectral sampler contracts") {
  const ExponentialCovModel m(8.0, 1.0, 0.0);
  const auto a = sample_field_spectral(m, 16, 1.0, 9);
  const auto b = sample_field_spectral(m, 16, 1.0, 9);
  CHECK(a.heights == b.heights);
  CHECK(a.max_imaginary < 1e-12);
  const auto c = sample_spectral_coefficients(m, 16, 1.0, 4);
  for (Index r = 0; r < 16; ++r) {
    for (Index s = 0; s < 16; ++s) {
      const auto conj = c.coefficients((16 - r) % 16, (16 - s) % 16);
      CHECK(c.coefficients(r, s) == std::conj(conj));
    }
  }
  CHECK_THROWS(sample_field_spectral(m, 7, 1.0, 1));
  CHECK_THROWS(sample_field_spectral(m, 6, 1.0, 1));
}

TEST_CASE("spectral sampler mean and variance over seeds") {
  const ExponentialCovModel m(8.0, 1.0, 0.3);
  const int seeds = 500;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto g = sample_field_spectral(m, 64, 1.0, 1000 + s);
    const double v = g.heights(10, 20);
    sum += v;
    sum2 += (v - 0.3) * (v - 0.3);
  }
  const double mean = sum / seeds;
  const double var = sum2 / seeds;
  // truncation-corrected target: the sum of the sampled spectral variances
  const double target = spectral_variances(m, 64, 1.0).sum();
  CHECK(std::abs(mean - 0.3) < 3 * std::sqrt(target / seeds));
  CHECK(std::abs(var - 1.0) < 0.1);
  CHECK(std::abs(var - target) / target < 0.15);
}
