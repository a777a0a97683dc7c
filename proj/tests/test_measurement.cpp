#include <doctest.h>

#include <cmath>
#include <random>

#include "gkf/engine.hpp"
#include "gkf/measurement.hpp"
#include "oracles.hpp"

using namespace gkf;
using doctest::Approx;

TEST_CASE("LinearMeasurement validation") {
  CHECK_THROWS_AS(LinearMeasurement(LinearMap::identity(2), Matrix::Identity(3, 3)), DimensionError);
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(LinearMeasurement(LinearMap::identity(2), indefinite), std::invalid_argument);
  const auto none = LinearMeasurement::none(5);
  CHECK(none.data_dim() == 0);
  CHECK(none.field_dim() == 5);
}

TEST_CASE("simulate examples") {
  std::mt19937_64 rng(1);
  const Vector truth = oracle::random_vector(rng, 4);
  const Matrix op = oracle::random_matrix(rng, 3, 4);
  const LinearMeasurement quiet(LinearMap(op), Matrix::Identity(3, 3) * 1e-12);
  CHECK((simulate(truth, quiet, 5) - op * truth).cwiseAbs().maxCoeff() < 1e-5);
  const LinearMeasurement pass(LinearMap::identity(4), Matrix::Identity(4, 4) * 1e-12);
  CHECK((simulate(Vector::Constant(4, 2.5), pass, 3).array() - 2.5).abs().maxCoeff() < 1e-5);
  CHECK(simulate(truth, quiet, 9) == simulate(truth, quiet, 9));
  CHECK_THROWS_AS(simulate(Vector::Zero(2), quiet, 1), DimensionError);

  // residual covariance over 1e4 draws within 5%
  const Matrix r = oracle::random_spd(rng, 3);
  const LinearMeasurement noisy(LinearMap(op), r);
  const int n = 10000;
  Matrix res(3, n);
  for (int i = 0; i < n; ++i) res.col(i) = simulate(truth, noisy, 100 + i) - op * truth;
  const Matrix cov = res * res.transpose() / n;
  CHECK((cov - r).cwiseAbs().maxCoeff() / r.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("linearize examples") {
  std::mt19937_64 rng(2);
  const Matrix op = oracle::random_matrix(rng, 2, 3);
  NonlinearMeasurement lin{[op](const Vector& s) { return Vector(op * s); },
                           [op](const Vector&) { return op; }, Matrix::Identity(2, 2)};
  const Vector x = oracle::random_vector(rng, 2);
  const auto l = linearize(lin, oracle::random_vector(rng, 3), x);
  CHECK((l.adjusted_x - x).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(l.measurement.op().matrix() == op);

  NonlinearMeasurement sq{[](const Vector& s) { return Vector(s.array().square()); },
                          [](const Vector& s) { return Matrix(Matrix(2.0 * s.asDiagonal())); },
                          Matrix::Identity(1, 1)};
  const auto q = linearize(sq, Vector::Ones(1), Vector::Constant(1, 0.7));
  CHECK(q.measurement.op().matrix()(0, 0) == 2.0);
  CHECK(q.adjusted_x(0) == Approx(1.7));
  CHECK(jacobian_mismatch(sq, Vector::Constant(1, 1.3)) < 1e-5);

  const auto z = linearize(sq, Vector::Zero(1), Vector::Constant(1, 0.7));
  const GaussianDensity prior(Vector::Zero(1), Matrix::Identity(1, 1));
  const auto post = condition_on_linear_observation(prior, z.measurement.op(), z.measurement.noise_cov(), z.adjusted_x);
  CHECK(post.mean() == prior.mean());
  CHECK(post.cov() == prior.cov());

  NonlinearMeasurement wrong = sq;
  wrong.jacobian_at = [](const Vector& s) { return Matrix(Matrix(3.0 * s.asDiagonal())); };
  CHECK(jacobian_mismatch(wrong, Vector::Constant(1, 1.3)) > 0.1);
}

TEST_CASE("footprint operator examples") {
  const BasisSet grid = BasisSet::regular_grid({0, 0}, 4, 4, 0.25);
  Sensor point{{{0.25, 0.5}}, 0.1};
  const auto p = build_footprint_operator(grid, point);
  CHECK(p.is_selection());
  Sensor quad{{{0.125, 0.125}}, 0.2};
  const auto q = build_footprint_operator(grid, quad);
  CHECK((q.matrix().array() == 0.25).count() == 4);
  CHECK(q.matrix().sum() == Approx(1.0));
  Sensor many{{{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.3}}, 0.3};
  const auto m = build_footprint_operator(grid, many);
  CHECK((m.matrix().array() >= 0).all());
  CHECK((m.matrix() * Vector::Constant(grid.size(), 3.0)).isApprox(Vector::Constant(3, 3.0)));
  Sensor off{{{5, 5}}, 0.1};
  CHECK_THROWS_AS(build_footprint_operator(grid, off), std::invalid_argument);
}
