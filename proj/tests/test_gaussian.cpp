#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gkf/gaussian.hpp"
#include "oracles.hpp"

using namespace gkf;
using doctest::Approx;

namespace {

GaussianDensity scalar(double mu, double var) {
  return GaussianDensity(Vector::Constant(1, mu), Matrix::Constant(1, 1, var));
}

GaussianDensity random_gaussian(std::mt19937_64& rng, Index d) {
  return GaussianDensity(oracle::random_vector(rng, d), oracle::random_spd(rng, d));
}

double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

const double kHalfLog2PiE = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi));

}  // namespace

TEST_CASE("jitter floor loads near-singular matrices and rejects indefinite ones") {
  Matrix m(2, 2);
  m << 1.0, 1.0, 1.0, 1.0;
  const SpdFactor f(m);
  CHECK(f.jitter() > 0.0);
  CHECK(f.jitter() == Approx(1e-10).epsilon(1e-3));
  Matrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(SpdFactor{bad}, NumericalError);
  CHECK_THROWS_AS(SpdFactor{Matrix::Zero(3, 3)}, NumericalError);
  CHECK(SpdFactor(Matrix::Identity(3, 3)).jitter() == 0.0);
}

TEST_CASE("large matrices use the estimated smallest eigenvalue") {
  std::mt19937_64 rng(3);
  // separated bottom of the spectrum so inverse iteration converges
  const Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(rng, 160, 160));
  const Matrix q = qr.householderQ();
  Vector lam = Vector::LinSpaced(160, 1.0, 10.0);
  lam(0) = 1e-3;
  const Matrix m = symmetrize(q * lam.asDiagonal() * q.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  CHECK(smallest_eigenvalue(m) == Approx(es.eigenvalues().minCoeff()).epsilon(1e-6));
  // a Rayleigh quotient never undershoots
  const Matrix clustered = oracle::random_spd(rng, 160);
  const double exact = Eigen::SelfAdjointEigenSolver<Matrix>(clustered).eigenvalues().minCoeff();
  CHECK(smallest_eigenvalue(clustered) >= exact * (1 - 1e-12));
  CHECK(smallest_eigenvalue(clustered) <= exact * 1.05);
}

TEST_CASE("GaussianDensity validates symmetry and shape") {
  Matrix asym(2, 2);
  asym << 1.0, 0.1, 0.2, 1.0;
  CHECK_THROWS_AS(GaussianDensity(Vector::Zero(2), asym), std::invalid_argument);
  CHECK_THROWS_AS(GaussianDensity(Vector::Zero(3), Matrix::Identity(2, 2)), DimensionError);
  const auto loc = find_asymmetry(asym);
  REQUIRE(loc);
  CHECK(loc->row == 0);
  CHECK(loc->col == 1);
  const GaussianDensity empty(Vector(0), Matrix(0, 0));
  CHECK(empty.dim() == 0);
}

TEST_CASE("information form round trip") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto g = random_gaussian(rng, 5);
    const auto back = InfoGaussian::from_moments(g).to_moments();
    CHECK(rel_diff(back.mean(), g.mean()) < 1e-10);
    CHECK(rel_diff(back.cov(), g.cov()) < 1e-10);
  }
}

TEST_CASE("LinearMap detects selection maps") {
  CHECK(LinearMap::identity(3).is_selection());
  const auto sel = LinearMap::selection({2, 0}, 3);
  CHECK(sel.selected() == std::vector<Index>{2, 0});
  Matrix dup(2, 2);
  dup << 1, 0, 1, 0;
  CHECK_FALSE(LinearMap(dup).is_selection());
  CHECK_THROWS(LinearMap(dup).selected());
  CHECK_THROWS(LinearMap::selection({1, 1}, 3));
}

TEST_CASE("product examples") {
  const auto p = product(scalar(0, 1), scalar(0, 1));
  CHECK(p.mean()(0) == Approx(0.0));
  CHECK(p.cov()(0, 0) == Approx(0.5));

  // Normalize the pointwise product by quadrature on [-10, 10], 1e5 nodes.
  auto f = [](double x) { return oracle::normal_pdf1(x, 0, 1) * oracle::normal_pdf1(x, 2, 1); };
  const double z = oracle::simpson(f, -10, 10, 100000);
  const double m1 = oracle::simpson([&](double x) { return x * f(x); }, -10, 10, 100000) / z;
  const double m2 = oracle::simpson([&](double x) { return x * x * f(x); }, -10, 10, 100000) / z;
  const auto q = product(scalar(0, 1), scalar(2, 1));
  CHECK(q.mean()(0) == Approx(m1).epsilon(1e-9));
  CHECK(q.cov()(0, 0) == Approx(m2 - m1 * m1).epsilon(1e-9));
  CHECK(m1 == Approx(1.0));

  const GaussianDensity a(Vector::Zero(2), Matrix::Identity(2, 2));
  const GaussianDensity b(Vector::Ones(2), Matrix::Identity(2, 2));
  const auto ab = product(a, b);
  CHECK(ab.mean()(0) == Approx(0.5));
  CHECK(ab.mean()(1) == Approx(0.5));
  CHECK(rel_diff(ab.cov(), 0.5 * Matrix::Identity(2, 2)) < 1e-14);

  CHECK_THROWS_AS(product(scalar(0, 1), a), DimensionError);
  const GaussianDensity empty(Vector(0), Matrix(0, 0));
  CHECK(product(empty, empty).dim() == 0);
}

TEST_CASE("marginalize examples") {
  Vector mu(2);
  mu << 1, 2;
  Matrix s(2, 2);
  s << 2, 1, 1, 3;
  const GaussianDensity g(mu, s);
  const auto m2 = marginalize(g, LinearMap::selection({1}, 2));
  CHECK(m2.mean()(0) == 2.0);
  CHECK(m2.cov()(0, 0) == 3.0);
  const auto all = marginalize(g, LinearMap::identity(2));
  CHECK(all.mean() == g.mean());
  CHECK(all.cov() == g.cov());
  const auto m13 = marginalize(GaussianDensity::standard(3), LinearMap::selection({0, 2}, 3));
  CHECK(m13.cov() == Matrix::Identity(2, 2));
  const auto schur = marginalize_schur(g, LinearMap::selection({0}, 2));
  CHECK(schur.mean()(0) == Approx(1.0));
  CHECK(schur.cov()(0, 0) == Approx(2.0));
  CHECK_THROWS_AS(marginalize(g, LinearMap(Matrix::Constant(1, 2, 0.5))), std::invalid_argument);
}

TEST_CASE("marginalize_schur equals marginalize on random SPD inputs") {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 100; ++i) {
    const auto g = random_gaussian(rng, 6);
    std::vector<Index> keep{0, 1, 2, 3, 4, 5};
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(3);
    const auto sel = LinearMap::selection(keep, 6);
    const auto a = marginalize(g, sel);
    const auto b = marginalize_schur(g, sel);
    CHECK(rel_diff(b.mean(), a.mean()) < 1e-10);
    CHECK(rel_diff(b.cov(), a.cov()) < 1e-10);
  }
}

TEST_CASE("marginalization chains commute") {
  std::mt19937_64 rng(5);
  const auto g = random_gaussian(rng, 6);
  const auto t = marginalize(g, LinearMap::selection({5, 1, 3, 0}, 6));
  const auto s_via_t = marginalize(t, LinearMap::selection({1, 2}, 4));
  const auto s = marginalize(g, LinearMap::selection({1, 3}, 6));
  CHECK(s_via_t.mean() == s.mean());
  CHECK(s_via_t.cov() == s.cov());
}

TEST_CASE("linear_transform examples") {
  const auto y = linear_transform(scalar(1, 1), LinearMap(Matrix::Constant(1, 1, 2.0)));
  CHECK(y.mean()(0) == 2.0);
  CHECK(y.cov()(0, 0) == 4.0);
  const auto sum = linear_transform(GaussianDensity::standard(2), LinearMap(Matrix::Ones(1, 2)));
  CHECK(sum.cov()(0, 0) == 2.0);
  Matrix dup(2, 2);
  dup << 1, 0, 1, 0;
  const auto d = linear_transform(GaussianDensity::standard(2), LinearMap(dup));
  CHECK(d.cov() == Matrix::Ones(2, 2));
  CHECK_THROWS_AS(linear_transform(scalar(0, 1), LinearMap(dup)), DimensionError);
}

TEST_CASE("cross-entropy, entropy and KL against quadrature") {
  const double ce00 = oracle::cross_entropy(Vector::Zero(1), Matrix::Identity(1, 1), Vector::Zero(1),
                                            Matrix::Identity(1, 1), 20000);
  CHECK(cross_entropy(scalar(0, 1), scalar(0, 1)) == Approx(ce00).epsilon(1e-10));
  CHECK(ce00 == Approx(1.41894).epsilon(1e-5));
  CHECK(cross_entropy(scalar(1, 1), scalar(0, 1)) == Approx(kHalfLog2PiE + 0.5).epsilon(1e-12));
  CHECK(cross_entropy(GaussianDensity::standard(2), GaussianDensity::standard(2)) ==
        Approx(2 * kHalfLog2PiE).epsilon(1e-12));
  CHECK(entropy(scalar(0, 1)) == Approx(kHalfLog2PiE).epsilon(1e-12));

  CHECK(kl_divergence(scalar(0, 1), scalar(0, 1)) == Approx(0.0));
  CHECK(kl_divergence(scalar(1, 1), scalar(0, 1)) == Approx(0.5).epsilon(1e-12));
  CHECK(kl_divergence(scalar(0, 2), scalar(0, 1)) == Approx(0.5 * (2 - 1 - std::log(2.0))).epsilon(1e-12));
  CHECK(kl_divergence(scalar(0, 2), scalar(0, 1)) != Approx(kl_divergence(scalar(0, 1), scalar(0, 2))));
}

TEST_CASE("KL is non-negative and vanishes only at equality") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_gaussian(rng, 4);
    const auto b = random_gaussian(rng, 4);
    CHECK(kl_divergence(a, b) >= -1e-10);
    CHECK(std::abs(kl_divergence(a, a)) < 1e-10);
    CHECK(kl_divergence(a, b) == Approx(oracle::kl_closed(a.mean(), a.cov(), b.mean(), b.cov())).epsilon(1e-9));
  }
}

TEST_CASE("cross-entropy is minimized at the first argument") {
  std::mt19937_64 rng(8);
  const auto g = random_gaussian(rng, 3);
  const double h = 1e-5;
  // gradient in the mean and in each covariance entry vanishes
  for (Index i = 0; i < 3; ++i) {
    Vector up = g.mean();
    Vector dn = g.mean();
    up(i) += h;
    dn(i) -= h;
    const double grad = (cross_entropy(g, GaussianDensity(up, g.cov())) - cross_entropy(g, GaussianDensity(dn, g.cov()))) /
                        (2 * h);
    CHECK(std::abs(grad) < 1e-5);
    for (Index j = 0; j <= i; ++j) {
      Matrix su = g.cov();
      Matrix sd = g.cov();
      su(i, j) += h;
      sd(i, j) -= h;
      if (i != j) {
        su(j, i) += h;
        sd(j, i) -= h;
      }
      const double gs = (cross_entropy(g, GaussianDensity(g.mean(), su)) - cross_entropy(g, GaussianDensity(g.mean(), sd))) /
                        (2 * h);
      CHECK(std::abs(gs) < 1e-5);
    }
  }
  const double base = cross_entropy(g, g);
  for (int t = 0; t < 100; ++t) {
    const Vector dm = oracle::random_vector(rng, 3, 0.05);
    Matrix ds = oracle::random_matrix(rng, 3, 3, 0.05);
    ds = symmetrize(ds);
    const GaussianDensity p(g.mean() + dm, g.cov() + ds);
    CHECK(cross_entropy(g, p) > base);
  }
}

TEST_CASE("condition_on_linear_observation examples") {
  const auto post = condition_on_linear_observation(scalar(0, 1), LinearMap::identity(1), Matrix::Identity(1, 1),
                                                    Vector::Ones(1));
  const auto bayes = oracle::grid_bayes_1d([](double s) { return oracle::normal_pdf1(s, 0, 1); },
                                           [](double s) { return oracle::normal_pdf1(1.0, s, 1); }, -12, 12);
  CHECK(post.mean()(0) == Approx(bayes.mean).epsilon(1e-8));
  CHECK(post.cov()(0, 0) == Approx(bayes.var).epsilon(1e-8));
  CHECK(post.mean()(0) == Approx(0.5));
  CHECK(post.cov()(0, 0) == Approx(0.5));

  const auto vague = condition_on_linear_observation(scalar(0.3, 1), LinearMap::identity(1),
                                                     Matrix::Constant(1, 1, 1e12), Vector::Ones(1));
  CHECK(vague.mean()(0) == Approx(0.3).epsilon(1e-10));
  CHECK(vague.cov()(0, 0) == Approx(1.0).epsilon(1e-10));

  std::mt19937_64 rng(4);
  const auto g = random_gaussian(rng, 3);
  const auto same = condition_on_linear_observation(g, LinearMap(Matrix::Zero(2, 3)), Matrix::Identity(2, 2),
                                                    Vector::Ones(2));
  CHECK(same.mean() == g.mean());
  CHECK(same.cov() == g.cov());
}

TEST_CASE("condition matches the information form") {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 30; ++t) {
    const auto g = random_gaussian(rng, 4);
    const Matrix m = oracle::random_matrix(rng, 3, 4);
    const Matrix r = oracle::random_spd(rng, 3);
    const Vector x = oracle::random_vector(rng, 3);
    const auto post = condition_on_linear_observation(g, LinearMap(m), r, x);
    const Matrix lam = g.cov().inverse() + m.transpose() * r.inverse() * m;
    const Matrix cov = lam.inverse();
    const Vector mean = cov * (g.cov().inverse() * g.mean() + m.transpose() * r.inverse() * x);
    CHECK(rel_diff(post.cov(), cov) < 1e-10);
    CHECK(rel_diff(post.mean(), mean) < 1e-10);
  }
}

TEST_CASE("stable_sum_inverse examples") {
  CHECK(stable_sum_inverse(Matrix::Constant(1, 1, 2), Matrix::Constant(1, 1, 2))(0, 0) == Approx(1.0));
  CHECK(rel_diff(stable_sum_inverse(Matrix::Identity(3, 3), Matrix::Identity(3, 3)), 0.5 * Matrix::Identity(3, 3)) <
        1e-15);
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const Matrix q = oracle::random_spd(rng, 5);
    const Matrix r = oracle::random_spd(rng, 5);
    const Matrix direct = (q.inverse() + r.inverse()).inverse();
    CHECK(rel_diff(stable_sum_inverse(q, r), direct) < 1e-9);
  }
  CHECK_THROWS_AS(stable_sum_inverse(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)), NumericalError);
}

TEST_CASE("mgf examples and moment identities") {
  std::mt19937_64 rng(29);
  const auto g = random_gaussian(rng, 3);
  CHECK(mgf_eval(g, Vector::Zero(3)) == 1.0);
  CHECK(mgf_eval(scalar(0, 1), Vector::Ones(1)) == Approx(std::exp(0.5)));
  const double h = 1e-4;
  for (Index i = 0; i < 3; ++i) {
    Vector e = Vector::Zero(3);
    e(i) = h;
    const double d1 = (mgf_eval(g, e) - mgf_eval(g, -e)) / (2 * h);
    CHECK(std::abs(d1 - g.mean()(i)) < 1e-6);
    for (Index j = 0; j < 3; ++j) {
      Vector f = Vector::Zero(3);
      f(j) = h;
      const double d2 = (mgf_eval(g, e + f) - mgf_eval(g, e - f) - mgf_eval(g, f - e) + mgf_eval(g, -e - f)) / (4 * h * h);
      CHECK(std::abs(d2 - g.mean()(i) * g.mean()(j) - g.cov()(i, j)) < 1e-5);
    }
  }
}

TEST_CASE("sampling is reproducible and matches moments") {
  std::mt19937_64 rng(31);
  const auto g = random_gaussian(rng, 3);
  const Matrix a = sample(g, 42, 100000);
  const Matrix b = sample(g, 42, 100000);
  CHECK(a == b);
  const Vector mean = a.rowwise().mean();
  const Matrix centered = a.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(a.cols() - 1);
  for (Index i = 0; i < 3; ++i) {
    const double se = std::sqrt(g.cov()(i, i) / static_cast<double>(a.cols()));
    CHECK(std::abs(mean(i) - g.mean()(i)) < 3 * se);
    for (Index j = 0; j < 3; ++j) {
      const double se_c = std::sqrt((g.cov()(i, i) * g.cov()(j, j) + g.cov()(i, j) * g.cov()(i, j)) /
                                    static_cast<double>(a.cols()));
      CHECK(std::abs(cov(i, j) - g.cov()(i, j)) < 3 * se_c);
    }
  }
  const GaussianDensity degenerate(Vector::Constant(2, 1.5), Matrix::Zero(2, 2));
  const Matrix d = sample(degenerate, 1, 10);
  CHECK((d.array() == 1.5).all());
}
