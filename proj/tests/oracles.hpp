#pragma once

// Independent numerical oracles for the tests: Simpson quadrature in one
// and two dimensions, brute-force grid Bayes, hand-written normal
// densities and random SPD generators. Nothing here calls into the
// library's Gaussian algebra.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double simpson_weight(int i, int n) {
  if (i == 0 || i == n) return 1.0;
  return i % 2 ? 4.0 : 2.0;
}

/// Composite Simpson on [a, b] with n (even) intervals.
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) s += simpson_weight(i, n) * f(a + i * h);
  return s * h / 3.0;
}

struct Box {
  Vector lo;
  Vector hi;
};

/// Box of +-width standard deviations around a mean.
inline Box box_around(const Vector& mean, const Matrix& cov, double width) {
  Box b{mean, mean};
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double r = width * std::sqrt(cov(i, i));
    b.lo(i) -= r;
    b.hi(i) += r;
  }
  return b;
}

/// Tensor Simpson in one or two dimensions. f takes a Vector.
template <typename F>
double integrate(F&& f, const Box& box, int n) {
  const auto d = box.lo.size();
  if (d == 1) {
    Vector x(1);
    return simpson([&](double t) { x(0) = t; return f(x); }, box.lo(0), box.hi(0), n);
  }
  const double hx = (box.hi(0) - box.lo(0)) / n;
  const double hy = (box.hi(1) - box.lo(1)) / n;
  Vector x(2);
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    x(0) = box.lo(0) + i * hx;
    const double wi = simpson_weight(i, n);
    for (int j = 0; j <= n; ++j) {
      x(1) = box.lo(1) + j * hy;
      s += wi * simpson_weight(j, n) * f(x);
    }
  }
  return s * hx * hy / 9.0;
}

/// Normal density written out by hand for d = 1 or 2.
inline double log_normal_pdf(const Vector& x, const Vector& mu, const Matrix& cov) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (x.size() == 1) {
    const double v = cov(0, 0);
    const double z = x(0) - mu(0);
    return -0.5 * z * z / v - 0.5 * std::log(two_pi * v);
  }
  const double a = cov(0, 0);
  const double b = cov(0, 1);
  const double c = cov(1, 1);
  const double det = a * c - b * b;
  const double dx = x(0) - mu(0);
  const double dy = x(1) - mu(1);
  const double q = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
  return -0.5 * q - std::log(two_pi * std::sqrt(det));
}

inline double normal_pdf(const Vector& x, const Vector& mu, const Matrix& cov) {
  return std::exp(log_normal_pdf(x, mu, cov));
}

inline double normal_pdf1(double x, double mu, double var) {
  return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

struct Moments {
  double mass = 0.0;
  Vector mean;
  Matrix cov;
};

/// Mass, mean and covariance of an unnormalized density by quadrature.
template <typename F>
Moments moments(F&& f, const Box& box, int n) {
  const auto d = box.lo.size();
  Moments m;
  m.mass = integrate(f, box, n);
  m.mean = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    m.mean(i) = integrate([&](const Vector& x) { return x(i) * f(x); }, box, n) / m.mass;
  }
  m.cov = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      m.cov(i, j) = integrate([&](const Vector& x) { return (x(i) - m.mean(i)) * (x(j) - m.mean(j)) * f(x); },
                              box, n) /
                    m.mass;
      m.cov(j, i) = m.cov(i, j);
    }
  }
  return m;
}

/// E_p[-log q] by quadrature over a box around p.
inline double cross_entropy(const Vector& mp, const Matrix& sp, const Vector& mq, const Matrix& sq, int n = 400) {
  return integrate([&](const Vector& x) { return -normal_pdf(x, mp, sp) * log_normal_pdf(x, mq, sq); },
                   box_around(mp, sp, 12.0), n);
}

/// Scalar posterior moments by brute-force Bayes on a uniform grid.
struct Scalar {
  double mean = 0.0;
  double var = 0.0;
};

inline Scalar grid_bayes_1d(const std::function<double(double)>& prior, const std::function<double(double)>& like,
                            double lo, double hi, int points = 100000) {
  const double h = (hi - lo) / (points - 1);
  double z = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < points; ++i) {
    const double s = lo + i * h;
    const double w = prior(s) * like(s);
    z += w;
    m1 += w * s;
    m2 += w * s * s;
  }
  const double mean = m1 / z;
  return {mean, m2 / z - mean * mean};
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index d, double floor = 0.3) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  Matrix s = a * a.transpose() / static_cast<double>(d) + floor * Matrix::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Closed-form Gaussian KL, written independently of the library.
inline double kl_closed(const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2) {
  const Eigen::Index d = m1.size();
  const Matrix s2inv = s2.inverse();
  const Vector dm = m2 - m1;
  return 0.5 * ((s2inv * s1).trace() + dm.dot(s2inv * dm) - static_cast<double>(d) +
                std::log(s2.determinant() / s1.determinant()));
}

}  // namespace oracle
