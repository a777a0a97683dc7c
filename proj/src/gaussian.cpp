#include "gkf/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gkf {

namespace {

constexpr Index kExactEigenLimit = 128;
constexpr int kInverseIterations = 30;
constexpr double kIndefiniteScale = 1e-8;

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + " must be square");
  }
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_diagonal(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

double rayleigh_min_estimate(const Matrix& m, const Eigen::LLT<Matrix>& llt) {
  const Index n = m.rows();
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
  v.normalize();
  for (int it = 0; it < kInverseIterations; ++it) {
    v = llt.solve(v);
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    v /= norm;
  }
  return v.dot(m * v);
}

}  // namespace

Matrix symmetrize(const Matrix& m) {
  require_square(m, "matrix");
  return 0.5 * (m + m.transpose());
}

std::optional<AsymmetryLocation> find_asymmetry(const Matrix& m, double rel_tol) {
  require_square(m, "matrix");
  const double tol = rel_tol * max_abs(m);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = i + 1; j < m.cols(); ++j) {
      const double diff = std::abs(m(i, j) - m(j, i));
      if (diff > tol || !std::isfinite(diff)) return AsymmetryLocation{i, j, diff};
    }
  }
  return std::nullopt;
}

double jitter_floor(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return kJitterScale * m.trace() / static_cast<double>(m.rows());
}

double smallest_eigenvalue(const Matrix& m) {
  require_square(m, "matrix");
  if (m.rows() == 0) return 0.0;
  if (m.rows() > kExactEigenLimit) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) return rayleigh_min_estimate(m, llt);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SpdFactor::SpdFactor(const Matrix& m) {
  require_square(m, "matrix");
  const Index n = m.rows();
  if (n == 0) return;
  if (!m.allFinite()) throw NumericalError("matrix has non-finite entries");
  const double tr = m.trace();
  if (!(tr > 0.0)) throw NumericalError("matrix is not invertible (non-positive trace)");
  const double floor = jitter_floor(m);
  min_eig_ = smallest_eigenvalue(m);
  if (min_eig_ < -kIndefiniteScale * tr / static_cast<double>(n)) {
    throw NumericalError("matrix is indefinite (smallest eigenvalue " + std::to_string(min_eig_) +
                         ")");
  }
  if (min_eig_ < floor) jitter_ = floor + std::max(0.0, -min_eig_);
  if (jitter_ > 0.0) {
    Matrix loaded = m;
    loaded.diagonal().array() += jitter_;
    llt_.compute(loaded);
  } else {
    llt_.compute(m);
  }
  if (llt_.info() != Eigen::Success) {
    // An inverse-iteration estimate can overshoot; fall back to the exact floor.
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    min_eig_ = es.eigenvalues().minCoeff();
    jitter_ = floor + std::max(0.0, -min_eig_);
    Matrix loaded = m;
    loaded.diagonal().array() += jitter_;
    llt_.compute(loaded);
    if (llt_.info() != Eigen::Success) throw NumericalError("Cholesky factorization failed");
  }
}

Matrix SpdFactor::solve(const Matrix& rhs) const {
  if (rhs.rows() != dim()) throw DimensionError("solve: right-hand side has wrong row count");
  if (dim() == 0) return Matrix(0, rhs.cols());
  return llt_.solve(rhs);
}

Vector SpdFactor::solve(const Vector& rhs) const {
  if (rhs.size() != dim()) throw DimensionError("solve: right-hand side has wrong length");
  if (dim() == 0) return Vector(0);
  return llt_.solve(rhs);
}

Matrix SpdFactor::inverse() const {
  if (dim() == 0) return Matrix(0, 0);
  return symmetrize(llt_.solve(Matrix::Identity(dim(), dim())));
}

double SpdFactor::log_det() const {
  if (dim() == 0) return 0.0;
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Matrix inverse_spd(const Matrix& m) { return SpdFactor(m).inverse(); }

GaussianDensity::GaussianDensity(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  require_square(cov_, "covariance");
  if (cov_.rows() != mean_.size()) throw DimensionError("mean and covariance sizes differ");
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw std::invalid_argument("Gaussian parameters must be finite");
  }
  if (auto bad = find_asymmetry(cov_)) {
    throw std::invalid_argument("covariance is not symmetric at (" + std::to_string(bad->row) +
                                ", " + std::to_string(bad->col) + ")");
  }
  cov_ = symmetrize(cov_);
}

GaussianDensity GaussianDensity::standard(Index dim) {
  return GaussianDensity(Vector::Zero(dim), Matrix::Identity(dim, dim));
}

InfoGaussian::InfoGaussian(Matrix info_matrix, Vector info_vector)
    : info_matrix_(std::move(info_matrix)), info_vector_(std::move(info_vector)) {
  require_square(info_matrix_, "information matrix");
  if (info_matrix_.rows() != info_vector_.size()) {
    throw DimensionError("information matrix and vector sizes differ");
  }
  if (auto bad = find_asymmetry(info_matrix_)) {
    throw std::invalid_argument("information matrix is not symmetric at (" +
                                std::to_string(bad->row) + ", " + std::to_string(bad->col) + ")");
  }
  info_matrix_ = symmetrize(info_matrix_);
}

InfoGaussian InfoGaussian::from_moments(const GaussianDensity& g) {
  const SpdFactor f(g.cov());
  return InfoGaussian(f.inverse(), f.solve(g.mean()));
}

GaussianDensity InfoGaussian::to_moments() const {
  const SpdFactor f(info_matrix_);
  return GaussianDensity(f.solve(info_vector_), f.inverse());
}

LinearMap::LinearMap(Matrix matrix) : matrix_(std::move(matrix)) {
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(matrix_.rows()));
  std::vector<bool> used(static_cast<std::size_t>(matrix_.cols()), false);
  for (Index i = 0; i < matrix_.rows(); ++i) {
    Index col = -1;
    for (Index j = 0; j < matrix_.cols(); ++j) {
      const double v = matrix_(i, j);
      if (v == 0.0) continue;
      if (v != 1.0 || col >= 0) return;
      col = j;
    }
    if (col < 0 || used[static_cast<std::size_t>(col)]) return;
    used[static_cast<std::size_t>(col)] = true;
    picked.push_back(col);
  }
  selected_ = std::move(picked);
}

LinearMap LinearMap::selection(std::vector<Index> indices, Index cols) {
  Matrix m = Matrix::Zero(static_cast<Index>(indices.size()), cols);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= cols) throw DimensionError("selection index out of range");
    m(static_cast<Index>(r), indices[r]) = 1.0;
  }
  LinearMap map(std::move(m));
  if (!map.is_selection()) throw std::invalid_argument("selection indices must be distinct");
  return map;
}

LinearMap LinearMap::identity(Index dim) { return LinearMap(Matrix::Identity(dim, dim)); }

const std::vector<Index>& LinearMap::selected() const {
  if (!selected_) throw std::invalid_argument("linear map is not a selection map");
  return *selected_;
}

GaussianDensity product(const GaussianDensity& g1, const GaussianDensity& g2) {
  if (g1.dim() != g2.dim()) throw DimensionError("product: dimension mismatch");
  if (g1.dim() == 0) return g1;
  // Both factors must be usable as divisors even though the stable form
  // below never inverts them individually.
  SpdFactor{g1.cov()};
  SpdFactor{g2.cov()};
  const SpdFactor sum(g1.cov() + g2.cov());
  const Matrix gain = sum.solve(g1.cov()).transpose();  // Sigma1 (Sigma1 + Sigma2)^-1
  Vector mean = g1.mean() + gain * (g2.mean() - g1.mean());
  Matrix cov = symmetrize(g1.cov() - gain * g1.cov());
  return GaussianDensity(std::move(mean), std::move(cov));
}

GaussianDensity marginalize(const GaussianDensity& g, const LinearMap& sel) {
  if (!sel.is_selection()) throw std::invalid_argument("marginalize: requires a selection map");
  if (sel.cols() != g.dim()) throw DimensionError("marginalize: selection width != dimension");
  const auto& idx = sel.selected();
  const auto k = static_cast<Index>(idx.size());
  Vector mean(k);
  Matrix cov(k, k);
  for (Index a = 0; a < k; ++a) {
    mean(a) = g.mean()(idx[static_cast<std::size_t>(a)]);
    for (Index b = 0; b < k; ++b) {
      cov(a, b) = g.cov()(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
  }
  return GaussianDensity(std::move(mean), std::move(cov));
}

GaussianDensity marginalize_schur(const GaussianDensity& g, const LinearMap& sel) {
  if (!sel.is_selection()) throw std::invalid_argument("marginalize_schur: requires a selection map");
  if (sel.cols() != g.dim()) throw DimensionError("marginalize_schur: selection width != dimension");
  const auto& keep = sel.selected();
  std::vector<bool> kept(static_cast<std::size_t>(g.dim()), false);
  for (Index i : keep) kept[static_cast<std::size_t>(i)] = true;
  std::vector<Index> drop;
  for (Index i = 0; i < g.dim(); ++i) {
    if (!kept[static_cast<std::size_t>(i)]) drop.push_back(i);
  }
  const InfoGaussian info = InfoGaussian::from_moments(g);
  const Matrix& lam = info.info_matrix();
  const Vector& eta = info.info_vector();
  const auto o = static_cast<Index>(drop.size());
  Matrix lkk = lam(keep, keep);
  Vector ek = eta(keep);
  if (o > 0) {
    const Matrix lko = lam(keep, drop);
    const SpdFactor loo(lam(drop, drop));
    lkk -= lko * loo.solve(Matrix(lko.transpose()));
    ek -= lko * loo.solve(Vector(eta(drop)));
  }
  return InfoGaussian(symmetrize(lkk), ek).to_moments();
}

GaussianDensity linear_transform(const GaussianDensity& g, const LinearMap& a) {
  if (a.cols() != g.dim()) throw DimensionError("linear_transform: map width != dimension");
  return GaussianDensity(a.matrix() * g.mean(), symmetrize(a.matrix() * g.cov() * a.matrix().transpose()));
}

double cross_entropy(const GaussianDensity& g1, const GaussianDensity& g2) {
  if (g1.dim() != g2.dim()) throw DimensionError("cross_entropy: dimension mismatch");
  const Index d = g1.dim();
  if (d == 0) return 0.0;
  const SpdFactor f2(g2.cov());
  const Vector diff = g1.mean() - g2.mean();
  const double trace_term = f2.solve(g1.cov()).trace() + diff.dot(f2.solve(diff));
  return 0.5 * trace_term + 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) +
         0.5 * f2.log_det();
}

double entropy(const GaussianDensity& g) {
  const Index d = g.dim();
  if (d == 0) return 0.0;
  const SpdFactor f(g.cov());
  return 0.5 * static_cast<double>(d) * (1.0 + std::log(2.0 * std::numbers::pi)) + 0.5 * f.log_det();
}

double kl_divergence(const GaussianDensity& g1, const GaussianDensity& g2) {
  if (g1.dim() != g2.dim()) throw DimensionError("kl_divergence: dimension mismatch");
  const Index d = g1.dim();
  if (d == 0) return 0.0;
  const SpdFactor f1(g1.cov());
  const SpdFactor f2(g2.cov());
  const Vector diff = g1.mean() - g2.mean();
  const double quad = f2.solve(g1.cov()).trace() + diff.dot(f2.solve(diff));
  return 0.5 * (quad - static_cast<double>(d) + f2.log_det() - f1.log_det());
}

GaussianDensity condition_on_linear_observation(const GaussianDensity& prior, const LinearMap& m,
                                                const Matrix& noise_cov, const Vector& x) {
  if (m.cols() != prior.dim()) throw DimensionError("condition: operator width != prior dimension");
  require_square(noise_cov, "noise covariance");
  if (noise_cov.rows() != m.rows() || x.size() != m.rows()) {
    throw DimensionError("condition: operator rows, noise and data sizes differ");
  }
  if (m.rows() == 0) return prior;
  const Matrix& mm = m.matrix();
  const Matrix pm_t = prior.cov() * mm.transpose();
  const SpdFactor innovation(symmetrize(mm * pm_t + noise_cov));
  const Matrix gain = innovation.solve(Matrix(pm_t.transpose())).transpose();
  Vector mean = prior.mean() + gain * (x - mm * prior.mean());
  Matrix cov = symmetrize(prior.cov() - gain * pm_t.transpose());
  return GaussianDensity(std::move(mean), std::move(cov));
}

Matrix stable_sum_inverse(const Matrix& q, const Matrix& r) {
  require_square(q, "Q");
  require_square(r, "R");
  if (q.rows() != r.rows()) throw DimensionError("stable_sum_inverse: size mismatch");
  if (q.rows() == 0) return q;
  Eigen::FullPivLU<Matrix> lu(q + r);
  if (!lu.isInvertible()) throw NumericalError("stable_sum_inverse: Q + R is singular");
  return symmetrize(q - q * lu.solve(q));
}

double mgf_eval(const GaussianDensity& g, const Vector& lambda) {
  if (lambda.size() != g.dim()) throw DimensionError("mgf_eval: dimension mismatch");
  return std::exp(lambda.dot(g.mean()) + 0.5 * lambda.dot(g.cov() * lambda));
}

Matrix symmetric_sqrt(const Matrix& m) {
  require_square(m, "matrix");
  if (is_diagonal(m)) {
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i) out(i, i) = std::sqrt(std::max(0.0, m(i, i)));
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix sample(const GaussianDensity& g, std::uint64_t seed, Index count) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(g.dim(), count);
  for (Index c = 0; c < count; ++c) {
    for (Index i = 0; i < g.dim(); ++i) z(i, c) = normal(rng);
  }
  Matrix draws = symmetric_sqrt(g.cov()) * z;
  draws.colwise() += g.mean();
  return draws;
}

Vector sample(const GaussianDensity& g, std::uint64_t seed) { return sample(g, seed, 1).col(0); }

}  // namespace gkf
