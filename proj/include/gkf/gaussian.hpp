#pragma once

// Finite-dimensional multinormal algebra: moment and information forms,
// selection/linear maps, products, marginals, conditioning, cross-entropy
// and the matrix identities the field update is assembled from.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gkf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a matrix that must be inverted or factored is unusable
/// (zero, indefinite, non-finite).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative size of the diagonal loading applied before inversion.
inline constexpr double kJitterScale = 1e-10;
/// Relative asymmetry tolerated in covariance / information matrices.
inline constexpr double kSymmetryTolerance = 1e-12;

/// (X + X^T) / 2.
Matrix symmetrize(const Matrix& m);

struct AsymmetryLocation {
  Index row = 0;
  Index col = 0;
  double difference = 0.0;
};

/// First (row-major) entry whose asymmetry exceeds rel_tol * max|m|.
std::optional<AsymmetryLocation> find_asymmetry(const Matrix& m,
                                                double rel_tol = kSymmetryTolerance);

/// 1e-10 * trace / d; zero for an empty matrix.
double jitter_floor(const Matrix& m);

/// Cholesky factor of a symmetric PSD matrix after the jitter floor.
///
/// If the smallest eigenvalue is below jitter_floor(m) the diagonal is
/// loaded so that it sits at the floor. Matrices with a clearly negative
/// eigenvalue (below -1e-8 * trace / d), a non-positive trace or
/// non-finite entries are rejected with NumericalError. For dimensions
/// above 128 the smallest eigenvalue is estimated by inverse iteration on
/// the Cholesky factor instead of a full eigensolve.
class SpdFactor {
 public:
  SpdFactor() = default;
  explicit SpdFactor(const Matrix& m);

  Index dim() const { return llt_.rows(); }
  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;
  Matrix inverse() const;
  double log_det() const;
  /// Diagonal loading that was added (0 when none was needed).
  double jitter() const { return jitter_; }
  /// Smallest eigenvalue (or its estimate) before loading.
  double min_eigenvalue() const { return min_eig_; }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }

 private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
  double min_eig_ = 0.0;
};

/// Smallest eigenvalue of a symmetric matrix (exact below dim 129,
/// inverse-iteration estimate above when the matrix factors).
double smallest_eigenvalue(const Matrix& m);

/// Inverse of a symmetric PSD matrix through SpdFactor, symmetrized.
Matrix inverse_spd(const Matrix& m);

/// A multinormal in moment form. Dimension zero is legal and acts as the
/// identity for products and cross-entropies.
class GaussianDensity {
 public:
  GaussianDensity() = default;
  /// Throws DimensionError on shape mismatch and std::invalid_argument if
  /// the covariance is asymmetric beyond kSymmetryTolerance or non-finite.
  GaussianDensity(Vector mean, Matrix cov);

  static GaussianDensity standard(Index dim);

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

 private:
  Vector mean_;
  Matrix cov_;
};

/// A multinormal in information form (Lambda = Sigma^-1, eta = Lambda mu).
/// The information matrix may be rank deficient.
class InfoGaussian {
 public:
  InfoGaussian() = default;
  InfoGaussian(Matrix info_matrix, Vector info_vector);

  static InfoGaussian from_moments(const GaussianDensity& g);
  /// Requires an information matrix that survives the jitter floor.
  GaussianDensity to_moments() const;

  Index dim() const { return info_vector_.size(); }
  const Matrix& info_matrix() const { return info_matrix_; }
  const Vector& info_vector() const { return info_vector_; }

 private:
  Matrix info_matrix_;
  Vector info_vector_;
};

/// A linear map between finite spaces. Selection maps (exactly one 1 per
/// row, at most one per column, zeros elsewhere) are detected on
/// construction and carry their selected column indices.
class LinearMap {
 public:
  LinearMap() = default;
  explicit LinearMap(Matrix matrix);

  static LinearMap selection(std::vector<Index> indices, Index cols);
  static LinearMap identity(Index dim);

  Index rows() const { return matrix_.rows(); }
  Index cols() const { return matrix_.cols(); }
  const Matrix& matrix() const { return matrix_; }
  bool is_selection() const { return selected_.has_value(); }
  /// Column picked by each row; throws if this is not a selection map.
  const std::vector<Index>& selected() const;

 private:
  Matrix matrix_;
  std::optional<std::vector<Index>> selected_;
};

GaussianDensity product(const GaussianDensity& g1, const GaussianDensity& g2);

/// Marginal by reading off the selected entries of mean and covariance.
GaussianDensity marginalize(const GaussianDensity& g, const LinearMap& sel);

/// Marginal through the information matrix: the kept block's marginal
/// precision is the Schur complement Lkk - Lko Loo^-1 Lok, which equals
/// the inverse of the kept covariance block.
GaussianDensity marginalize_schur(const GaussianDensity& g, const LinearMap& sel);

/// N(A mu, A Sigma A^T). The output covariance may be singular.
GaussianDensity linear_transform(const GaussianDensity& g, const LinearMap& a);

/// E_{g1}[-log g2(x)] in nats.
double cross_entropy(const GaussianDensity& g1, const GaussianDensity& g2);
double entropy(const GaussianDensity& g);
/// KL(g1 || g2) in nats.
double kl_divergence(const GaussianDensity& g1, const GaussianDensity& g2);

/// Bayes update of `prior` by x = M s + eps, eps ~ N(0, noise_cov).
/// Computed with the gain form, which equals the information-form update
/// Sigma_P^-1 = Sigma^-1 + M^T R^-1 M without inverting the prior.
GaussianDensity condition_on_linear_observation(const GaussianDensity& prior,
                                                const LinearMap& m,
                                                const Matrix& noise_cov,
                                                const Vector& x);

/// P with P^-1 = Q^-1 + R^-1, as Q - Q (Q + R)^-1 Q.
Matrix stable_sum_inverse(const Matrix& q, const Matrix& r);

/// exp(lambda . mu + lambda^T Sigma lambda / 2).
double mgf_eval(const GaussianDensity& g, const Vector& lambda);

/// `count` draws (one per column) using the symmetric square root of the
/// covariance. Deterministic in `seed`. Singular covariances are allowed.
Matrix sample(const GaussianDensity& g, std::uint64_t seed, Index count);
Vector sample(const GaussianDensity& g, std::uint64_t seed);

/// Symmetric square root V sqrt(max(D, 0)) V^T; diagonal inputs short-cut.
Matrix symmetric_sqrt(const Matrix& m);

}  // namespace gkf
