#pragma once

// Stationary exponential-covariance prior over height fields on the plane.

#include "gkf/gaussian.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace gkf {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& p, const Point2& q);

/// Coordinates closer than this are the same point.
inline constexpr double kPointTolerance = 1e-9;

/// Ordered set of labelled 2D points. The order is the matrix index order
/// of every Gaussian defined over the set.
class BasisSet {
 public:
  BasisSet() = default;
  /// Ids default to 0..n-1. Throws std::invalid_argument on duplicate
  /// coordinates (within kPointTolerance) or duplicate ids.
  explicit BasisSet(std::vector<Point2> points, std::optional<double> scale_tag = std::nullopt);
  BasisSet(std::vector<Point2> points, std::vector<std::int64_t> ids,
           std::optional<double> scale_tag = std::nullopt);

  /// (nx + 1) x (ny + 1) lattice with the given spacing, row-major in y,
  /// tagged with that spacing.
  static BasisSet regular_grid(Point2 origin, Index nx, Index ny, double spacing);

  Index size() const { return static_cast<Index>(points_.size()); }
  bool empty() const { return points_.empty(); }
  const Point2& point(Index i) const { return points_[static_cast<std::size_t>(i)]; }
  std::int64_t id(Index i) const { return ids_[static_cast<std::size_t>(i)]; }
  const std::vector<Point2>& points() const { return points_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const std::optional<double>& scale_tag() const { return scale_tag_; }

  std::optional<Index> find(const Point2& p) const;
  bool contains(const Point2& p) const { return find(p).has_value(); }
  bool is_subset_of(const BasisSet& other) const;
  /// Position of every point of this set inside `superset`; throws
  /// std::invalid_argument naming the first missing point.
  std::vector<Index> indices_in(const BasisSet& superset) const;

 private:
  std::vector<Point2> points_;
  std::vector<std::int64_t> ids_;
  std::optional<double> scale_tag_;
};

/// Points of `a` in order, then the points of `b` not in `a`.
BasisSet basis_union(const BasisSet& a, const BasisSet& b);
/// Points of `a` that are also in `b`, in the order of `a`.
BasisSet basis_intersection(const BasisSet& a, const BasisSet& b);
/// Selection map taking values on `from` to values on `to` (to ⊆ from).
LinearMap selection_map(const BasisSet& from, const BasisSet& to);
/// Smallest distance between two distinct points (0 for fewer than two).
double min_spacing(const BasisSet& basis);

class ExponentialCovModel {
 public:
  /// Throws std::invalid_argument unless decay_k > 0 and amplitude > 0.
  ExponentialCovModel(double decay_k, double amplitude, double mean_level = 0.0);

  double decay_k() const { return decay_k_; }
  double amplitude() const { return amplitude_; }
  double mean_level() const { return mean_level_; }

 private:
  double decay_k_;
  double amplitude_;
  double mean_level_;
};

/// amplitude * exp(-k |p - q|).
double covariance(const ExponentialCovModel& model, const Point2& p, const Point2& q);
/// Cross-covariance block between two bases.
Matrix covariance_matrix(const ExponentialCovModel& model, const BasisSet& rows, const BasisSet& cols);

/// amplitude * 2 pi k / (|u|^2 + k^2)^(3/2), u in radians per unit length.
/// Normalized so that (2 pi)^-2 times its inverse 2D Fourier transform is
/// the covariance exactly.
double power_spectrum(const ExponentialCovModel& model, const Point2& u);

struct SpectrumCheck {
  std::vector<double> s_values;
  std::vector<double> quadrature;   ///< 2 pi * integral r e^{-kr} J0(rs) dr, times amplitude
  std::vector<double> closed_form;  ///< power_spectrum at |u| = s
  double max_relative_error = 0.0;
};

/// Evaluates the Hankel transform of the radial covariance by adaptive
/// Gauss-Kronrod quadrature on [0, r_max], e^{-k r_max} < 1e-12, and
/// compares it with power_spectrum. Throws NumericalError when the
/// quadrature does not reach its tolerance.
SpectrumCheck verify_spectrum_transform(const ExponentialCovModel& model,
                                        const std::vector<double>& s_values);

/// N(mean_level * 1, K) with K the kernel matrix of the basis.
GaussianDensity marginal_at_basis(const ExponentialCovModel& model, const BasisSet& basis);

/// Conditional mean operator and covariance of the prior at `query` given
/// exact heights on `given`: mean = m + G (h - m), cov independent of h.
struct ConditionalOperator {
  Matrix sensitivity;  ///< G = K_qg K_gg^-1
  Matrix cov;          ///< K_qq - G K_gq
};

ConditionalOperator conditional_operator(const ExponentialCovModel& model, const BasisSet& query,
                                         const BasisSet& given);

GaussianDensity conditional_at(const ExponentialCovModel& model, const BasisSet& query,
                               const BasisSet& given, const Vector& heights);

/// Random Fourier coefficients of a real periodic field on a side_n x
/// side_n lattice over [0, extent)^2. Entry (a, b) holds the coefficient
/// of frequency (a', b'), a' = a for a < side_n/2 and a - side_n otherwise.
struct SpectralGrid {
  Index side_n = 0;
  double extent = 0.0;
  Eigen::MatrixXcd coefficients;
};

/// Target E|c_m|^2 for every lattice frequency (same layout as SpectralGrid).
Matrix spectral_variances(const ExponentialCovModel& model, Index side_n, double extent);

/// Draws Hermitian-symmetric coefficients: c = x + i y with x, y ~ N(0, s)
/// and s^2 = E|c|^2 / 2; self-conjugate frequencies are real with variance
/// E|c|^2. Requires even side_n >= 8.
SpectralGrid sample_spectral_coefficients(const ExponentialCovModel& model, Index side_n,
                                          double extent, std::uint64_t seed);

struct HeightGrid {
  Index side_n = 0;
  double extent = 0.0;
  /// heights(row, col) is the height at (col * extent / side_n, row * extent / side_n).
  Matrix heights;
  /// Largest |imaginary part| before the cast to real.
  double max_imaginary = 0.0;

  double spacing() const { return extent / static_cast<double>(side_n); }
};

HeightGrid synthesize(const SpectralGrid& spectrum, double mean_level);

HeightGrid sample_field_spectral(const ExponentialCovModel& model, Index side_n, double extent,
                                 std::uint64_t seed);

}  // namespace gkf
