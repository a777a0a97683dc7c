#pragma once

// Linear Gaussian likelihood x = M s + eps, its first-order stand-in for
// nonlinear forward models, and pixel-footprint sensor operators.

#include "gkf/field_prior.hpp"
#include "gkf/gaussian.hpp"

#include <cstdint>
#include <functional>

namespace gkf {

class LinearMeasurement {
 public:
  LinearMeasurement() = default;
  /// Throws DimensionError when operator rows and noise size differ and
  /// std::invalid_argument when the noise covariance is not SPD.
  LinearMeasurement(LinearMap op, Matrix noise_cov);

  /// Empty measurement (no rows) over a field of `field_dim` values.
  static LinearMeasurement none(Index field_dim);

  const LinearMap& op() const { return op_; }
  const Matrix& noise_cov() const { return noise_cov_; }
  Index data_dim() const { return op_.rows(); }
  Index field_dim() const { return op_.cols(); }

 private:
  LinearMap op_;
  Matrix noise_cov_;
};

/// forward_f and jacobian_at must be reentrant.
struct NonlinearMeasurement {
  std::function<Vector(const Vector&)> forward_f;
  std::function<Matrix(const Vector&)> jacobian_at;
  Matrix noise_cov;
};

/// x = M truth + eps with eps drawn through gkf::sample.
Vector simulate(const Vector& truth, const LinearMeasurement& m, std::uint64_t seed);

struct Linearized {
  LinearMeasurement measurement;
  Vector adjusted_x;
};

/// M = df/ds at mu_s and x -> x - (f(mu_s) - M mu_s).
Linearized linearize(const NonlinearMeasurement& nm, const Vector& mu_s, const Vector& x);

/// Largest relative disagreement between jacobian_at and central
/// differences of forward_f at `at`, scaled by max(1, |J|max).
double jacobian_mismatch(const NonlinearMeasurement& nm, const Vector& at, double step = 1e-6);

struct Sensor {
  std::vector<Point2> pixel_centers;
  double pixel_radius = 0.0;
};

/// Each row averages the basis values within pixel_radius of one pixel
/// center. Throws std::invalid_argument on an empty footprint.
LinearMap build_footprint_operator(const BasisSet& fine_basis, const Sensor& sensor);

}  // namespace gkf
