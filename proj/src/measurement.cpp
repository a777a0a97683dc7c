#include "gkf/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gkf {

LinearMeasurement::LinearMeasurement(LinearMap op, Matrix noise_cov)
    : op_(std::move(op)), noise_cov_(std::move(noise_cov)) {
  if (noise_cov_.rows() != noise_cov_.cols() || noise_cov_.rows() != op_.rows()) {
    throw DimensionError("noise covariance must be square with one row per operator row");
  }
  if (op_.rows() == 0) return;
  if (find_asymmetry(noise_cov_)) throw std::invalid_argument("noise covariance is not symmetric");
  if (Eigen::LLT<Matrix>(noise_cov_).info() != Eigen::Success) {
    throw std::invalid_argument("noise covariance is not positive definite");
  }
  noise_cov_ = symmetrize(noise_cov_);
}

LinearMeasurement LinearMeasurement::none(Index field_dim) {
  return LinearMeasurement(LinearMap(Matrix(0, field_dim)), Matrix(0, 0));
}

Vector simulate(const Vector& truth, const LinearMeasurement& m, std::uint64_t seed) {
  if (truth.size() != m.field_dim()) throw DimensionError("simulate: truth length != operator width");
  const GaussianDensity noise(Vector::Zero(m.data_dim()), m.noise_cov());
  return m.op().matrix() * truth + sample(noise, seed);
}

Linearized linearize(const NonlinearMeasurement& nm, const Vector& mu_s, const Vector& x) {
  if (!nm.forward_f || !nm.jacobian_at) throw std::invalid_argument("linearize: missing model functions");
  Matrix jac = nm.jacobian_at(mu_s);
  const Vector f_mu = nm.forward_f(mu_s);
  if (jac.cols() != mu_s.size() || jac.rows() != f_mu.size() || x.size() != f_mu.size()) {
    throw DimensionError("linearize: Jacobian, forward output and data shapes disagree");
  }
  if (!jac.allFinite()) throw NumericalError("linearize: Jacobian is not finite");
  Vector adjusted = x - (f_mu - jac * mu_s);
  return {LinearMeasurement(LinearMap(std::move(jac)), nm.noise_cov), std::move(adjusted)};
}

double jacobian_mismatch(const NonlinearMeasurement& nm, const Vector& at, double step) {
  const Matrix jac = nm.jacobian_at(at);
  Matrix fd(jac.rows(), jac.cols());
  for (Index j = 0; j < at.size(); ++j) {
    Vector hi = at;
    Vector lo = at;
    hi(j) += step;
    lo(j) -= step;
    fd.col(j) = (nm.forward_f(hi) - nm.forward_f(lo)) / (2.0 * step);
  }
  const double scale = std::max(1.0, jac.cwiseAbs().maxCoeff());
  return (jac - fd).cwiseAbs().maxCoeff() / scale;
}

LinearMap build_footprint_operator(const BasisSet& fine_basis, const Sensor& sensor) {
  if (!(sensor.pixel_radius >= 0.0)) throw std::invalid_argument("pixel radius must be >= 0");
  const auto rows = static_cast<Index>(sensor.pixel_centers.size());
  Matrix op = Matrix::Zero(rows, fine_basis.size());
  const double reach = sensor.pixel_radius + kPointTolerance;
  for (Index r = 0; r < rows; ++r) {
    const Point2& c = sensor.pixel_centers[static_cast<std::size_t>(r)];
    int covered = 0;
    for (Index j = 0; j < fine_basis.size(); ++j) {
      if (distance(c, fine_basis.point(j)) <= reach) {
        op(r, j) = 1.0;
        ++covered;
      }
    }
    if (covered == 0) {
      throw std::invalid_argument("pixel " + std::to_string(r) + " footprint covers no basis point");
    }
    op.row(r) /= static_cast<double>(covered);
  }
  return LinearMap(std::move(op));
}

}  // namespace gkf
