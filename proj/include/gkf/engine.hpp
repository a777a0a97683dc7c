#pragma once

// Knowledge-representation (KR) updates across changing bases.
//
// A KR is a Gaussian over the heights at a finite basis v. Together with
// the prior it stands for the field posterior
//
//   P(s | KR) ∝ P(s | prior) * N(mu_v, Sigma_v)(h_v) / N(prior at v)(h_v).
//
// An update folds a new batch of data into that posterior and stores the
// result at a new basis, possibly of a different size or location, by
// keeping the moments of the new posterior's marginal at that basis (the
// minimizer of the KL distance from the exact posterior). The continuous
// field is represented by a dense fine grid that contains every basis.

#include "gkf/field_prior.hpp"
#include "gkf/gaussian.hpp"
#include "gkf/measurement.hpp"

#include <cstdint>

namespace gkf {

class KnowledgeRep {
 public:
  KnowledgeRep() = default;
  /// Throws DimensionError when gauss.dim() != basis.size() and
  /// NumericalError when the covariance is indefinite or zero.
  KnowledgeRep(BasisSet basis, GaussianDensity gauss, std::uint64_t generation = 0);

  /// Generation-0 KR equal to the prior marginal at `basis`.
  static KnowledgeRep from_prior(const ExponentialCovModel& model, BasisSet basis);

  const BasisSet& basis() const { return basis_; }
  const GaussianDensity& gauss() const { return gauss_; }
  std::uint64_t generation() const { return generation_; }

 private:
  BasisSet basis_;
  GaussianDensity gauss_;
  std::uint64_t generation_ = 0;
};

struct UpdateDiagnostics {
  double condition_estimate = 1.0;   ///< 1 / rcond of the assembled information matrix
  double jitter = 0.0;               ///< diagonal loading applied before inversion
  double min_eigenvalue = 0.0;       ///< smallest eigenvalue of that matrix before loading
  bool indefinite_before_jitter = false;  ///< min_eigenvalue < -1e-8
  Index intersection_size = 0;       ///< |v ∩ v̄|
  Index union_size = 0;              ///< |v ∪ v̄|
};

struct UpdateResult {
  KnowledgeRep kr_new;
  Vector mu_r;
  Matrix sigma_r;
  /// KL(new KR || prior marginal at the new basis), nats. kf_update reports
  /// the KL from the previous KR instead, as it has no prior model.
  double info_learned = 0.0;
  UpdateDiagnostics diagnostics;
};

/// Likelihood times prior on the fine grid, shared by every candidate basis
/// evaluated against the same data batch.
class DataPosterior {
 public:
  DataPosterior(const ExponentialCovModel& model, BasisSet fine_grid, const LinearMeasurement& meas,
                const Vector& x);

  const ExponentialCovModel& model() const { return model_; }
  const BasisSet& fine_grid() const { return fine_grid_; }
  const GaussianDensity& prior() const { return prior_; }
  /// Bayes posterior of the prior alone given the data (no KR).
  const GaussianDensity& posterior() const { return posterior_; }
  /// M^T R^-1 M and M^T R^-1 x over the fine grid.
  const Matrix& data_information() const { return data_info_; }
  const Vector& data_information_vector() const { return data_eta_; }

 private:
  ExponentialCovModel model_;
  BasisSet fine_grid_;
  GaussianDensity prior_;
  GaussianDensity posterior_;
  Matrix data_info_;
  Vector data_eta_;
};

/// Reference posterior on the fine grid: prior x likelihood x KR ratio,
/// assembled in information form.
GaussianDensity fine_posterior(const GaussianDensity& prior, const BasisSet& fine_grid,
                               const KnowledgeRep& kr, const LinearMeasurement& meas, const Vector& x);

/// Generalized update of `kr_old` by one data batch onto `new_basis`.
///
/// Works on the union u = v̄ ∪ v: the data posterior is marginalized to u,
/// the KR ratio (Lambda_n - Lambda_prior,v embedded in u) is added in
/// information form, and the result is marginalized to v̄. When v ⊆ v̄ the
/// union is v̄ itself and this is exactly
///   Sigma_R^-1 = Sigma_Q^-1 + (Sigma_v̄^n)^-1 - Sigma_v̄^-1
/// with the old KR embedded by zero rows.
UpdateResult gkf_update(const KnowledgeRep& kr_old, const DataPosterior& data, const BasisSet& new_basis);

UpdateResult gkf_update(const KnowledgeRep& kr_old, const ExponentialCovModel& model,
                        const LinearMeasurement& meas, const Vector& x, const BasisSet& new_basis,
                        const BasisSet& fine_grid);

/// Plain Kalman update of the KR on its own basis (operator defined on it).
UpdateResult kf_update(const KnowledgeRep& kr, const LinearMeasurement& meas, const Vector& x);

/// Field posterior implied by the KR at arbitrary query points.
GaussianDensity posterior_field_at(const KnowledgeRep& kr, const ExponentialCovModel& model,
                                   const BasisSet& query);

/// Largest absolute parameter difference between the field posterior at S
/// and the S-marginal of the field posterior at A (S ⊆ A).
double check_scaling_consistency(const KnowledgeRep& kr, const ExponentialCovModel& model,
                                 const BasisSet& s, const BasisSet& a);

/// KL(reference marginal at the candidate basis || candidate Gaussian).
/// Zero exactly when the candidate matches the reference's marginal.
double kl_to_reference(const KnowledgeRep& candidate, const GaussianDensity& reference,
                       const BasisSet& fine_grid);

/// KL(reference || field posterior implied by the candidate) over the whole
/// fine grid. Equals kl_to_reference plus KL(reference || prior) minus
/// KL(reference marginal || prior marginal) at the candidate basis.
double field_kl_to_reference(const KnowledgeRep& candidate, const GaussianDensity& reference,
                             const ExponentialCovModel& model, const BasisSet& fine_grid);

}  // namespace gkf
