#include "gkf/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gkf {

namespace {

constexpr double kIndefiniteFlag = -1e-8;

bool same_set(std::vector<Index> a, std::vector<Index> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

// Information contributed by the KR relative to the prior on its basis,
// (Lambda_n - Lambda_prior) and (eta_n - eta_prior), in basis order.
struct KrRatio {
  Matrix info;
  Vector eta;
};

KrRatio kr_ratio(const KnowledgeRep& kr, const GaussianDensity& prior_at_basis) {
  const SpdFactor kr_f(kr.gauss().cov());
  const SpdFactor prior_f(prior_at_basis.cov());
  KrRatio r;
  r.info = symmetrize(kr_f.inverse() - prior_f.inverse());
  r.eta = kr_f.solve(kr.gauss().mean()) - prior_f.solve(prior_at_basis.mean());
  return r;
}

}  // namespace

KnowledgeRep::KnowledgeRep(BasisSet basis, GaussianDensity gauss, std::uint64_t generation)
    : basis_(std::move(basis)), gauss_(std::move(gauss)), generation_(generation) {
  if (gauss_.dim() != basis_.size()) throw DimensionError("KR Gaussian dimension != basis size");
  if (gauss_.dim() > 0) SpdFactor{gauss_.cov()};
}

KnowledgeRep KnowledgeRep::from_prior(const ExponentialCovModel& model, BasisSet basis) {
  GaussianDensity g = marginal_at_basis(model, basis);
  return KnowledgeRep(std::move(basis), std::move(g), 0);
}

DataPosterior::DataPosterior(const ExponentialCovModel& model, BasisSet fine_grid,
                             const LinearMeasurement& meas, const Vector& x)
    : model_(model), fine_grid_(std::move(fine_grid)) {
  if (meas.field_dim() != fine_grid_.size()) {
    throw DimensionError("measurement operator width != fine grid size");
  }
  if (x.size() != meas.data_dim()) throw DimensionError("data length != measurement rows");
  prior_ = marginal_at_basis(model_, fine_grid_);
  const Index n = fine_grid_.size();
  if (meas.data_dim() == 0) {
    posterior_ = prior_;
    data_info_ = Matrix::Zero(n, n);
    data_eta_ = Vector::Zero(n);
    return;
  }
  posterior_ = condition_on_linear_observation(prior_, meas.op(), meas.noise_cov(), x);
  const SpdFactor noise(meas.noise_cov());
  const Matrix& m = meas.op().matrix();
  data_info_ = symmetrize(m.transpose() * noise.solve(m));
  data_eta_ = m.transpose() * noise.solve(x);
}

GaussianDensity fine_posterior(const GaussianDensity& prior, const BasisSet& fine_grid,
                               const KnowledgeRep& kr, const LinearMeasurement& meas, const Vector& x) {
  if (prior.dim() != fine_grid.size()) throw DimensionError("prior dimension != fine grid size");
  if (meas.field_dim() != fine_grid.size()) throw DimensionError("operator width != fine grid size");
  if (x.size() != meas.data_dim()) throw DimensionError("data length != measurement rows");
  const auto idx_v = kr.basis().indices_in(fine_grid);
  const SpdFactor prior_f(prior.cov());
  Matrix info = prior_f.inverse();
  Vector eta = prior_f.solve(prior.mean());
  if (meas.data_dim() > 0) {
    const SpdFactor noise(meas.noise_cov());
    const Matrix& m = meas.op().matrix();
    info += m.transpose() * noise.solve(m);
    eta += m.transpose() * noise.solve(x);
  }
  if (!idx_v.empty()) {
    const GaussianDensity prior_v = marginalize(prior, LinearMap::selection(idx_v, prior.dim()));
    const KrRatio ratio = kr_ratio(kr, prior_v);
    info(idx_v, idx_v) += ratio.info;
    eta(idx_v) += ratio.eta;
  }
  return InfoGaussian(symmetrize(info), eta).to_moments();
}

UpdateResult gkf_update(const KnowledgeRep& kr_old, const DataPosterior& data, const BasisSet& new_basis) {
  if (new_basis.empty()) throw std::invalid_argument("gkf_update: new basis is empty");
  const BasisSet& fine = data.fine_grid();
  const Index n = fine.size();
  const auto idx_new = new_basis.indices_in(fine);
  const auto idx_old = kr_old.basis().indices_in(fine);

  // Union ordered with the new basis first so that the final marginal is
  // the leading block.
  std::vector<Index> idx_u = idx_new;
  std::vector<bool> in_new(static_cast<std::size_t>(n), false);
  for (Index i : idx_new) in_new[static_cast<std::size_t>(i)] = true;
  Index intersection = 0;
  for (Index i : idx_old) {
    if (in_new[static_cast<std::size_t>(i)]) {
      ++intersection;
    } else {
      idx_u.push_back(i);
    }
  }
  const auto u = static_cast<Index>(idx_u.size());
  const auto d = static_cast<Index>(idx_new.size());

  // Position of each old-basis point inside the union.
  std::vector<Index> old_in_u;
  old_in_u.reserve(idx_old.size());
  for (Index i : idx_old) {
    old_in_u.push_back(static_cast<Index>(std::find(idx_u.begin(), idx_u.end(), i) - idx_u.begin()));
  }

  const Matrix& sigma_s = data.prior().cov();
  const Vector& mu_s = data.prior().mean();
  const bool covers_grid = (u == n);
  const bool old_is_union = same_set(idx_old, idx_u);

  Matrix info;
  Vector eta;
  if (covers_grid) {
    // The data posterior's information at the full grid is prior + data;
    // the prior term cancels against the KR's prior term when v spans u.
    info = data.data_information()(idx_u, idx_u);
    eta = data.data_information_vector()(idx_u);
    if (!old_is_union) {
      const SpdFactor prior_u(Matrix(sigma_s(idx_u, idx_u)));
      info += prior_u.inverse();
      eta += prior_u.solve(Vector(mu_s(idx_u)));
    }
  } else {
    const GaussianDensity& post = data.posterior();
    const SpdFactor q(Matrix(post.cov()(idx_u, idx_u)));
    info = q.inverse();
    eta = q.solve(Vector(post.mean()(idx_u)));
  }

  if (!idx_old.empty()) {
    const SpdFactor kr_f(kr_old.gauss().cov());
    info(old_in_u, old_in_u) += kr_f.inverse();
    eta(old_in_u) += kr_f.solve(kr_old.gauss().mean());
    if (!(covers_grid && old_is_union)) {
      const SpdFactor prior_v(Matrix(sigma_s(idx_old, idx_old)));
      info(old_in_u, old_in_u) -= prior_v.inverse();
      eta(old_in_u) -= prior_v.solve(Vector(mu_s(idx_old)));
    }
  }
  info = symmetrize(info);

  UpdateDiagnostics diag;
  diag.intersection_size = intersection;
  diag.union_size = u;
  const SpdFactor r_f(info);
  diag.min_eigenvalue = r_f.min_eigenvalue();
  diag.indefinite_before_jitter = diag.min_eigenvalue < kIndefiniteFlag;
  diag.jitter = r_f.jitter();
  const double rcond = r_f.llt().rcond();
  diag.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();

  const Matrix sigma_u = r_f.inverse();
  const Vector mu_u = r_f.solve(eta);

  UpdateResult out;
  out.mu_r = mu_u.head(d);
  out.sigma_r = symmetrize(sigma_u.topLeftCorner(d, d));
  const GaussianDensity r(out.mu_r, out.sigma_r);
  const GaussianDensity prior_new(Vector(mu_s(idx_new)), Matrix(sigma_s(idx_new, idx_new)));
  out.info_learned = kl_divergence(r, prior_new);
  out.kr_new = KnowledgeRep(new_basis, r, kr_old.generation() + 1);
  out.diagnostics = diag;
  return out;
}

UpdateResult gkf_update(const KnowledgeRep& kr_old, const ExponentialCovModel& model,
                        const LinearMeasurement& meas, const Vector& x, const BasisSet& new_basis,
                        const BasisSet& fine_grid) {
  return gkf_update(kr_old, DataPosterior(model, fine_grid, meas, x), new_basis);
}

UpdateResult kf_update(const KnowledgeRep& kr, const LinearMeasurement& meas, const Vector& x) {
  if (meas.field_dim() != kr.basis().size()) throw DimensionError("kf_update: operator width != basis size");
  if (x.size() != meas.data_dim()) throw DimensionError("kf_update: data length != measurement rows");
  GaussianDensity post = condition_on_linear_observation(kr.gauss(), meas.op(), meas.noise_cov(), x);
  UpdateResult out;
  out.mu_r = post.mean();
  out.sigma_r = post.cov();
  out.info_learned = kl_divergence(post, kr.gauss());
  out.diagnostics.intersection_size = kr.basis().size();
  out.diagnostics.union_size = kr.basis().size();
  const SpdFactor f(post.cov());
  out.diagnostics.min_eigenvalue = f.min_eigenvalue();
  out.diagnostics.jitter = f.jitter();
  const double rcond = f.llt().rcond();
  out.diagnostics.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  out.kr_new = KnowledgeRep(kr.basis(), std::move(post), kr.generation() + 1);
  return out;
}

GaussianDensity posterior_field_at(const KnowledgeRep& kr, const ExponentialCovModel& model,
                                   const BasisSet& query) {
  if (query.empty()) throw std::invalid_argument("posterior_field_at: empty query");
  const auto op = conditional_operator(model, query, kr.basis());
  const double m = model.mean_level();
  Vector mean = Vector::Constant(query.size(), m) +
                op.sensitivity * (kr.gauss().mean() - Vector::Constant(kr.basis().size(), m));
  Matrix cov = symmetrize(op.cov + op.sensitivity * kr.gauss().cov() * op.sensitivity.transpose());
  return GaussianDensity(std::move(mean), std::move(cov));
}

double check_scaling_consistency(const KnowledgeRep& kr, const ExponentialCovModel& model,
                                 const BasisSet& s, const BasisSet& a) {
  const GaussianDensity direct = posterior_field_at(kr, model, s);
  const GaussianDensity via = marginalize(posterior_field_at(kr, model, a), selection_map(a, s));
  const double dm = (direct.mean() - via.mean()).cwiseAbs().maxCoeff();
  const double dc = (direct.cov() - via.cov()).cwiseAbs().maxCoeff();
  return std::max(dm, dc);
}

double kl_to_reference(const KnowledgeRep& candidate, const GaussianDensity& reference,
                       const BasisSet& fine_grid) {
  if (reference.dim() != fine_grid.size()) throw DimensionError("reference dimension != fine grid size");
  const GaussianDensity ref_marginal = marginalize(reference, selection_map(fine_grid, candidate.basis()));
  return kl_divergence(ref_marginal, candidate.gauss());
}

double field_kl_to_reference(const KnowledgeRep& candidate, const GaussianDensity& reference,
                             const ExponentialCovModel& model, const BasisSet& fine_grid) {
  if (reference.dim() != fine_grid.size()) throw DimensionError("reference dimension != fine grid size");
  return kl_divergence(reference, posterior_field_at(candidate, model, fine_grid));
}

}  // namespace gkf
