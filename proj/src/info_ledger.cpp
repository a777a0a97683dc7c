#include "gkf/info_ledger.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gkf {

double InfoReport::info_learned_bits() const { return info_learned_nats / std::numbers::ln2; }

double information_learned(const GaussianDensity& reference_marginal,
                           const GaussianDensity& prior_marginal, const GaussianDensity& kr_new) {
  if (reference_marginal.dim() != prior_marginal.dim() || reference_marginal.dim() != kr_new.dim()) {
    throw DimensionError("information_learned: dimension mismatch");
  }
  return cross_entropy(reference_marginal, prior_marginal) - cross_entropy(reference_marginal, kr_new);
}

std::int64_t storage_cost_bits(Index basis_size, int bits_per_scalar) {
  if (bits_per_scalar != 32 && bits_per_scalar != 64) {
    throw std::invalid_argument("bits_per_scalar must be 32 or 64");
  }
  if (basis_size < 0) throw std::invalid_argument("basis size must be >= 0");
  const auto d = static_cast<std::int64_t>(basis_size);
  return bits_per_scalar * (d + d * (d + 1) / 2);
}

std::int64_t storage_cost_bits(const KnowledgeRep& kr, int bits_per_scalar) {
  return storage_cost_bits(kr.basis().size(), bits_per_scalar);
}

double penalized_score(double info_nats, std::int64_t bits, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  return info_nats - lambda * static_cast<double>(bits);
}

InfoReport make_report(double info_nats, Index basis_size, int bits_per_scalar, double lambda) {
  InfoReport r;
  r.info_learned_nats = info_nats;
  r.basis_size = basis_size;
  r.storage_bits = storage_cost_bits(basis_size, bits_per_scalar);
  r.penalized_score = penalized_score(info_nats, r.storage_bits, lambda);
  return r;
}

}  // namespace gkf
