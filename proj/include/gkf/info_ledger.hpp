#pragma once

// Information learned by an update, and its price in storage.
//
// Information is relative: the update-specific constant (which depends on
// the data, the previous KR and the prior but not on the new basis or its
// parameters) is dropped. Sign convention: learning from data is positive
// at the optimal update, where the value is KL(new KR || prior marginal).

#include "gkf/engine.hpp"
#include "gkf/gaussian.hpp"

#include <cstdint>

namespace gkf {

struct InfoReport {
  double info_learned_nats = 0.0;
  Index basis_size = 0;
  std::int64_t storage_bits = 0;
  double penalized_score = 0.0;

  double info_learned_bits() const;
};

/// cross_entropy(reference, prior) - cross_entropy(reference, kr_new), all
/// at the same basis.
double information_learned(const GaussianDensity& reference_marginal,
                           const GaussianDensity& prior_marginal, const GaussianDensity& kr_new);

/// Mean plus upper triangle of the covariance: bits * (d + d (d + 1) / 2).
/// bits_per_scalar must be 32 or 64.
std::int64_t storage_cost_bits(Index basis_size, int bits_per_scalar);
std::int64_t storage_cost_bits(const KnowledgeRep& kr, int bits_per_scalar);

/// info - lambda * bits, lambda in nats per bit (>= 0).
double penalized_score(double info_nats, std::int64_t bits, double lambda);

InfoReport make_report(double info_nats, Index basis_size, int bits_per_scalar, double lambda);

}  // namespace gkf
