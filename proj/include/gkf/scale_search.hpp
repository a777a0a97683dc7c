#pragma once

// Multigrid-style search over representation scales: update onto regular
// candidate grids at several spacings, tabulate information learned against
// storage, and pick the storage-aware best basis.

#include "gkf/engine.hpp"
#include "gkf/info_ledger.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gkf {

struct Region {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;
};

/// One regular grid per scale over `region`, each point snapped to the
/// nearest fine-grid point and tagged with its scale. Dyadic scales give
/// nested grids. Throws std::invalid_argument when a scale is below the
/// fine-grid spacing, scales repeat, or the region leaves the fine grid.
std::vector<BasisSet> generate_candidate_bases(const Region& region, const std::vector<double>& scales,
                                               const BasisSet& fine_grid);

/// Spacing of the fine grid: its scale tag, else the smallest point distance.
double grid_spacing(const BasisSet& grid);

struct SearchOptions {
  double lambda = 0.0;  ///< nats per bit
  int bits_per_scalar = 64;
  bool concurrent = false;
};

inline constexpr const char* kStatusOk = "ok";

struct ScaleCandidate {
  BasisSet basis;
  double scale = 0.0;
  std::optional<UpdateResult> result;
  InfoReport report;
  std::string status = kStatusOk;

  bool ok() const { return result.has_value(); }
};

struct CurveRow {
  double scale = 0.0;
  Index basis_size = 0;
  double info_nats = 0.0;
  double info_bits = 0.0;
  std::int64_t storage_bits = 0;
  double penalized_score = 0.0;
  std::string status = kStatusOk;
};

/// Rows in decreasing scale (increasing density).
struct LearningCurve {
  std::vector<CurveRow> rows;
};

/// Candidates and curve rows share indices.
struct ScaleSweep {
  std::vector<ScaleCandidate> candidates;
  LearningCurve curve;
};

/// Updates `kr` onto every candidate. A candidate whose update throws gets
/// a failed row carrying the error text instead of aborting the sweep.
ScaleSweep evaluate_scales(const KnowledgeRep& kr, const DataPosterior& data,
                           const std::vector<BasisSet>& candidates, const SearchOptions& options);

ScaleSweep evaluate_scales(const KnowledgeRep& kr, const ExponentialCovModel& model,
                           const LinearMeasurement& meas, const Vector& x,
                           const std::vector<BasisSet>& candidates, const BasisSet& fine_grid,
                           const SearchOptions& options);

/// Row index maximizing info - lambda * bits among successful rows; ties go
/// to the smaller basis, then the coarser scale. Throws std::runtime_error
/// when every row failed.
Index select_basis(const LearningCurve& curve, double lambda);

/// Stops when the best penalized score improves by less than this over the
/// previous octave.
inline constexpr double kOctaveImprovement = 1e-6;

struct OctaveSearch {
  ScaleSweep sweep;
  Index chosen = 0;
  int octaves_explored = 0;
};

/// Evaluates `initial_scales`, then keeps halving the finest scale while
/// the best penalized score improves by at least kOctaveImprovement and the
/// next scale is not below the fine-grid spacing.
OctaveSearch explore_octaves(const KnowledgeRep& kr, const DataPosterior& data, const Region& region,
                             std::vector<double> initial_scales, const SearchOptions& options);

inline constexpr const char* kLearningCurveHeader =
    "scale,basis_size,info_nats,info_bits,storage_bits,penalized_score,status";

/// CSV text: optional "# config_hash=..." line, the fixed header, one row
/// per candidate.
std::string learning_curve_csv(const LearningCurve& curve, const std::string& config_hash = "");

}  // namespace gkf
