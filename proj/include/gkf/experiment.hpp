#pragma once

// End-to-end experiments: a truth surface drawn from the prior, a schedule
// of pixel sensors observing it, and one scale search plus update per
// batch. Also the oracle self-check behind `gkf verify`.

#include "gkf/engine.hpp"
#include "gkf/field_prior.hpp"
#include "gkf/measurement.hpp"
#include "gkf/scale_search.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gkf {

/// Raised for malformed or inconsistent experiment configurations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SensorConfig {
  std::string name;
  Index pixels = 8;         ///< pixels per side, tiling the fine-grid square
  double radius = 0.0;      ///< footprint radius, length units
  double noise_sd = 0.05;
  std::string layout = "centers";  ///< "centers": pixel centers; "nodes": pixel corners
};

struct ExperimentConfig {
  double k = 8.0;
  double amplitude = 1.0;
  double mean_level = 0.0;
  Index truth_side_n = 64;
  double truth_extent = 1.0;
  Index fine_side_n = 32;    ///< fine grid has (side_n + 1)^2 points
  double fine_extent = 0.5;  ///< over [0, extent]^2
  std::vector<SensorConfig> sensors;
  std::vector<double> scales;
  double lambda = 0.0;
  int bits_per_scalar = 64;
  bool explore_octaves = true;
  bool concurrent = false;
  std::optional<double> initial_scale;  ///< defaults to the coarsest scale
  Index heldout_stride = 2;
  std::uint64_t seed = 1;

  double fine_spacing() const { return fine_extent / static_cast<double>(fine_side_n); }
  ExponentialCovModel model() const { return {k, amplitude, mean_level}; }
};

/// Default configuration as JSON (two sensors, coarse 8x8 then fine 32x32).
nlohmann::json default_config_json();

/// Merges `user` over the defaults. Unknown keys, wrong types and invalid
/// values throw ConfigError.
ExperimentConfig resolve_config(const nlohmann::json& user);
/// Fully resolved configuration, every default filled in.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Applies "a.b=value" overrides; value is parsed as JSON, else taken as a
/// string. List elements are addressed by index ("sensors.1.noise_sd").
void apply_override(nlohmann::json& j, const std::string& assignment);
/// FNV-1a of the compact resolved-config dump.
std::string config_hash(const ExperimentConfig& cfg);

/// Seed of a named sub-stream ("truth", "noise-batch-0", ...).
std::uint64_t substream_seed(std::uint64_t seed, const std::string& name);

BasisSet fine_grid_of(const ExperimentConfig& cfg);
Region region_of(const ExperimentConfig& cfg);
Sensor sensor_of(const ExperimentConfig& cfg, const SensorConfig& s);
LinearMeasurement measurement_of(const ExperimentConfig& cfg, const SensorConfig& s, const BasisSet& fine);
/// Truth lattice points with indices stride/2 + stride * m inside the
/// fine-grid square (odd indices for stride 2). They stay off every
/// candidate basis whose spacing is an even number of truth cells.
BasisSet heldout_points(const ExperimentConfig& cfg);

HeightGrid sample_truth(const ExperimentConfig& cfg);
/// Truth heights at lattice-aligned points; throws ConfigError off-lattice.
Vector truth_at(const HeightGrid& truth, const BasisSet& points);

struct UpdateRow {
  std::uint64_t generation = 0;
  std::string sensor;
  double chosen_scale = 0.0;
  Index basis_size = 0;
  double info_nats = 0.0;
  double info_bits = 0.0;
  double rmse_basis = 0.0;
  double rmse_heldout = 0.0;
  int octaves_explored = 0;
  double condition_estimate = 0.0;
  double jitter = 0.0;
};

struct RunSummary {
  std::string config_hash;
  std::vector<UpdateRow> rows;
  double wall_seconds = 0.0;
};

nlohmann::json summary_to_json(const RunSummary& s);

struct ExperimentArtifacts {
  RunSummary summary;
  KnowledgeRep final_kr;
  std::vector<LearningCurve> curves;
};

/// Runs the whole schedule. When `out_dir` is set, writes the resolved
/// config, truth, learning_curve_<n>.csv per batch, the final KR and
/// summary.json. A failing stage throws std::runtime_error tagged with the
/// stage name after flushing what was already produced.
ExperimentArtifacts run_experiment(const ExperimentConfig& cfg,
                                   const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct SuiteResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  /// Corrupts one covariance entry before the symmetry check.
  bool inject_asymmetry = false;
  std::uint64_t seed = 1;
};

std::vector<SuiteResult> run_verify(const ExperimentConfig& cfg, const VerifyOptions& options);
nlohmann::json verify_report_json(const std::vector<SuiteResult>& suites);

}  // namespace gkf
