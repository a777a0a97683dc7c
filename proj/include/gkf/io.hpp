#pragma once

// Text formats: row-major CSV matrices at 17 significant digits (which
// round-trip doubles exactly), KR files (JSON header + mean/cov CSVs) and
// height grids (CSV + JSON header).

#include "gkf/engine.hpp"
#include "gkf/field_prior.hpp"
#include "gkf/gaussian.hpp"

#include <filesystem>
#include <string>

#include <json.hpp>

namespace gkf {

/// "%.17g".
std::string format_real(double v);
/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_quote(const std::string& field);

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

std::string matrix_to_csv(const Matrix& m, const std::string& config_hash = "");
/// Lines starting with '#' and blank lines are skipped. Throws
/// std::runtime_error on ragged rows or unparsable fields.
Matrix matrix_from_csv(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::string& config_hash = "");
Matrix read_matrix_csv(const std::filesystem::path& path);

nlohmann::json basis_to_json(const BasisSet& basis);
BasisSet basis_from_json(const nlohmann::json& j);

/// Writes <stem>.json, <stem>_mean.csv and <stem>_cov.csv.
void save_knowledge_rep(const std::filesystem::path& stem, const KnowledgeRep& kr,
                        const std::string& config_hash = "");
KnowledgeRep load_knowledge_rep(const std::filesystem::path& stem);

/// Writes <stem>.csv (heights, row-major) and <stem>.json (side_n, extent,
/// k, amplitude, mean_level, seed, config_hash).
void save_height_grid(const std::filesystem::path& stem, const HeightGrid& grid,
                      const ExponentialCovModel& model, std::uint64_t seed,
                      const std::string& config_hash = "");
HeightGrid load_height_grid(const std::filesystem::path& stem);

}  // namespace gkf
