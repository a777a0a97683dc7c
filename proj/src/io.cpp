#include "gkf/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gkf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string matrix_to_csv(const Matrix& m, const std::string& config_hash) {
  std::ostringstream os;
  if (!config_hash.empty()) os << "# config_hash=" << config_hash << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      os << format_real(m(i, j));
    }
    os << '\n';
  }
  return os.str();
}

Matrix matrix_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) {
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error("unparsable CSV field '" + field + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw std::runtime_error("ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_matrix_csv(const fs::path& path, const Matrix& m, const std::string& config_hash) {
  write_text(path, matrix_to_csv(m, config_hash));
}

Matrix read_matrix_csv(const fs::path& path) { return matrix_from_csv(read_text(path)); }

json basis_to_json(const BasisSet& basis) {
  json pts = json::array();
  for (const auto& p : basis.points()) pts.push_back({p.x, p.y});
  json j{{"points", pts}, {"ids", basis.ids()}};
  if (basis.scale_tag()) {
    j["scale_tag"] = *basis.scale_tag();
  } else {
    j["scale_tag"] = nullptr;
  }
  return j;
}

BasisSet basis_from_json(const json& j) {
  std::vector<Point2> pts;
  for (const auto& p : j.at("points")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  auto ids = j.at("ids").get<std::vector<std::int64_t>>();
  std::optional<double> tag;
  if (j.contains("scale_tag") && !j.at("scale_tag").is_null()) tag = j.at("scale_tag").get<double>();
  return BasisSet(std::move(pts), std::move(ids), tag);
}

namespace {

fs::path with_suffix(const fs::path& stem, const std::string& suffix) {
  return stem.parent_path() / (stem.filename().string() + suffix);
}

}  // namespace

void save_knowledge_rep(const fs::path& stem, const KnowledgeRep& kr, const std::string& config_hash) {
  const fs::path mean_path = with_suffix(stem, "_mean.csv");
  const fs::path cov_path = with_suffix(stem, "_cov.csv");
  json header{{"generation", kr.generation()},
              {"basis", basis_to_json(kr.basis())},
              {"mean_csv", mean_path.filename().string()},
              {"cov_csv", cov_path.filename().string()}};
  if (!config_hash.empty()) header["config_hash"] = config_hash;
  write_text(with_suffix(stem, ".json"), header.dump(2) + "\n");
  write_matrix_csv(mean_path, Matrix(kr.gauss().mean()), config_hash);
  write_matrix_csv(cov_path, kr.gauss().cov(), config_hash);
}

KnowledgeRep load_knowledge_rep(const fs::path& stem) {
  const json header = json::parse(read_text(with_suffix(stem, ".json")));
  BasisSet basis = basis_from_json(header.at("basis"));
  const fs::path dir = stem.parent_path();
  const Matrix mean = read_matrix_csv(dir / header.at("mean_csv").get<std::string>());
  const Matrix cov = read_matrix_csv(dir / header.at("cov_csv").get<std::string>());
  if (mean.cols() > 1) throw std::runtime_error("KR mean CSV must have one column");
  Vector mu = mean.size() == 0 ? Vector(0) : Vector(mean.col(0));
  return KnowledgeRep(std::move(basis), GaussianDensity(std::move(mu), cov),
                      header.at("generation").get<std::uint64_t>());
}

void save_height_grid(const fs::path& stem, const HeightGrid& grid, const ExponentialCovModel& model,
                      std::uint64_t seed, const std::string& config_hash) {
  json header{{"side_n", grid.side_n},
              {"extent", grid.extent},
              {"k", model.decay_k()},
              {"amplitude", model.amplitude()},
              {"mean_level", model.mean_level()},
              {"seed", seed},
              {"heights_csv", with_suffix(stem, ".csv").filename().string()}};
  if (!config_hash.empty()) header["config_hash"] = config_hash;
  write_text(with_suffix(stem, ".json"), header.dump(2) + "\n");
  write_matrix_csv(with_suffix(stem, ".csv"), grid.heights, config_hash);
}

HeightGrid load_height_grid(const fs::path& stem) {
  const json header = json::parse(read_text(with_suffix(stem, ".json")));
  HeightGrid g;
  g.side_n = header.at("side_n").get<Index>();
  g.extent = header.at("extent").get<double>();
  g.heights = read_matrix_csv(with_suffix(stem, ".csv"));
  if (g.heights.rows() != g.side_n || g.heights.cols() != g.side_n) {
    throw std::runtime_error("height grid CSV does not match side_n");
  }
  return g;
}

}  // namespace gkf
