#include "gkf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gkf/info_ledger.hpp"
#include "gkf/io.hpp"

namespace gkf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kLatticeTolerance = 1e-6;

json sensor_defaults() {
  return json{{"name", ""}, {"pixels", 8}, {"radius", nullptr}, {"noise_sd", 0.05}, {"layout", "centers"}};
}

// Overlays `user` on `base`, rejecting keys `base` does not know. Lists
// replace wholesale; list items are checked by the caller.
void merge_strict(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("'" + path + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

Index get_index(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return j.get<Index>();
}

bool is_multiple(double value, double unit) {
  const double q = value / unit;
  return std::abs(q - std::round(q)) < kLatticeTolerance;
}

double rms(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage '" + name + "' failed: " + e.what());
  }
}

}  // namespace

json default_config_json() {
  json coarse = sensor_defaults();
  coarse["name"] = "coarse";
  coarse["pixels"] = 8;
  json fine = sensor_defaults();
  fine["name"] = "fine";
  fine["pixels"] = 32;
  return json{{"prior", {{"k", 8.0}, {"amplitude", 1.0}, {"mean_level", 0.0}}},
              {"truth", {{"side_n", 64}, {"extent", 1.0}}},
              {"fine_grid", {{"side_n", 32}, {"extent", 0.5}}},
              {"sensors", json::array({coarse, fine})},
              {"search",
               {{"scales", {0.25, 0.125, 0.0625, 0.03125}},
                {"lambda", 0.0},
                {"bits_per_scalar", 64},
                {"explore_octaves", true},
                {"concurrent", false},
                {"initial_scale", nullptr}}},
              {"heldout", {{"stride", 2}}},
              {"seed", 1}};
}

ExperimentConfig resolve_config(const json& user) {
  json j = default_config_json();
  merge_strict(j, user, "");
  ExperimentConfig c;
  c.k = get_number(j["prior"]["k"], "prior.k");
  c.amplitude = get_number(j["prior"]["amplitude"], "prior.amplitude");
  c.mean_level = get_number(j["prior"]["mean_level"], "prior.mean_level");
  if (!(c.k > 0.0)) throw ConfigError("prior.k must be > 0");
  if (!(c.amplitude > 0.0)) throw ConfigError("prior.amplitude must be > 0");

  c.truth_side_n = get_index(j["truth"]["side_n"], "truth.side_n");
  c.truth_extent = get_number(j["truth"]["extent"], "truth.extent");
  if (c.truth_side_n < 8 || c.truth_side_n % 2 != 0) throw ConfigError("truth.side_n must be even and >= 8");
  if (!(c.truth_extent > 0.0)) throw ConfigError("truth.extent must be > 0");

  c.fine_side_n = get_index(j["fine_grid"]["side_n"], "fine_grid.side_n");
  c.fine_extent = get_number(j["fine_grid"]["extent"], "fine_grid.extent");
  if (c.fine_side_n < 1) throw ConfigError("fine_grid.side_n must be >= 1");
  if (!(c.fine_extent > 0.0)) throw ConfigError("fine_grid.extent must be > 0");
  const double ts = c.truth_extent / static_cast<double>(c.truth_side_n);
  if (!is_multiple(c.fine_spacing(), ts)) {
    throw ConfigError("fine grid spacing must be a multiple of the truth spacing");
  }
  if (c.fine_extent > c.truth_extent - ts + kLatticeTolerance * ts) {
    throw ConfigError("fine grid must lie inside the truth lattice");
  }

  if (!j["sensors"].is_array()) throw ConfigError("'sensors' must be a list");
  for (std::size_t i = 0; i < j["sensors"].size(); ++i) {
    const std::string p = "sensors." + std::to_string(i);
    json s = sensor_defaults();
    merge_strict(s, j["sensors"][i], p);
    SensorConfig sc;
    sc.name = get_as<std::string>(s["name"], p + ".name");
    if (sc.name.empty()) sc.name = "batch-" + std::to_string(i);
    sc.pixels = get_index(s["pixels"], p + ".pixels");
    if (sc.pixels < 1) throw ConfigError(p + ".pixels must be >= 1");
    const double pitch = c.fine_extent / static_cast<double>(sc.pixels);
    sc.radius = s["radius"].is_null() ? 0.75 * pitch : get_number(s["radius"], p + ".radius");
    if (!(sc.radius >= 0.0)) throw ConfigError(p + ".radius must be >= 0");
    sc.noise_sd = get_number(s["noise_sd"], p + ".noise_sd");
    if (!(sc.noise_sd > 0.0)) throw ConfigError(p + ".noise_sd must be > 0");
    sc.layout = get_as<std::string>(s["layout"], p + ".layout");
    if (sc.layout != "centers" && sc.layout != "nodes") {
      throw ConfigError(p + ".layout must be 'centers' or 'nodes'");
    }
    c.sensors.push_back(std::move(sc));
  }

  const json& sj = j["search"];
  if (!sj["scales"].is_array() || sj["scales"].empty()) throw ConfigError("search.scales must be a non-empty list");
  for (const auto& v : sj["scales"]) c.scales.push_back(get_number(v, "search.scales"));
  for (double s : c.scales) {
    if (!(s >= c.fine_spacing() * (1.0 - kLatticeTolerance))) {
      throw ConfigError("search.scales must be >= the fine-grid spacing");
    }
  }
  c.lambda = get_number(sj["lambda"], "search.lambda");
  if (!(c.lambda >= 0.0)) throw ConfigError("search.lambda must be >= 0");
  c.bits_per_scalar = static_cast<int>(get_index(sj["bits_per_scalar"], "search.bits_per_scalar"));
  if (c.bits_per_scalar != 32 && c.bits_per_scalar != 64) throw ConfigError("search.bits_per_scalar must be 32 or 64");
  c.explore_octaves = get_as<bool>(sj["explore_octaves"], "search.explore_octaves");
  c.concurrent = get_as<bool>(sj["concurrent"], "search.concurrent");
  c.initial_scale = sj["initial_scale"].is_null()
                        ? *std::max_element(c.scales.begin(), c.scales.end())
                        : get_number(sj["initial_scale"], "search.initial_scale");
  if (!(*c.initial_scale >= c.fine_spacing() * (1.0 - kLatticeTolerance))) {
    throw ConfigError("search.initial_scale must be >= the fine-grid spacing");
  }

  c.heldout_stride = get_index(j["heldout"]["stride"], "heldout.stride");
  if (c.heldout_stride < 2) throw ConfigError("heldout.stride must be >= 2");
  if (!j["seed"].is_number_integer() || (!j["seed"].is_number_unsigned() && j["seed"].get<std::int64_t>() < 0)) {
    throw ConfigError("seed must be a non-negative integer");
  }
  c.seed = j["seed"].get<std::uint64_t>();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json sensors = json::array();
  for (const auto& s : c.sensors) {
    sensors.push_back(
        {{"name", s.name}, {"pixels", s.pixels}, {"radius", s.radius}, {"noise_sd", s.noise_sd}, {"layout", s.layout}});
  }
  return json{{"prior", {{"k", c.k}, {"amplitude", c.amplitude}, {"mean_level", c.mean_level}}},
              {"truth", {{"side_n", c.truth_side_n}, {"extent", c.truth_extent}}},
              {"fine_grid", {{"side_n", c.fine_side_n}, {"extent", c.fine_extent}}},
              {"sensors", sensors},
              {"search",
               {{"scales", c.scales},
                {"lambda", c.lambda},
                {"bits_per_scalar", c.bits_per_scalar},
                {"explore_octaves", c.explore_octaves},
                {"concurrent", c.concurrent},
                {"initial_scale", c.initial_scale ? json(*c.initial_scale) : json(nullptr)}}},
              {"heldout", {{"stride", c.heldout_stride}}},
              {"seed", c.seed}};
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::stringstream ks(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ks, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(parts[i]);
      } catch (const std::exception&) {
        throw ConfigError("override '" + key + "': '" + parts[i] + "' is not a list index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + key + "': index out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) *node = json::object();
      node = &(*node)[parts[i]];
    }
    if (last) *node = value;
  }
}

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(config_to_json(cfg).dump()); }

std::uint64_t substream_seed(std::uint64_t seed, const std::string& name) {
  // splitmix64 finalizer over the seed mixed with the stream name hash.
  std::uint64_t z = seed ^ std::stoull(fnv1a_hex(name), nullptr, 16);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

BasisSet fine_grid_of(const ExperimentConfig& cfg) {
  return BasisSet::regular_grid({0.0, 0.0}, cfg.fine_side_n, cfg.fine_side_n, cfg.fine_spacing());
}

Region region_of(const ExperimentConfig& cfg) { return {0.0, 0.0, cfg.fine_extent, cfg.fine_extent}; }

Sensor sensor_of(const ExperimentConfig& cfg, const SensorConfig& s) {
  Sensor out;
  out.pixel_radius = s.radius;
  const double pitch = cfg.fine_extent / static_cast<double>(s.pixels);
  const bool centers = s.layout == "centers";
  const Index n = centers ? s.pixels : s.pixels + 1;
  const double offset = centers ? 0.5 * pitch : 0.0;
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      out.pixel_centers.push_back({offset + static_cast<double>(c) * pitch, offset + static_cast<double>(r) * pitch});
    }
  }
  return out;
}

LinearMeasurement measurement_of(const ExperimentConfig& cfg, const SensorConfig& s, const BasisSet& fine) {
  LinearMap op = build_footprint_operator(fine, sensor_of(cfg, s));
  const Index rows = op.rows();
  return LinearMeasurement(std::move(op), Matrix::Identity(rows, rows) * (s.noise_sd * s.noise_sd));
}

BasisSet heldout_points(const ExperimentConfig& cfg) {
  const double ts = cfg.truth_extent / static_cast<double>(cfg.truth_side_n);
  std::vector<Point2> pts;
  const Index first = cfg.heldout_stride / 2;
  const auto last = static_cast<Index>(std::floor(cfg.fine_extent / ts + kLatticeTolerance));
  for (Index r = first; r <= last; r += cfg.heldout_stride) {
    for (Index c = first; c <= last; c += cfg.heldout_stride) {
      pts.push_back({static_cast<double>(c) * ts, static_cast<double>(r) * ts});
    }
  }
  return BasisSet(std::move(pts));
}

HeightGrid sample_truth(const ExperimentConfig& cfg) {
  return sample_field_spectral(cfg.model(), cfg.truth_side_n, cfg.truth_extent, substream_seed(cfg.seed, "truth"));
}

Vector truth_at(const HeightGrid& truth, const BasisSet& points) {
  const double ts = truth.spacing();
  Vector out(points.size());
  for (Index i = 0; i < points.size(); ++i) {
    const Point2& p = points.point(i);
    const double cx = p.x / ts;
    const double cy = p.y / ts;
    if (std::abs(cx - std::round(cx)) > kLatticeTolerance || std::abs(cy - std::round(cy)) > kLatticeTolerance) {
      throw ConfigError("point is not on the truth lattice");
    }
    const auto col = static_cast<Index>(std::llround(cx)) % truth.side_n;
    const auto row = static_cast<Index>(std::llround(cy)) % truth.side_n;
    out(i) = truth.heights((row + truth.side_n) % truth.side_n, (col + truth.side_n) % truth.side_n);
  }
  return out;
}

json summary_to_json(const RunSummary& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"generation", r.generation},
                    {"sensor", r.sensor},
                    {"chosen_scale", r.chosen_scale},
                    {"basis_size", r.basis_size},
                    {"info_nats", r.info_nats},
                    {"info_bits", r.info_bits},
                    {"rmse_basis", r.rmse_basis},
                    {"rmse_heldout", r.rmse_heldout},
                    {"octaves_explored", r.octaves_explored},
                    {"condition_estimate", r.condition_estimate},
                    {"jitter", r.jitter}});
  }
  return json{{"config_hash", s.config_hash}, {"rows", rows}, {"wall_seconds", s.wall_seconds}};
}

ExperimentArtifacts run_experiment(const ExperimentConfig& cfg, const std::optional<fs::path>& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash(cfg);
  const ExponentialCovModel model = cfg.model();
  ExperimentArtifacts art;
  art.summary.config_hash = hash;

  auto flush_summary = [&] {
    art.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out_dir) write_text(*out_dir / "summary.json", summary_to_json(art.summary).dump(2) + "\n");
  };

  if (out_dir) {
    json resolved = config_to_json(cfg);
    resolved["config_hash"] = hash;
    write_text(*out_dir / "resolved_config.json", resolved.dump(2) + "\n");
  }

  const HeightGrid truth = stage("sample-prior", [&] { return sample_truth(cfg); });
  if (out_dir) save_height_grid(*out_dir / "truth", truth, model, substream_seed(cfg.seed, "truth"), hash);

  const BasisSet fine = fine_grid_of(cfg);
  const Region region = region_of(cfg);
  const BasisSet heldout = heldout_points(cfg);
  const Vector truth_fine = truth_at(truth, fine);
  const Vector truth_heldout = truth_at(truth, heldout);

  KnowledgeRep kr = stage("initial-kr", [&] {
    BasisSet initial = generate_candidate_bases(region, {*cfg.initial_scale}, fine).front();
    return KnowledgeRep::from_prior(model, std::move(initial));
  });

  SearchOptions opts;
  opts.lambda = cfg.lambda;
  opts.bits_per_scalar = cfg.bits_per_scalar;
  opts.concurrent = cfg.concurrent;

  for (std::size_t i = 0; i < cfg.sensors.size(); ++i) {
    const SensorConfig& sc = cfg.sensors[i];
    const std::string tag = "batch-" + std::to_string(i) + " (" + sc.name + ")";
    try {
      const LinearMeasurement meas = stage("simulate " + tag, [&] { return measurement_of(cfg, sc, fine); });
      const Vector x = stage("simulate " + tag, [&] {
        return simulate(truth_fine, meas, substream_seed(cfg.seed, "noise-batch-" + std::to_string(i)));
      });
      const DataPosterior data = stage("update " + tag, [&] { return DataPosterior(model, fine, meas, x); });
      OctaveSearch search = stage("search-scales " + tag, [&] {
        if (cfg.explore_octaves) return explore_octaves(kr, data, region, cfg.scales, opts);
        OctaveSearch s;
        s.sweep = evaluate_scales(kr, data, generate_candidate_bases(region, cfg.scales, fine), opts);
        s.chosen = select_basis(s.sweep.curve, cfg.lambda);
        s.octaves_explored = 1;
        return s;
      });
      art.curves.push_back(search.sweep.curve);
      if (out_dir) {
        write_text(*out_dir / ("learning_curve_" + std::to_string(i + 1) + ".csv"),
                   learning_curve_csv(search.sweep.curve, hash));
      }
      const ScaleCandidate& chosen = search.sweep.candidates[static_cast<std::size_t>(search.chosen)];
      const UpdateResult& res = *chosen.result;
      kr = res.kr_new;

      UpdateRow row;
      row.generation = kr.generation();
      row.sensor = sc.name;
      row.chosen_scale = chosen.scale;
      row.basis_size = kr.basis().size();
      row.info_nats = chosen.report.info_learned_nats;
      row.info_bits = chosen.report.info_learned_bits();
      row.rmse_basis = rms(kr.gauss().mean() - truth_at(truth, kr.basis()));
      row.rmse_heldout = stage("posterior " + tag, [&] {
        return rms(posterior_field_at(kr, model, heldout).mean() - truth_heldout);
      });
      row.octaves_explored = search.octaves_explored;
      row.condition_estimate = res.diagnostics.condition_estimate;
      row.jitter = res.diagnostics.jitter;
      art.summary.rows.push_back(row);
      flush_summary();
    } catch (...) {
      flush_summary();
      throw;
    }
  }

  if (out_dir) save_knowledge_rep(*out_dir / "kr_final", kr, hash);
  art.final_kr = kr;
  flush_summary();
  return art;
}

// ---------------------------------------------------------------------------
// verify

namespace {

Matrix random_spd(std::mt19937_64& rng, Index d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(d, d);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  return symmetrize(a * a.transpose() / static_cast<double>(d) + 0.5 * Matrix::Identity(d, d));
}

Vector random_vector(std::mt19937_64& rng, Index d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

// Composite Simpson rule on [-L, L].
template <typename F>
double simpson(F&& f, double half_width, int intervals) {
  const double h = 2.0 * half_width / intervals;
  double s = f(-half_width) + f(half_width);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(-half_width + i * h);
  return s * h / 3.0;
}

double normal_pdf(double x, double mu, double var) {
  return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

SuiteResult suite_quadrature() {
  SuiteResult r{"quadrature", false, 0.0, 1e-6, ""};
  const double L = 14.0;
  const int n = 40000;
  auto scalar = [](double mu, double var) { return GaussianDensity(Vector::Constant(1, mu), Matrix::Constant(1, 1, var)); };
  auto track = [&](double a, double b) { r.max_error = std::max(r.max_error, std::abs(a - b)); };

  // product N(0,1) x N(2,1)
  const double z = simpson([](double x) { return normal_pdf(x, 0, 1) * normal_pdf(x, 2, 1); }, L, n);
  const double m1 = simpson([&](double x) { return x * normal_pdf(x, 0, 1) * normal_pdf(x, 2, 1); }, L, n) / z;
  const double m2 = simpson([&](double x) { return x * x * normal_pdf(x, 0, 1) * normal_pdf(x, 2, 1); }, L, n) / z;
  const GaussianDensity p = product(scalar(0, 1), scalar(2, 1));
  track(p.mean()(0), m1);
  track(p.cov()(0, 0), m2 - m1 * m1);

  // cross-entropy, entropy, KL
  auto ce = [&](double mu1, double v1, double mu2, double v2) {
    return simpson([&](double x) { return -normal_pdf(x, mu1, v1) * std::log(normal_pdf(x, mu2, v2)); }, L, n);
  };
  track(cross_entropy(scalar(1, 1), scalar(0, 1)), ce(1, 1, 0, 1));
  track(entropy(scalar(0, 1)), ce(0, 1, 0, 1));
  track(kl_divergence(scalar(0, 2), scalar(0, 1)), ce(0, 2, 0, 1) - ce(0, 2, 0, 2));

  // conditioning: prior N(0,1), x = s + eps, var 1, x = 1
  const double zc = simpson([](double s) { return normal_pdf(s, 0, 1) * normal_pdf(1.0, s, 1); }, L, n);
  const double mc = simpson([](double s) { return s * normal_pdf(s, 0, 1) * normal_pdf(1.0, s, 1); }, L, n) / zc;
  const GaussianDensity c =
      condition_on_linear_observation(scalar(0, 1), LinearMap::identity(1), Matrix::Identity(1, 1), Vector::Ones(1));
  track(c.mean()(0), mc);

  r.passed = r.max_error <= r.tolerance;
  r.detail = "1D Simpson oracles for product, cross-entropy, entropy, KL, conditioning";
  return r;
}

SuiteResult suite_kf_equivalence(std::uint64_t seed) {
  SuiteResult r{"kf-equivalence", false, 0.0, 1e-10, ""};
  std::mt19937_64 rng(seed);
  const ExponentialCovModel model(1.5, 1.0, 0.0);
  int cases = 0;
  for (Index side = 1; side <= 3; ++side) {
    for (int rep = 0; rep < 5; ++rep) {
      const BasisSet grid = BasisSet::regular_grid({0, 0}, side, side, 0.3);
      const Index d = grid.size();
      const KnowledgeRep kr(grid, GaussianDensity(random_vector(rng, d), random_spd(rng, d)));
      const Index m = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(d));
      Matrix op(m, d);
      for (Index i = 0; i < op.size(); ++i) op.data()[i] = random_vector(rng, 1)(0);
      const LinearMeasurement meas(LinearMap(op), random_spd(rng, m));
      const Vector x = random_vector(rng, m);
      const UpdateResult g = gkf_update(kr, model, meas, x, grid, grid);
      const UpdateResult k = kf_update(kr, meas, x);
      const double dm = (g.mu_r - k.mu_r).norm() / std::max(1.0, k.mu_r.norm());
      const double dc = (g.sigma_r - k.sigma_r).norm() / k.sigma_r.norm();
      r.max_error = std::max({r.max_error, dm, dc});
      ++cases;
    }
  }
  r.passed = r.max_error <= r.tolerance;
  r.detail = std::to_string(cases) + " random configurations, relative Frobenius error";
  return r;
}

SuiteResult suite_spectrum() {
  SuiteResult r{"spectrum-transform", false, 0.0, 1e-4, ""};
  for (double k : {0.5, 1.0, 3.0}) {
    const SpectrumCheck c = verify_spectrum_transform(ExponentialCovModel(k, 1.0), {0.0, 0.5, 1.0, 2.0, 5.0, 10.0});
    r.max_error = std::max(r.max_error, c.max_relative_error);
  }
  r.passed = r.max_error <= r.tolerance;
  r.detail = "k in {0.5, 1, 3}, s in {0, 0.5, 1, 2, 5, 10}, relative error";
  return r;
}

SuiteResult suite_scaling(const ExperimentConfig& cfg, std::uint64_t seed) {
  SuiteResult r{"scaling-consistency", false, 0.0, 1e-8, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ExponentialCovModel model = cfg.model();
  for (int rep = 0; rep < 20; ++rep) {
    const BasisSet basis({{0.1, 0.1}, {0.4, 0.2}, {0.2, 0.45}});
    const KnowledgeRep kr(basis, GaussianDensity(random_vector(rng, 3), random_spd(rng, 3) * 0.1));
    std::vector<Point2> pts;
    for (int i = 0; i < 6; ++i) pts.push_back({u(rng) * 0.5, u(rng) * 0.5});
    const BasisSet a(pts);
    const BasisSet s(std::vector<Point2>(pts.begin(), pts.begin() + 3));
    r.max_error = std::max(r.max_error, check_scaling_consistency(kr, model, s, a));
  }
  r.passed = r.max_error <= r.tolerance;
  r.detail = "20 random nested query pairs around a 3-point KR";
  return r;
}

SuiteResult suite_symmetry(const ExperimentConfig& cfg, bool inject) {
  SuiteResult r{"symmetry", false, 0.0, kSymmetryTolerance, ""};
  const BasisSet grid = BasisSet::regular_grid({0, 0}, 3, 3, cfg.fine_spacing());
  const ExponentialCovModel model = cfg.model();
  const LinearMeasurement meas(LinearMap::identity(grid.size()), Matrix::Identity(grid.size(), grid.size()) * 0.01);
  const UpdateResult res = gkf_update(KnowledgeRep::from_prior(model, grid), model, meas,
                                      Vector::Zero(grid.size()), grid, grid);
  Matrix sigma = res.sigma_r;
  if (inject) sigma(2, 5) += 1e-3 * sigma.cwiseAbs().maxCoeff();
  const auto loc = find_asymmetry(sigma);
  const double scale = sigma.cwiseAbs().maxCoeff();
  r.max_error = (sigma - sigma.transpose()).cwiseAbs().maxCoeff() / scale;
  r.passed = !loc.has_value();
  if (loc) {
    r.detail = "asymmetric covariance at (" + std::to_string(loc->row) + ", " + std::to_string(loc->col) +
               "), difference " + format_real(loc->difference);
  } else {
    r.detail = "updated covariance symmetric";
  }
  return r;
}

}  // namespace

std::vector<SuiteResult> run_verify(const ExperimentConfig& cfg, const VerifyOptions& options) {
  std::vector<SuiteResult> out;
  auto guarded = [&](const std::string& name, double tol, auto&& f) {
    try {
      out.push_back(f());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::numeric_limits<double>::infinity(), tol, std::string("error: ") + e.what()});
    }
  };
  guarded("quadrature", 1e-6, [&] { return suite_quadrature(); });
  guarded("kf-equivalence", 1e-10, [&] { return suite_kf_equivalence(options.seed); });
  guarded("spectrum-transform", 1e-4, [&] { return suite_spectrum(); });
  guarded("scaling-consistency", 1e-8, [&] { return suite_scaling(cfg, options.seed); });
  guarded("symmetry", kSymmetryTolerance, [&] { return suite_symmetry(cfg, options.inject_asymmetry); });
  return out;
}

json verify_report_json(const std::vector<SuiteResult>& suites) {
  json arr = json::array();
  bool all = true;
  for (const auto& s : suites) {
    all = all && s.passed;
    arr.push_back({{"name", s.name},
                   {"passed", s.passed},
                   {"max_error", std::isfinite(s.max_error) ? json(s.max_error) : json(nullptr)},
                   {"tolerance", s.tolerance},
                   {"detail", s.detail}});
  }
  return json{{"all_passed", all}, {"suites", arr}};
}

}  // namespace gkf
