// gkf: command-line driver for sampling, simulating, updating, scale
// search, full experiments and the oracle self-check.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gkf/experiment.hpp"
#include "gkf/info_ledger.hpp"
#include "gkf/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

gkf::ExperimentConfig load_config(const Common& c) {
  json user = json::object();
  if (!c.config_path.empty()) {
    try {
      user = json::parse(gkf::read_text(c.config_path));
    } catch (const json::parse_error& e) {
      throw gkf::ConfigError("cannot parse " + c.config_path + ": " + e.what());
    }
  }
  for (const auto& o : c.overrides) gkf::apply_override(user, o);
  return gkf::resolve_config(user);
}

void dump_config(const gkf::ExperimentConfig& cfg, const fs::path& dir) {
  json j = gkf::config_to_json(cfg);
  j["config_hash"] = gkf::config_hash(cfg);
  gkf::write_text(dir / "resolved_config.json", j.dump(2) + "\n");
}

const gkf::SensorConfig& sensor_at(const gkf::ExperimentConfig& cfg, std::size_t i) {
  if (i >= cfg.sensors.size()) throw gkf::ConfigError("sensor index " + std::to_string(i) + " out of range");
  return cfg.sensors[i];
}

gkf::KnowledgeRep load_or_initial(const gkf::ExperimentConfig& cfg, const std::string& kr_stem) {
  if (!kr_stem.empty()) return gkf::load_knowledge_rep(kr_stem);
  const auto fine = gkf::fine_grid_of(cfg);
  auto basis = gkf::generate_candidate_bases(gkf::region_of(cfg), {*cfg.initial_scale}, fine).front();
  return gkf::KnowledgeRep::from_prior(cfg.model(), std::move(basis));
}

gkf::Vector load_data(const std::string& path) {
  const gkf::Matrix m = gkf::read_matrix_csv(path);
  if (m.cols() != 1) throw std::runtime_error(path + " must hold one column");
  return m.col(0);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "Override a config key, e.g. --set prior.k=4");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Kalman filter over Gaussian height fields"};
  app.require_subcommand(1);

  Common common;
  std::string out;
  std::string truth_stem;
  std::string kr_stem;
  std::string data_path;
  std::size_t sensor = 0;
  double scale = 0.0;
  bool inject = false;

  auto* sample_cmd = app.add_subcommand("sample-prior", "Draw a truth surface from the prior");
  add_common(sample_cmd, common);
  sample_cmd->add_option("--out", out, "Output directory")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one sensor batch over a truth surface");
  add_common(simulate_cmd, common);
  simulate_cmd->add_option("--truth", truth_stem, "Truth stem (as written by sample-prior)")->required();
  simulate_cmd->add_option("--sensor", sensor, "Sensor index in the config")->required();
  simulate_cmd->add_option("--out", out, "Output data CSV")->required();

  auto* update_cmd = app.add_subcommand("update", "One update onto the grid at a given scale");
  add_common(update_cmd, common);
  update_cmd->add_option("--kr", kr_stem, "KR stem (default: prior at the initial scale)");
  update_cmd->add_option("--data", data_path, "Data CSV")->required();
  update_cmd->add_option("--sensor", sensor, "Sensor index that produced the data")->required();
  update_cmd->add_option("--scale", scale, "Spacing of the new basis")->required();
  update_cmd->add_option("--out", out, "Output KR stem")->required();

  auto* search_cmd = app.add_subcommand("search-scales", "Sweep candidate scales for one data batch");
  add_common(search_cmd, common);
  search_cmd->add_option("--kr", kr_stem, "KR stem (default: prior at the initial scale)");
  search_cmd->add_option("--data", data_path, "Data CSV")->required();
  search_cmd->add_option("--sensor", sensor, "Sensor index that produced the data")->required();
  search_cmd->add_option("--out", out, "Output directory")->required();

  auto* run_cmd = app.add_subcommand("run-experiment", "Full sample/simulate/search/update schedule");
  add_common(run_cmd, common);
  run_cmd->add_option("--out", out, "Output directory")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle self-check suites");
  add_common(verify_cmd, common);
  verify_cmd->add_option("--out", out, "Write the JSON report here as well");
  verify_cmd->add_flag("--inject-asymmetry", inject, "Corrupt one covariance entry before the symmetry check");

  CLI11_PARSE(app, argc, argv);

  try {
    const gkf::ExperimentConfig cfg = load_config(common);
    const std::string hash = gkf::config_hash(cfg);

    if (*sample_cmd) {
      const auto truth = gkf::sample_truth(cfg);
      gkf::save_height_grid(fs::path(out) / "truth", truth, cfg.model(), gkf::substream_seed(cfg.seed, "truth"), hash);
      dump_config(cfg, out);
      std::cout << "wrote " << (fs::path(out) / "truth.csv").string() << " (max imaginary part "
                << gkf::format_real(truth.max_imaginary) << ")\n";
    } else if (*simulate_cmd) {
      const auto truth = gkf::load_height_grid(truth_stem);
      const auto fine = gkf::fine_grid_of(cfg);
      const auto meas = gkf::measurement_of(cfg, sensor_at(cfg, sensor), fine);
      const gkf::Vector x = gkf::simulate(gkf::truth_at(truth, fine), meas,
                                          gkf::substream_seed(cfg.seed, "noise-batch-" + std::to_string(sensor)));
      gkf::write_matrix_csv(out, gkf::Matrix(x), hash);
      std::cout << "wrote " << x.size() << " readings to " << out << "\n";
    } else if (*update_cmd) {
      const auto fine = gkf::fine_grid_of(cfg);
      const auto kr = load_or_initial(cfg, kr_stem);
      const auto meas = gkf::measurement_of(cfg, sensor_at(cfg, sensor), fine);
      const auto basis = gkf::generate_candidate_bases(gkf::region_of(cfg), {scale}, fine).front();
      const auto res = gkf::gkf_update(kr, cfg.model(), meas, load_data(data_path), basis, fine);
      gkf::save_knowledge_rep(out, res.kr_new, hash);
      std::cout << "generation " << res.kr_new.generation() << ", basis " << basis.size() << ", info "
                << gkf::format_real(res.info_learned) << " nats, jitter " << gkf::format_real(res.diagnostics.jitter)
                << "\n";
    } else if (*search_cmd) {
      const auto fine = gkf::fine_grid_of(cfg);
      const auto kr = load_or_initial(cfg, kr_stem);
      const auto meas = gkf::measurement_of(cfg, sensor_at(cfg, sensor), fine);
      const gkf::DataPosterior data(cfg.model(), fine, meas, load_data(data_path));
      gkf::SearchOptions opts{cfg.lambda, cfg.bits_per_scalar, cfg.concurrent};
      const auto search = gkf::explore_octaves(kr, data, gkf::region_of(cfg), cfg.scales, opts);
      const auto& chosen = search.sweep.candidates[static_cast<std::size_t>(search.chosen)];
      gkf::write_text(fs::path(out) / "learning_curve.csv", gkf::learning_curve_csv(search.sweep.curve, hash));
      gkf::save_knowledge_rep(fs::path(out) / "kr_chosen", chosen.result->kr_new, hash);
      dump_config(cfg, out);
      std::cout << gkf::learning_curve_csv(search.sweep.curve) << "chosen scale " << gkf::format_real(chosen.scale)
                << "\n";
    } else if (*run_cmd) {
      const auto art = gkf::run_experiment(cfg, fs::path(out));
      std::cout << gkf::summary_to_json(art.summary).dump(2) << "\n";
    } else if (*verify_cmd) {
      const auto report = gkf::verify_report_json(gkf::run_verify(cfg, {inject, cfg.seed}));
      if (!out.empty()) gkf::write_text(out, report.dump(2) + "\n");
      std::cout << report.dump(2) << "\n";
      return report["all_passed"].get<bool>() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
