#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gkf/engine.hpp"
#include "gkf/experiment.hpp"
#include "gkf/info_ledger.hpp"
#include "gkf/io.hpp"
#include "gkf/scale_search.hpp"

namespace py = pybind11;
using namespace gkf;

namespace {

// Configs and reports cross the boundary as JSON text; the Python package
// wraps them in dicts.
ExperimentConfig config_from_text(const std::string& text) { return resolve_config(nlohmann::json::parse(text)); }

std::vector<Point2> to_points(const std::vector<std::pair<double, double>>& xy) {
  std::vector<Point2> pts;
  pts.reserve(xy.size());
  for (const auto& [x, y] : xy) pts.push_back({x, y});
  return pts;
}

py::dict curve_row_dict(const CurveRow& r) {
  py::dict d;
  d["scale"] = r.scale;
  d["basis_size"] = r.basis_size;
  d["info_nats"] = r.info_nats;
  d["info_bits"] = r.info_bits;
  d["storage_bits"] = r.storage_bits;
  d["penalized_score"] = r.penalized_score;
  d["status"] = r.status;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Generalized Kalman filter over changing bases";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<GaussianDensity>(m, "GaussianDensity")
      .def(py::init<Vector, Matrix>(), py::arg("mean"), py::arg("cov"))
      .def_property_readonly("mean", &GaussianDensity::mean)
      .def_property_readonly("cov", &GaussianDensity::cov)
      .def_property_readonly("dim", &GaussianDensity::dim)
      .def("__repr__", [](const GaussianDensity& g) { return "<GaussianDensity dim=" + std::to_string(g.dim()) + ">"; });

  m.def("product", &product, py::arg("g1"), py::arg("g2"));
  m.def("marginalize", [](const GaussianDensity& g, std::vector<Index> keep) {
    return marginalize(g, LinearMap::selection(std::move(keep), g.dim()));
  }, py::arg("g"), py::arg("keep"));
  m.def("condition", [](const GaussianDensity& prior, const Matrix& op, const Matrix& noise, const Vector& x) {
    return condition_on_linear_observation(prior, LinearMap(op), noise, x);
  }, py::arg("prior"), py::arg("operator"), py::arg("noise_cov"), py::arg("x"));
  m.def("cross_entropy", &cross_entropy, py::arg("g1"), py::arg("g2"));
  m.def("entropy", &entropy, py::arg("g"));
  m.def("kl_divergence", &kl_divergence, py::arg("g1"), py::arg("g2"));

  py::class_<ExponentialCovModel>(m, "ExponentialCovModel")
      .def(py::init<double, double, double>(), py::arg("decay_k"), py::arg("amplitude") = 1.0,
           py::arg("mean_level") = 0.0)
      .def_property_readonly("decay_k", &ExponentialCovModel::decay_k)
      .def_property_readonly("amplitude", &ExponentialCovModel::amplitude)
      .def_property_readonly("mean_level", &ExponentialCovModel::mean_level);

  py::class_<BasisSet>(m, "BasisSet")
      .def(py::init([](const std::vector<std::pair<double, double>>& xy) { return BasisSet(to_points(xy)); }),
           py::arg("points"))
      .def_static("regular_grid", [](double x0, double y0, Index nx, Index ny, double spacing) {
        return BasisSet::regular_grid({x0, y0}, nx, ny, spacing);
      }, py::arg("x0"), py::arg("y0"), py::arg("nx"), py::arg("ny"), py::arg("spacing"))
      .def("__len__", &BasisSet::size)
      .def_property_readonly("points", [](const BasisSet& b) {
        Matrix p(b.size(), 2);
        for (Index i = 0; i < b.size(); ++i) p.row(i) << b.point(i).x, b.point(i).y;
        return p;
      })
      .def_property_readonly("scale_tag", [](const BasisSet& b) { return b.scale_tag(); })
      .def("is_subset_of", &BasisSet::is_subset_of);

  m.def("marginal_at_basis", &marginal_at_basis, py::arg("model"), py::arg("basis"));
  m.def("power_spectrum", [](const ExponentialCovModel& model, double ux, double uy) {
    return power_spectrum(model, {ux, uy});
  }, py::arg("model"), py::arg("ux"), py::arg("uy"));
  m.def("sample_field", [](const ExponentialCovModel& model, Index side_n, double extent, std::uint64_t seed) {
    return sample_field_spectral(model, side_n, extent, seed).heights;
  }, py::arg("model"), py::arg("side_n"), py::arg("extent"), py::arg("seed"));

  py::class_<KnowledgeRep>(m, "KnowledgeRep")
      .def(py::init<BasisSet, GaussianDensity, std::uint64_t>(), py::arg("basis"), py::arg("gauss"),
           py::arg("generation") = 0)
      .def_static("from_prior", &KnowledgeRep::from_prior, py::arg("model"), py::arg("basis"))
      .def_property_readonly("basis", &KnowledgeRep::basis)
      .def_property_readonly("gauss", &KnowledgeRep::gauss)
      .def_property_readonly("generation", &KnowledgeRep::generation)
      .def("save", [](const KnowledgeRep& kr, const std::filesystem::path& stem) { save_knowledge_rep(stem, kr); })
      .def_static("load", &load_knowledge_rep, py::arg("stem"));

  py::class_<LinearMeasurement>(m, "LinearMeasurement")
      .def(py::init([](const Matrix& op, const Matrix& noise) { return LinearMeasurement(LinearMap(op), noise); }),
           py::arg("operator"), py::arg("noise_cov"))
      .def_property_readonly("operator", [](const LinearMeasurement& lm) { return lm.op().matrix(); })
      .def_property_readonly("noise_cov", &LinearMeasurement::noise_cov);

  m.def("footprint_operator", [](const BasisSet& fine, const std::vector<std::pair<double, double>>& centers,
                                 double radius) {
    return build_footprint_operator(fine, Sensor{to_points(centers), radius}).matrix();
  }, py::arg("fine_grid"), py::arg("pixel_centers"), py::arg("pixel_radius"));
  m.def("simulate", &simulate, py::arg("truth"), py::arg("measurement"), py::arg("seed"));
  m.def("linearize", [](const std::function<Vector(const Vector&)>& f,
                        const std::function<Matrix(const Vector&)>& jac, const Matrix& noise, const Vector& mu_s,
                        const Vector& x) {
    const auto l = linearize(NonlinearMeasurement{f, jac, noise}, mu_s, x);
    return py::make_tuple(l.measurement, l.adjusted_x);
  }, py::arg("f"), py::arg("jacobian"), py::arg("noise_cov"), py::arg("mu_s"), py::arg("x"));

  py::class_<UpdateDiagnostics>(m, "UpdateDiagnostics")
      .def_readonly("condition_estimate", &UpdateDiagnostics::condition_estimate)
      .def_readonly("jitter", &UpdateDiagnostics::jitter)
      .def_readonly("min_eigenvalue", &UpdateDiagnostics::min_eigenvalue)
      .def_readonly("union_size", &UpdateDiagnostics::union_size)
      .def_readonly("intersection_size", &UpdateDiagnostics::intersection_size);

  py::class_<UpdateResult>(m, "UpdateResult")
      .def_readonly("kr_new", &UpdateResult::kr_new)
      .def_readonly("mu_r", &UpdateResult::mu_r)
      .def_readonly("sigma_r", &UpdateResult::sigma_r)
      .def_readonly("info_learned", &UpdateResult::info_learned)
      .def_readonly("diagnostics", &UpdateResult::diagnostics);

  py::class_<DataPosterior>(m, "DataPosterior")
      .def(py::init<const ExponentialCovModel&, BasisSet, const LinearMeasurement&, const Vector&>(),
           py::arg("model"), py::arg("fine_grid"), py::arg("measurement"), py::arg("x"))
      .def_property_readonly("posterior", &DataPosterior::posterior);

  m.def("gkf_update", py::overload_cast<const KnowledgeRep&, const DataPosterior&, const BasisSet&>(&gkf_update),
        py::arg("kr"), py::arg("data"), py::arg("new_basis"));
  m.def("kf_update", &kf_update, py::arg("kr"), py::arg("measurement"), py::arg("x"));
  m.def("fine_posterior", &fine_posterior, py::arg("prior"), py::arg("fine_grid"), py::arg("kr"),
        py::arg("measurement"), py::arg("x"));
  m.def("posterior_field_at", &posterior_field_at, py::arg("kr"), py::arg("model"), py::arg("query"));
  m.def("kl_to_reference", &kl_to_reference, py::arg("candidate"), py::arg("reference"), py::arg("fine_grid"));
  m.def("check_scaling_consistency", &check_scaling_consistency, py::arg("kr"), py::arg("model"), py::arg("s"),
        py::arg("a"));

  m.def("information_learned", &information_learned, py::arg("reference"), py::arg("prior"), py::arg("kr_new"));
  m.def("storage_cost_bits", py::overload_cast<Index, int>(&storage_cost_bits), py::arg("basis_size"),
        py::arg("bits_per_scalar") = 64);
  m.def("penalized_score", &penalized_score, py::arg("info_nats"), py::arg("bits"), py::arg("lambda_"));

  m.def("candidate_bases", [](const std::tuple<double, double, double, double>& region,
                              const std::vector<double>& scales, const BasisSet& fine) {
    const auto [x0, y0, x1, y1] = region;
    return generate_candidate_bases(Region{x0, y0, x1, y1}, scales, fine);
  }, py::arg("region"), py::arg("scales"), py::arg("fine_grid"));
  m.def("evaluate_scales", [](const KnowledgeRep& kr, const DataPosterior& data, const std::vector<BasisSet>& cands,
                              double lambda, bool concurrent) {
    SearchOptions opts;
    opts.lambda = lambda;
    opts.concurrent = concurrent;
    const auto sweep = evaluate_scales(kr, data, cands, opts);
    py::list rows;
    for (const auto& r : sweep.curve.rows) rows.append(curve_row_dict(r));
    py::list results;
    for (const auto& c : sweep.candidates) {
      if (c.ok()) {
        results.append(py::cast(*c.result));
      } else {
        results.append(py::none());
      }
    }
    return py::make_tuple(rows, results, select_basis(sweep.curve, lambda));
  }, py::arg("kr"), py::arg("data"), py::arg("candidates"), py::arg("lambda_") = 0.0, py::arg("concurrent") = false);

  m.def("_resolve_config", [](const std::string& text) { return config_to_json(config_from_text(text)).dump(); });
  m.def("_default_config", [] { return default_config_json().dump(); });
  m.def("_config_hash", [](const std::string& text) { return config_hash(config_from_text(text)); });
  m.def("_run_experiment", [](const std::string& text, std::optional<std::filesystem::path> out) {
    const auto art = run_experiment(config_from_text(text), out);
    return py::make_tuple(summary_to_json(art.summary).dump(), art.final_kr);
  }, py::arg("config"), py::arg("out_dir") = std::nullopt);
  m.def("_verify", [](const std::string& text, bool inject_asymmetry) {
    VerifyOptions opts;
    opts.inject_asymmetry = inject_asymmetry;
    return verify_report_json(run_verify(config_from_text(text), opts)).dump();
  }, py::arg("config"), py::arg("inject_asymmetry") = false);
}
