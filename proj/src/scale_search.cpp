#include "gkf/scale_search.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gkf/io.hpp"

namespace gkf {

namespace {

constexpr double kScaleTolerance = 1e-9;

double candidate_scale(const BasisSet& b) {
  if (b.scale_tag()) return *b.scale_tag();
  return min_spacing(b);
}

ScaleCandidate evaluate_one(const KnowledgeRep& kr, const DataPosterior& data, const BasisSet& basis,
                            const SearchOptions& options) {
  ScaleCandidate c;
  c.basis = basis;
  c.scale = candidate_scale(basis);
  try {
    c.result = gkf_update(kr, data, basis);
    c.report = make_report(c.result->info_learned, basis.size(), options.bits_per_scalar, options.lambda);
  } catch (const std::exception& e) {
    c.result.reset();
    c.status = std::string("failed: ") + e.what();
    c.report = make_report(0.0, basis.size(), options.bits_per_scalar, options.lambda);
  }
  return c;
}

CurveRow row_of(const ScaleCandidate& c) {
  CurveRow r;
  r.scale = c.scale;
  r.basis_size = c.basis.size();
  r.info_nats = c.report.info_learned_nats;
  r.info_bits = c.report.info_learned_bits();
  r.storage_bits = c.report.storage_bits;
  r.penalized_score = c.report.penalized_score;
  r.status = c.status;
  return r;
}

}  // namespace

double grid_spacing(const BasisSet& grid) {
  if (grid.scale_tag()) return *grid.scale_tag();
  return min_spacing(grid);
}

std::vector<BasisSet> generate_candidate_bases(const Region& region, const std::vector<double>& scales,
                                               const BasisSet& fine_grid) {
  if (fine_grid.empty()) throw std::invalid_argument("fine grid is empty");
  if (!(region.x1 > region.x0) || !(region.y1 > region.y0)) {
    throw std::invalid_argument("region must have positive extent");
  }
  double fx0 = std::numeric_limits<double>::infinity();
  double fy0 = fx0;
  double fx1 = -fx0;
  double fy1 = -fx0;
  for (const auto& p : fine_grid.points()) {
    fx0 = std::min(fx0, p.x);
    fy0 = std::min(fy0, p.y);
    fx1 = std::max(fx1, p.x);
    fy1 = std::max(fy1, p.y);
  }
  const double spacing = grid_spacing(fine_grid);
  const double slack = 1e-9 + 1e-9 * std::max(std::abs(fx1), std::abs(fy1));
  if (region.x0 < fx0 - slack || region.y0 < fy0 - slack || region.x1 > fx1 + slack ||
      region.y1 > fy1 + slack) {
    throw std::invalid_argument("region extends outside the fine grid");
  }
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] >= spacing * (1.0 - kScaleTolerance))) {
      throw std::invalid_argument("scale " + std::to_string(scales[i]) + " is finer than the fine grid");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(scales[i] - scales[j]) <= kScaleTolerance * std::max(scales[i], scales[j])) {
        throw std::invalid_argument("scales must be distinct");
      }
    }
  }
  std::vector<BasisSet> out;
  out.reserve(scales.size());
  for (double s : scales) {
    const auto nx = static_cast<Index>(std::floor((region.x1 - region.x0) / s + 1e-9));
    const auto ny = static_cast<Index>(std::floor((region.y1 - region.y0) / s + 1e-9));
    std::vector<Point2> pts;
    std::vector<std::int64_t> ids;
    for (Index j = 0; j <= ny; ++j) {
      for (Index i = 0; i <= nx; ++i) {
        const Point2 target{region.x0 + static_cast<double>(i) * s, region.y0 + static_cast<double>(j) * s};
        Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index f = 0; f < fine_grid.size(); ++f) {
          const double dd = distance(target, fine_grid.point(f));
          if (dd < best_d) {
            best_d = dd;
            best = f;
          }
        }
        const std::int64_t id = fine_grid.id(best);
        if (std::find(ids.begin(), ids.end(), id) != ids.end()) continue;
        ids.push_back(id);
        pts.push_back(fine_grid.point(best));
      }
    }
    out.emplace_back(std::move(pts), std::move(ids), s);
  }
  return out;
}

ScaleSweep evaluate_scales(const KnowledgeRep& kr, const DataPosterior& data,
                           const std::vector<BasisSet>& candidates, const SearchOptions& options) {
  if (candidates.empty()) throw std::invalid_argument("evaluate_scales: no candidates");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidate_scale(candidates[a]) > candidate_scale(candidates[b]);
  });

  ScaleSweep sweep;
  sweep.candidates.resize(candidates.size());
  if (options.concurrent) {
    std::vector<std::future<ScaleCandidate>> jobs;
    jobs.reserve(order.size());
    for (std::size_t k : order) {
      jobs.push_back(std::async(std::launch::async, [&, k] { return evaluate_one(kr, data, candidates[k], options); }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) sweep.candidates[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < order.size(); ++i) {
      sweep.candidates[i] = evaluate_one(kr, data, candidates[order[i]], options);
    }
  }
  for (const auto& c : sweep.candidates) sweep.curve.rows.push_back(row_of(c));
  return sweep;
}

ScaleSweep evaluate_scales(const KnowledgeRep& kr, const ExponentialCovModel& model,
                           const LinearMeasurement& meas, const Vector& x,
                           const std::vector<BasisSet>& candidates, const BasisSet& fine_grid,
                           const SearchOptions& options) {
  return evaluate_scales(kr, DataPosterior(model, fine_grid, meas, x), candidates, options);
}

Index select_basis(const LearningCurve& curve, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < curve.rows.size(); ++i) {
    const CurveRow& r = curve.rows[i];
    if (r.status != kStatusOk) continue;
    const double score = penalized_score(r.info_nats, r.storage_bits, lambda);
    bool better = !best.has_value() || score > best_score;
    if (!better && score == best_score) {
      const CurveRow& b = curve.rows[*best];
      better = r.basis_size < b.basis_size || (r.basis_size == b.basis_size && r.scale > b.scale);
    }
    if (better) {
      best = i;
      best_score = score;
    }
  }
  if (!best) throw std::runtime_error("select_basis: every candidate failed");
  return static_cast<Index>(*best);
}

OctaveSearch explore_octaves(const KnowledgeRep& kr, const DataPosterior& data, const Region& region,
                             std::vector<double> initial_scales, const SearchOptions& options) {
  if (initial_scales.empty()) throw std::invalid_argument("explore_octaves: no scales");
  const double spacing = grid_spacing(data.fine_grid());
  OctaveSearch out;
  out.sweep = evaluate_scales(kr, data, generate_candidate_bases(region, initial_scales, data.fine_grid()),
                              options);
  out.octaves_explored = 1;
  Index chosen = select_basis(out.sweep.curve, options.lambda);
  double best = out.sweep.curve.rows[static_cast<std::size_t>(chosen)].penalized_score;
  double finest = *std::min_element(initial_scales.begin(), initial_scales.end());
  while (true) {
    const double next = 0.5 * finest;
    if (next < spacing * (1.0 - kScaleTolerance)) break;
    ScaleSweep more = evaluate_scales(kr, data, generate_candidate_bases(region, {next}, data.fine_grid()),
                                      options);
    out.sweep.candidates.push_back(std::move(more.candidates.front()));
    out.sweep.curve.rows.push_back(more.curve.rows.front());
    ++out.octaves_explored;
    finest = next;
    chosen = select_basis(out.sweep.curve, options.lambda);
    const double now = out.sweep.curve.rows[static_cast<std::size_t>(chosen)].penalized_score;
    const double improvement = now - best;
    best = now;
    if (improvement < kOctaveImprovement) break;
  }
  out.chosen = chosen;
  return out;
}

std::string learning_curve_csv(const LearningCurve& curve, const std::string& config_hash) {
  std::ostringstream os;
  if (!config_hash.empty()) os << "# config_hash=" << config_hash << '\n';
  os << kLearningCurveHeader << '\n';
  for (const auto& r : curve.rows) {
    os << format_real(r.scale) << ',' << r.basis_size << ',' << format_real(r.info_nats) << ','
       << format_real(r.info_bits) << ',' << r.storage_bits << ',' << format_real(r.penalized_score) << ','
       << csv_quote(r.status) << '\n';
  }
  return os.str();
}

}  // namespace gkf
