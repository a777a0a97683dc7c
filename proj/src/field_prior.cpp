#include "gkf/field_prior.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>

namespace gkf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHankelTailBound = 1e-12;
constexpr double kQuadratureTolerance = 1e-12;
constexpr double kQuadratureAcceptance = 1e-7;

std::string describe(const Point2& p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

Index signed_frequency(Index a, Index n) { return a < n / 2 ? a : a - n; }

}  // namespace

double distance(const Point2& p, const Point2& q) { return std::hypot(p.x - q.x, p.y - q.y); }

BasisSet::BasisSet(std::vector<Point2> points, std::optional<double> scale_tag)
    : points_(std::move(points)), scale_tag_(scale_tag) {
  ids_.resize(points_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) ids_[i] = static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (distance(points_[i], points_[j]) <= kPointTolerance) {
        throw std::invalid_argument("basis has duplicate point " + describe(points_[i]));
      }
    }
  }
}

BasisSet::BasisSet(std::vector<Point2> points, std::vector<std::int64_t> ids,
                   std::optional<double> scale_tag)
    : BasisSet(std::move(points), scale_tag) {
  if (ids.size() != points_.size()) throw DimensionError("basis ids and points differ in length");
  if (std::set<std::int64_t>(ids.begin(), ids.end()).size() != ids.size()) {
    throw std::invalid_argument("basis ids must be unique");
  }
  ids_ = std::move(ids);
}

BasisSet BasisSet::regular_grid(Point2 origin, Index nx, Index ny, double spacing) {
  if (nx < 0 || ny < 0 || !(spacing > 0.0)) throw std::invalid_argument("invalid grid shape");
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (Index j = 0; j <= ny; ++j) {
    for (Index i = 0; i <= nx; ++i) {
      pts.push_back({origin.x + static_cast<double>(i) * spacing,
                     origin.y + static_cast<double>(j) * spacing});
    }
  }
  return BasisSet(std::move(pts), spacing);
}

std::optional<Index> BasisSet::find(const Point2& p) const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (std::abs(points_[i].x - p.x) <= kPointTolerance &&
        std::abs(points_[i].y - p.y) <= kPointTolerance &&
        distance(points_[i], p) <= kPointTolerance) {
      return static_cast<Index>(i);
    }
  }
  return std::nullopt;
}

bool BasisSet::is_subset_of(const BasisSet& other) const {
  return std::all_of(points_.begin(), points_.end(),
                     [&](const Point2& p) { return other.contains(p); });
}

std::vector<Index> BasisSet::indices_in(const BasisSet& superset) const {
  std::vector<Index> out;
  out.reserve(points_.size());
  for (const auto& p : points_) {
    auto at = superset.find(p);
    if (!at) throw std::invalid_argument("point " + describe(p) + " is not in the basis");
    out.push_back(*at);
  }
  return out;
}

BasisSet basis_union(const BasisSet& a, const BasisSet& b) {
  std::vector<Point2> pts = a.points();
  std::vector<std::int64_t> ids = a.ids();
  std::int64_t next = ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
  std::set<std::int64_t> taken(ids.begin(), ids.end());
  for (Index i = 0; i < b.size(); ++i) {
    if (a.contains(b.point(i))) continue;
    pts.push_back(b.point(i));
    std::int64_t id = b.id(i);
    if (taken.count(id) != 0) id = next++;
    taken.insert(id);
    next = std::max(next, id + 1);
    ids.push_back(id);
  }
  return BasisSet(std::move(pts), std::move(ids));
}

BasisSet basis_intersection(const BasisSet& a, const BasisSet& b) {
  std::vector<Point2> pts;
  std::vector<std::int64_t> ids;
  for (Index i = 0; i < a.size(); ++i) {
    if (b.contains(a.point(i))) {
      pts.push_back(a.point(i));
      ids.push_back(a.id(i));
    }
  }
  return BasisSet(std::move(pts), std::move(ids));
}

LinearMap selection_map(const BasisSet& from, const BasisSet& to) {
  return LinearMap::selection(to.indices_in(from), from.size());
}

double min_spacing(const BasisSet& basis) {
  if (basis.size() < 2) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < basis.size(); ++i) {
    for (Index j = i + 1; j < basis.size(); ++j) {
      best = std::min(best, distance(basis.point(i), basis.point(j)));
    }
  }
  return best;
}

ExponentialCovModel::ExponentialCovModel(double decay_k, double amplitude, double mean_level)
    : decay_k_(decay_k), amplitude_(amplitude), mean_level_(mean_level) {
  if (!(decay_k > 0.0) || !std::isfinite(decay_k)) throw std::invalid_argument("decay_k must be > 0");
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw std::invalid_argument("amplitude must be > 0");
  }
  if (!std::isfinite(mean_level)) throw std::invalid_argument("mean_level must be finite");
}

double covariance(const ExponentialCovModel& model, const Point2& p, const Point2& q) {
  return model.amplitude() * std::exp(-model.decay_k() * distance(p, q));
}

Matrix covariance_matrix(const ExponentialCovModel& model, const BasisSet& rows, const BasisSet& cols) {
  Matrix k(rows.size(), cols.size());
  for (Index j = 0; j < cols.size(); ++j) {
    for (Index i = 0; i < rows.size(); ++i) k(i, j) = covariance(model, rows.point(i), cols.point(j));
  }
  return k;
}

double power_spectrum(const ExponentialCovModel& model, const Point2& u) {
  const double k = model.decay_k();
  const double s2 = u.x * u.x + u.y * u.y;
  return model.amplitude() * kTwoPi * k / std::pow(s2 + k * k, 1.5);
}

SpectrumCheck verify_spectrum_transform(const ExponentialCovModel& model,
                                        const std::vector<double>& s_values) {
  using Integrator = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double k = model.decay_k();
  const double r_max = -std::log(kHankelTailBound) / k;
  SpectrumCheck out;
  out.s_values = s_values;
  for (double s : s_values) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("s values must be finite and >= 0");
    // Panels no wider than half an oscillation of J0 keep every piece smooth.
    const double width = s > 0.0 ? std::min(1.0, std::numbers::pi / s) : 1.0;
    const auto panels = static_cast<int>(std::ceil(r_max / width));
    auto integrand = [k, s](double r) { return r * std::exp(-k * r) * boost::math::cyl_bessel_j(0, r * s); };
    double total = 0.0;
    double total_error = 0.0;
    double l1 = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double a = r_max * p / panels;
      const double b = r_max * (p + 1) / panels;
      double err = 0.0;
      double panel_l1 = 0.0;
      total += Integrator::integrate(integrand, a, b, 10, kQuadratureTolerance, &err, &panel_l1);
      total_error += err;
      l1 += panel_l1;
    }
    if (total_error > kQuadratureAcceptance * std::max(std::abs(total), 1e-300) &&
        total_error > kQuadratureTolerance * l1) {
      throw NumericalError("Hankel quadrature did not converge at s = " + std::to_string(s));
    }
    const double numeric = model.amplitude() * kTwoPi * total;
    const double closed = power_spectrum(model, {s, 0.0});
    out.quadrature.push_back(numeric);
    out.closed_form.push_back(closed);
    out.max_relative_error = std::max(out.max_relative_error, std::abs(numeric - closed) / closed);
  }
  return out;
}

GaussianDensity marginal_at_basis(const ExponentialCovModel& model, const BasisSet& basis) {
  if (basis.empty()) throw std::invalid_argument("marginal_at_basis: empty basis");
  return GaussianDensity(Vector::Constant(basis.size(), model.mean_level()),
                         covariance_matrix(model, basis, basis));
}

ConditionalOperator conditional_operator(const ExponentialCovModel& model, const BasisSet& query,
                                         const BasisSet& given) {
  const Matrix k_gg = covariance_matrix(model, given, given);
  const Matrix k_gq = covariance_matrix(model, given, query);
  const Matrix k_qq = covariance_matrix(model, query, query);
  if (given.empty()) return {Matrix::Zero(query.size(), 0), k_qq};
  const SpdFactor f(k_gg);
  ConditionalOperator op;
  op.sensitivity = f.solve(k_gq).transpose();
  op.cov = symmetrize(k_qq - op.sensitivity * k_gq);
  return op;
}

GaussianDensity conditional_at(const ExponentialCovModel& model, const BasisSet& query,
                               const BasisSet& given, const Vector& heights) {
  if (heights.size() != given.size()) throw DimensionError("conditional_at: heights length != basis");
  const auto op = conditional_operator(model, query, given);
  const double m = model.mean_level();
  Vector mean = Vector::Constant(query.size(), m) +
                op.sensitivity * (heights - Vector::Constant(given.size(), m));
  return GaussianDensity(std::move(mean), op.cov);
}

Matrix spectral_variances(const ExponentialCovModel& model, Index side_n, double extent) {
  if (side_n < 8 || side_n % 2 != 0) throw std::invalid_argument("side_n must be even and >= 8");
  if (!(extent > 0.0)) throw std::invalid_argument("extent must be > 0");
  const double df = kTwoPi / extent;
  const double area = extent * extent;
  Matrix var(side_n, side_n);
  for (Index a = 0; a < side_n; ++a) {
    for (Index b = 0; b < side_n; ++b) {
      const Point2 u{df * static_cast<double>(signed_frequency(b, side_n)),
                     df * static_cast<double>(signed_frequency(a, side_n))};
      var(a, b) = power_spectrum(model, u) / area;
    }
  }
  return var;
}

SpectralGrid sample_spectral_coefficients(const ExponentialCovModel& model, Index side_n,
                                          double extent, std::uint64_t seed) {
  const Matrix var = spectral_variances(model, side_n, extent);
  SpectralGrid grid{side_n, extent, Eigen::MatrixXcd::Zero(side_n, side_n)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index a = 0; a < side_n; ++a) {
    for (Index b = 0; b < side_n; ++b) {
      const Index pa = (side_n - a) % side_n;
      const Index pb = (side_n - b) % side_n;
      if (pa == a && pb == b) {
        grid.coefficients(a, b) = {std::sqrt(var(a, b)) * normal(rng), 0.0};
      } else if (std::make_pair(a, b) < std::make_pair(pa, pb)) {
        const double sd = std::sqrt(0.5 * var(a, b));
        const double re = sd * normal(rng);
        const double im = sd * normal(rng);
        grid.coefficients(a, b) = {re, im};
        grid.coefficients(pa, pb) = {re, -im};
      }
    }
  }
  return grid;
}

HeightGrid synthesize(const SpectralGrid& spectrum, double mean_level) {
  const Index n = spectrum.side_n;
  Eigen::MatrixXcd w(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index a = 0; a < n; ++a) {
      const double phase = kTwoPi * static_cast<double>((r * a) % n) / static_cast<double>(n);
      w(r, a) = std::polar(1.0, phase);
    }
  }
  const Eigen::MatrixXcd field = w * spectrum.coefficients * w.transpose();
  HeightGrid out;
  out.side_n = n;
  out.extent = spectrum.extent;
  out.max_imaginary = field.imag().cwiseAbs().maxCoeff();
  out.heights = field.real().array() + mean_level;
  return out;
}

HeightGrid sample_field_spectral(const ExponentialCovModel& model, Index side_n, double extent,
                                 std::uint64_t seed) {
  return synthesize(sample_spectral_coefficients(model, side_n, extent, seed), model.mean_level());
}

}  // namespace gkf
