#include "pvcast/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "pvcast/error.hpp"
#include "pvcast/io.hpp"
#include "pvcast/parallel.hpp"

namespace pvcast::interpolation {

double distance(DistanceMetric metric, const Location& a, const Location& b) {
  if (metric == DistanceMetric::haversine_km) return datacube::haversine_km(a, b);
  return std::hypot(a.lat - b.lat, a.lon - b.lon);
}

double VariogramModel::operator()(double h) const {
  if (h <= 0.0) return 0.0;
  return nugget + scale * std::pow(h, exponent);
}

void VariogramModel::validate() const {
  if (!(nugget >= 0.0) || !std::isfinite(nugget)) fail(Errc::InvalidParam, "nugget");
  if (!(scale >= 0.0) || !std::isfinite(scale)) fail(Errc::InvalidParam, "scale");
  if (!(exponent > 0.0 && exponent < 2.0)) fail(Errc::InvalidParam, "exponent");
}

std::vector<LagPoint> empirical_semivariogram(std::span<const Sample> samples, std::size_t n_bins,
                                              DistanceMetric metric) {
  if (samples.size() < 2) fail(Errc::InsufficientData, "semivariogram needs at least 2 samples");
  if (n_bins == 0) fail(Errc::InvalidArgument, "n_bins must be positive");

  struct Pair {
    double dist;
    double half_sq;
  };
  std::vector<Pair> pairs;
  pairs.reserve(samples.size() * (samples.size() - 1) / 2);
  double max_dist = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = distance(metric, samples[i].location, samples[j].location);
      const double diff = samples[i].value - samples[j].value;
      pairs.push_back({d, 0.5 * diff * diff});
      max_dist = std::max(max_dist, d);
    }

  std::vector<double> dist_sum(n_bins, 0.0), gamma_sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  const double width = max_dist > 0.0 ? max_dist / static_cast<double>(n_bins) : 1.0;
  for (const auto& p : pairs) {
    auto bin = static_cast<std::size_t>(p.dist / width);
    bin = std::min(bin, n_bins - 1);
    dist_sum[bin] += p.dist;
    gamma_sum[bin] += p.half_sq;
    ++count[bin];
  }
  std::vector<LagPoint> out;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    const auto n = static_cast<double>(count[b]);
    out.push_back({dist_sum[b] / n, gamma_sum[b] / n, count[b]});
  }
  return out;
}

namespace {

struct LinearPart {
  double nugget = 0.0;
  double scale = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// min ||y - nugget - scale * h^e||^2 subject to nugget, scale >= 0.
LinearPart fit_linear_part(std::span<const LagPoint> pts, double exponent) {
  const auto n = static_cast<double>(pts.size());
  double sx = 0, sxx = 0, sy = 0, sxy = 0;
  std::vector<double> x(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    x[i] = std::pow(pts[i].lag, exponent);
    sx += x[i];
    sxx += x[i] * x[i];
    sy += pts[i].semivariance;
    sxy += x[i] * pts[i].semivariance;
  }
  auto sse = [&](double c0, double c1) {
    double s = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double r = pts[i].semivariance - c0 - c1 * x[i];
      s += r * r;
    }
    return s;
  };
  LinearPart best;
  auto consider = [&](double c0, double c1) {
    if (c0 < 0.0 || c1 < 0.0 || !std::isfinite(c0) || !std::isfinite(c1)) return;
    const double s = sse(c0, c1);
    if (s < best.sse) best = {c0, c1, s};
  };
  const double det = n * sxx - sx * sx;
  if (std::abs(det) > 1e-14 * std::max(1.0, n * sxx)) consider((sxx * sy - sx * sxy) / det, (n * sxy - sx * sy) / det);
  if (sxx > 0.0) consider(0.0, std::max(0.0, sxy / sxx));
  consider(std::max(0.0, sy / n), 0.0);
  consider(0.0, 0.0);
  return best;
}

}  // namespace

VariogramFit fit_variogram(std::span<const LagPoint> empirical) {
  if (empirical.size() < 3) fail(Errc::InsufficientData, "variogram fit needs at least 3 points");
  for (const auto& p : empirical)
    if (!std::isfinite(p.lag) || !std::isfinite(p.semivariance) || p.lag < 0.0)
      fail(Errc::InvalidArgument, "empirical points must be finite with lag >= 0");

  if (std::all_of(empirical.begin(), empirical.end(), [](const LagPoint& p) { return p.semivariance == 0.0; }))
    return {{0.0, 0.0, 1.0}, 0.0};

  constexpr double lo = 1e-6;
  constexpr double hi = 2.0 - 1e-6;
  constexpr int scan = 200;
  auto objective = [&](double e) { return fit_linear_part(empirical, e).sse; };

  int best_i = 0;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan; ++i) {
    const double f = objective(lo + (hi - lo) * i / scan);
    if (f < best_f) {
      best_f = f;
      best_i = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best_i - 1) / scan;
  double b = lo + (hi - lo) * std::min(scan, best_i + 1) / scan;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int iter = 0; iter < 200 && (b - a) > 1e-14; ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double exponent = 0.5 * (a + b);
  LinearPart lin = fit_linear_part(empirical, exponent);
  const double scan_exponent = lo + (hi - lo) * best_i / scan;
  if (const auto at_scan = fit_linear_part(empirical, scan_exponent); at_scan.sse < lin.sse) {
    lin = at_scan;
    exponent = scan_exponent;
  }
  if (!std::isfinite(lin.sse) || !std::isfinite(exponent))
    fail(Errc::FitDiverged, "variogram least squares did not converge");
  return {{lin.nugget, lin.scale, exponent}, lin.sse};
}

KrigingModel make_kriging_model(std::vector<Sample> samples, const VariogramModel& variogram, DistanceMetric metric) {
  variogram.validate();
  std::map<std::pair<double, double>, std::pair<double, std::size_t>> merged;
  std::vector<std::pair<double, double>> order;
  for (const auto& s : samples) {
    datacube::validate(s.location);
    if (!std::isfinite(s.value)) fail(Errc::InvalidArgument, "non-finite sample value");
    const auto key = std::make_pair(s.location.lat, s.location.lon);
    auto [it, inserted] = merged.try_emplace(key, 0.0, 0);
    if (inserted) order.push_back(key);
    it->second.first += s.value;
    ++it->second.second;
  }
  if (order.size() < 3)
    fail(Errc::InsufficientData, "kriging needs at least 3 distinct sample locations, got " +
                                     std::to_string(order.size()));
  KrigingModel model;
  model.variogram = variogram;
  model.metric = metric;
  for (const auto& key : order) {
    const auto& [sum, n] = merged.at(key);
    model.samples.push_back({{key.first, key.second, std::nullopt}, sum / static_cast<double>(n)});
  }
  return model;
}

KrigingSystem::KrigingSystem(KrigingModel model) : model_(std::move(model)) {
  const auto n = model_.samples.size();
  if (n < 3) fail(Errc::InsufficientData, "kriging needs at least 3 samples");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
  values_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    values_(ii) = model_.samples[i].value;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double d = distance(model_.metric, model_.samples[i].location, model_.samples[j].location);
      if (d == 0.0) fail(Errc::SingularSystem, "duplicate sample location");
      a(ii, jj) = a(jj, ii) = model_.variogram(d);
    }
    a(ii, static_cast<Eigen::Index>(n)) = 1.0;
    a(static_cast<Eigen::Index>(n), ii) = 1.0;
  }
  lu_.compute(a);
  const double rcond = lu_.rcond();
  if (!(rcond > 1e-13)) fail(Errc::SingularSystem, "kriging matrix is singular (rcond " + io::format_number(rcond) + ")");
}

KrigingPoint KrigingSystem::solve(const Location& target) const {
  const auto n = model_.samples.size();
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i < n; ++i)
    rhs(static_cast<Eigen::Index>(i)) = model_.variogram(distance(model_.metric, model_.samples[i].location, target));
  rhs(static_cast<Eigen::Index>(n)) = 1.0;
  const Eigen::VectorXd sol = lu_.solve(rhs);

  KrigingPoint out;
  out.weights = sol.head(static_cast<Eigen::Index>(n));
  out.lagrange = sol(static_cast<Eigen::Index>(n));
  out.prediction = out.weights.dot(values_);
  out.variance = out.weights.dot(rhs.head(static_cast<Eigen::Index>(n))) + out.lagrange;
  return out;
}

Raster krige_grid(const KrigingModel& model, std::span<const Location> grid, unsigned threads) {
  if (grid.empty()) fail(Errc::InvalidArgument, "kriging grid is empty");
  const KrigingSystem system(model);
  Raster raster;
  raster.locations.assign(grid.begin(), grid.end());
  raster.prediction.resize(grid.size());
  raster.variance.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const auto p = system.solve(grid[i]);
    raster.prediction[i] = p.prediction;
    raster.variance[i] = p.variance;
  });
  if (const auto shape = datacube::grid_shape(grid)) {
    raster.n_rows = shape->first;
    raster.n_cols = shape->second;
  }
  return raster;
}

std::string raster_csv(const Raster& raster) {
  std::ostringstream out;
  out << "lat,lon,prediction,variance\n";
  for (std::size_t i = 0; i < raster.locations.size(); ++i)
    out << io::format_number(raster.locations[i].lat) << ',' << io::format_number(raster.locations[i].lon) << ','
        << io::format_number(raster.prediction[i]) << ',' << io::format_number(raster.variance[i]) << '\n';
  return out.str();
}

Raster parse_raster_csv(const std::filesystem::path& path) {
  const auto table = datacube::load_table(path, datacube::SourceTag::other);
  Raster raster;
  raster.locations = table.locations;
  raster.prediction = table.column("prediction");
  raster.variance = table.column("variance");
  return raster;
}

}  // namespace pvcast::interpolation
