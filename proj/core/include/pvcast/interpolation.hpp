#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pvcast/datacube.hpp"

namespace pvcast::interpolation {

using datacube::Location;

struct Sample {
  Location location;
  double value = 0.0;
};

enum class DistanceMetric {
  haversine_km,
  /// Euclidean distance on (lat, lon) degrees; for small test regions.
  planar_degrees,
};

double distance(DistanceMetric metric, const Location& a, const Location& b);

/// Power-law semivariance gamma(h) = nugget + scale * h^exponent for h > 0,
/// gamma(0) = 0.
struct VariogramModel {
  double nugget = 0.0;
  double scale = 0.0;
  double exponent = 1.0;

  double operator()(double h) const;
  /// Throws InvalidParam unless nugget >= 0, scale >= 0, 0 < exponent < 2.
  void validate() const;
};

struct LagPoint {
  double lag = 0.0;
  double semivariance = 0.0;
  std::size_t pairs = 0;
};

/// Equal-width distance bins over (0, max pair distance]. Each bin reports
/// the mean pair distance and mean 0.5*(vi - vj)^2; empty bins are omitted.
/// Throws InsufficientData with fewer than two samples.
std::vector<LagPoint> empirical_semivariogram(std::span<const Sample> samples, std::size_t n_bins,
                                              DistanceMetric metric = DistanceMetric::haversine_km);

struct VariogramFit {
  VariogramModel model;
  double residual_ss = 0.0;
};

/// Least-squares fit of (nugget, scale, exponent). For a fixed exponent the
/// problem is a two-variable non-negative linear fit, solved exactly; the
/// exponent is then found by scan + golden-section search on (0, 2).
/// Throws InsufficientData with fewer than three points, FitDiverged on a
/// non-finite result.
VariogramFit fit_variogram(std::span<const LagPoint> empirical);

struct KrigingModel {
  std::vector<Sample> samples;
  VariogramModel variogram;
  DistanceMetric metric = DistanceMetric::haversine_km;
};

/// Validates the variogram, merges samples sharing a location into their
/// mean value and requires at least three distinct locations.
KrigingModel make_kriging_model(std::vector<Sample> samples, const VariogramModel& variogram,
                                DistanceMetric metric = DistanceMetric::haversine_km);

struct KrigingPoint {
  double prediction = 0.0;
  double variance = 0.0;
  Eigen::VectorXd weights;
  double lagrange = 0.0;
};

/// The (n+1)x(n+1) ordinary kriging system, factorized once and reused for
/// every target location. Immutable after construction.
class KrigingSystem {
 public:
  /// Throws SingularSystem when the system cannot be factorized.
  explicit KrigingSystem(KrigingModel model);

  KrigingPoint solve(const Location& target) const;
  const KrigingModel& model() const noexcept { return model_; }

 private:
  KrigingModel model_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd values_;
};

struct Raster {
  std::vector<Location> locations;
  std::vector<double> prediction;
  std::vector<double> variance;
  /// Grid shape when the locations form a row-major regular grid; 0 otherwise.
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
};

Raster krige_grid(const KrigingModel& model, std::span<const Location> grid, unsigned threads = 1);

/// lat,lon,prediction,variance
std::string raster_csv(const Raster& raster);
Raster parse_raster_csv(const std::filesystem::path& path);

}  // namespace pvcast::interpolation
