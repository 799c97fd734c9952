#include "pvcast/interpolation.hpp"

#include <cmath>

#include "oracles.hpp"
#include "pvcast/heatmap.hpp"
#include "pvcast/random.hpp"
#include "test_support.hpp"

using namespace pvcast;
using namespace pvcast::interpolation;

namespace {

std::vector<Sample> random_field(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double lat = rng.uniform(-9.0, -7.0), lon = rng.uniform(-38.0, -35.0);
    out.push_back({{lat, lon}, 0.2 + 0.05 * std::sin(lat * 2.0) + 0.03 * std::cos(lon) + 0.01 * rng.normal()});
  }
  return out;
}

std::vector<LagPoint> exact_power_points(double nugget, double scale, double exponent, std::size_t n) {
  std::vector<LagPoint> pts;
  for (std::size_t i = 1; i <= n; ++i) {
    const double h = 0.25 * static_cast<double>(i);
    pts.push_back({h, nugget + scale * std::pow(h, exponent), 1});
  }
  return pts;
}

}  // namespace

TEST_CASE("empirical semivariogram examples") {
  const Sample two[] = {{{0, 0}, 1.0}, {{0, 2}, 3.0}};
  const auto pts = empirical_semivariogram(two, 4, DistanceMetric::planar_degrees);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].lag == doctest::Approx(2.0));
  CHECK(pts[0].semivariance == 2.0);

  auto field = random_field(15, 1);
  for (auto& s : field) s.value = 0.4;
  for (const auto& p : empirical_semivariogram(field, 6)) CHECK(p.semivariance == 0.0);

  CHECK_ERRC(empirical_semivariogram(std::span<const Sample>(two, 1), 4), Errc::InsufficientData);
}

TEST_CASE("empirical semivariogram bins all pairs") {
  const auto field = random_field(12, 4);
  const auto pts = empirical_semivariogram(field, 5);
  std::size_t pairs = 0;
  double prev = -1;
  for (const auto& p : pts) {
    pairs += p.pairs;
    CHECK(p.lag > prev);
    prev = p.lag;
  }
  CHECK(pairs == 12 * 11 / 2);
}

TEST_CASE("fit_variogram recovers an exact power law") {
  const auto pts = exact_power_points(0.0, 2.0, 1.5, 20);
  const auto fit = fit_variogram(pts);
  CHECK(fit.model.nugget == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(fit.model.nugget) < 1e-6);
  CHECK(std::abs(fit.model.scale - 2.0) < 1e-6);
  CHECK(std::abs(fit.model.exponent - 1.5) < 1e-6);
  CHECK(fit.residual_ss < 1e-12);

  // independent Levenberg-Marquardt route on all three parameters
  const auto oracle = oracles::levenberg_marquardt_power(pts, {0.1, 1.0, 1.0});
  CHECK(std::abs(fit.model.scale - oracle.scale) <= 1e-4 * oracle.scale);
  CHECK(std::abs(fit.model.exponent - oracle.exponent) <= 1e-4 * oracle.exponent);
}

TEST_CASE("fit_variogram agrees with the oracle on noisy nugget data") {
  Rng rng(17);
  auto pts = exact_power_points(0.3, 0.8, 0.7, 25);
  for (auto& p : pts) p.semivariance += 0.01 * rng.normal();
  const auto fit = fit_variogram(pts);
  const auto oracle = oracles::levenberg_marquardt_power(pts, {0.2, 1.0, 1.0});
  CHECK(fit.residual_ss <= oracle.sse * (1 + 1e-9) + 1e-15);
  CHECK(fit.model.exponent == doctest::Approx(oracle.exponent).epsilon(1e-4));
  CHECK(fit.model.scale == doctest::Approx(oracle.scale).epsilon(1e-4));
  CHECK(fit.model.nugget == doctest::Approx(oracle.nugget).epsilon(1e-4));
}

TEST_CASE("fit_variogram degenerate and contract cases") {
  std::vector<LagPoint> zeros{{1, 0, 1}, {2, 0, 1}, {3, 0, 1}};
  const auto fit = fit_variogram(zeros);
  CHECK(fit.model.scale == 0.0);
  CHECK(fit.model.nugget == 0.0);

  std::vector<LagPoint> two{{1, 1, 1}, {2, 2, 1}};
  CHECK_ERRC(fit_variogram(two), Errc::InsufficientData);
}

TEST_CASE("variogram model is non-decreasing") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    VariogramModel vg{rng.uniform(0, 1), rng.uniform(0, 5), rng.uniform(0.05, 1.95)};
    double prev = vg(0.0);
    for (double h = 0.0; h < 50.0; h += 0.37) {
      CHECK(vg(h) >= prev);
      prev = vg(h);
    }
  }
  CHECK_ERRC((VariogramModel{0, 1, 2.0}.validate()), Errc::InvalidParam);
  CHECK_ERRC((VariogramModel{-1, 1, 1.0}.validate()), Errc::InvalidParam);
}

TEST_CASE("kriging exactness and weight normalization") {
  const auto field = random_field(20, 9);
  const auto model = make_kriging_model(field, {0.0, 0.01, 1.5});
  const KrigingSystem system(model);
  for (const auto& s : field) {
    const auto p = system.solve(s.location);
    CHECK(std::abs(p.prediction - s.value) < 1e-8);
    CHECK(std::abs(p.weights.sum() - 1.0) < 1e-10);
    CHECK(p.variance >= -1e-10);
  }
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto p = system.solve({rng.uniform(-10, -6), rng.uniform(-39, -34)});
    CHECK(std::abs(p.weights.sum() - 1.0) < 1e-10);
    CHECK(p.variance >= -1e-10);
  }
}

TEST_CASE("kriging constant field and symmetric midpoint") {
  auto field = random_field(8, 3);
  for (auto& s : field) s.value = 0.37;
  const auto grid = datacube::regular_grid({-9.5, -6.5, -38.5, -34.5, 0.5});
  const auto raster = krige_grid(make_kriging_model(field, {0.0, 1.0, 1.0}), grid);
  for (double v : raster.prediction) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(raster.n_rows == 7);
  CHECK(raster.n_cols == 9);

  // samples mirrored across lon = 0, third sample on the axis carries the midpoint value
  const std::vector<Sample> sym{{{0, -1}, 1.0}, {{0, 1}, 3.0}, {{3, 0}, 2.0}};
  const auto model = make_kriging_model(sym, {0.0, 1.0, 1.2}, DistanceMetric::planar_degrees);
  const auto p = KrigingSystem(model).solve({0, 0});
  CHECK(p.prediction == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.weights(0) == doctest::Approx(p.weights(1)).epsilon(1e-12));
}

TEST_CASE("kriging is invariant to a longitude shift") {
  const auto field = random_field(12, 21);
  auto shifted = field;
  for (auto& s : shifted) s.location.lon += 2.5;
  const auto grid = datacube::regular_grid({-9.0, -7.0, -38.0, -35.0, 0.25});
  auto grid_shifted = grid;
  for (auto& g : grid_shifted) g.lon += 2.5;
  const VariogramModel vg{0.001, 0.002, 1.3};
  const auto a = krige_grid(make_kriging_model(field, vg), grid);
  const auto b = krige_grid(make_kriging_model(shifted, vg), grid_shifted);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(a.prediction[i] - b.prediction[i]) < 1e-9);
}

TEST_CASE("kriging contract errors") {
  const std::vector<Sample> two{{{0, 0}, 1.0}, {{0, 1}, 2.0}};
  CHECK_ERRC(make_kriging_model(two, {0, 1, 1}), Errc::InsufficientData);

  // duplicates merge to their mean
  std::vector<Sample> dup{{{0, 0}, 1.0}, {{0, 0}, 3.0}, {{0, 1}, 2.0}, {{1, 0}, 5.0}};
  const auto model = make_kriging_model(dup, {0, 1, 1});
  REQUIRE(model.samples.size() == 3);
  CHECK(model.samples[0].value == 2.0);

  // identically-zero variogram leaves the system singular
  CHECK_ERRC(KrigingSystem(make_kriging_model(random_field(5, 1), {0, 0, 1})), Errc::SingularSystem);
}

TEST_CASE("grid kriging is independent of thread count") {
  const auto field = random_field(20, 8);
  const auto model = make_kriging_model(field, {0.0, 0.01, 1.5});
  const auto grid = datacube::regular_grid({-9.0, -7.0, -38.0, -35.0, 0.1});
  const auto a = krige_grid(model, grid, 1);
  const auto b = krige_grid(model, grid, 4);
  CHECK(raster_csv(a) == raster_csv(b));
}

TEST_CASE("heatmap png has valid signature and size") {
  const std::vector<double> values{0, 1, 2, 3, 4, 5};
  const auto png = heatmap::encode_png(values, 2, 3, 2);
  REQUIRE(png.size() > 33);
  CHECK(png[1] == 'P');
  CHECK(png[12] == 'I');
  // width 6, height 4 in IHDR
  CHECK(png[19] == 6);
  CHECK(png[23] == 4);
  CHECK_ERRC(heatmap::encode_png(values, 4, 4), Errc::DimensionMismatch);
}
