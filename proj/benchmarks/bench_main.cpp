#include <benchmark/benchmark.h>

#include "pvcast/arima.hpp"
#include "pvcast/covcor.hpp"
#include "pvcast/datacube.hpp"
#include "pvcast/ensemble.hpp"
#include "pvcast/hybrid.hpp"
#include "pvcast/interpolation.hpp"
#include "pvcast/neuralnet.hpp"
#include "pvcast/random.hpp"
#include "pvcast/synth.hpp"

using namespace pvcast;

namespace {

const synth::LinearMap& fixture() {
  static const auto m = synth::linear_map(60, 42);
  return m;
}

void BM_BuildCube(benchmark::State& state) {
  const auto& m = fixture();
  const std::vector<datacube::Table> sources{m.atlas, m.stations};
  const auto grid = datacube::regular_grid(m.grid);
  for (auto _ : state) benchmark::DoNotOptimize(datacube::build_cube(sources, grid, {static_cast<std::size_t>(state.range(0))}));
}
BENCHMARK(BM_BuildCube)->Arg(1)->Arg(4);

void BM_KrigeGrid(benchmark::State& state) {
  const auto field = synth::variogram_field(static_cast<std::size_t>(state.range(0)), 1);
  const auto model = interpolation::make_kriging_model(field.samples, {0.0, 2.0, 1.5},
                                                       interpolation::DistanceMetric::planar_degrees);
  const auto grid = datacube::regular_grid(fixture().grid);
  for (auto _ : state) benchmark::DoNotOptimize(interpolation::krige_grid(model, grid));
}
BENCHMARK(BM_KrigeGrid)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FitVariogram(benchmark::State& state) {
  const auto field = synth::variogram_field(20, 1);
  for (auto _ : state) benchmark::DoNotOptimize(interpolation::fit_variogram(field.lags));
}
BENCHMARK(BM_FitVariogram);

void BM_MlpGradient(benchmark::State& state) {
  neuralnet::MlpConfig cfg;
  cfg.hidden_layers = {64, 64, 64};
  const auto mlp = neuralnet::init(cfg, 8);
  Rng rng(3);
  Eigen::MatrixXd x(256, 8);
  Eigen::VectorXd y(256);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(neuralnet::gradient(mlp, x, y));
}
BENCHMARK(BM_MlpGradient)->Unit(benchmark::kMicrosecond);

void BM_ArimaFit(benchmark::State& state) {
  const auto series = synth::ar_sin(static_cast<std::size_t>(state.range(0)), 7).generation;
  for (auto _ : state) benchmark::DoNotOptimize(arima::fit(series, {2, 0, 1, std::nullopt}));
}
BENCHMARK(BM_ArimaFit)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_CovcorEstimate(benchmark::State& state) {
  const auto& m = fixture();
  const std::vector<datacube::Table> sources{m.atlas, m.stations};
  const auto cube = datacube::build_cube(sources, datacube::regular_grid(m.grid), {});
  const auto w = covcor::build_weights(covcor::cov_corr(cube.table), "direct_normal", covcor::default_flip_set());
  for (auto _ : state) benchmark::DoNotOptimize(covcor::estimate(w, cube.table));
}
BENCHMARK(BM_CovcorEstimate);

void BM_CommitteeCrossValidation(benchmark::State& state) {
  const auto& m = fixture();
  const std::vector<datacube::Table> sources{m.atlas, m.stations, m.plants};
  const auto cube = datacube::build_cube(sources, m.plants.locations, {});
  const auto& t = cube.table;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols() - 1));
  Eigen::VectorXd y(static_cast<Eigen::Index>(t.rows()));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (t.names[j] == "capacity_factor") y(static_cast<Eigen::Index>(i)) = t.columns[j][i];
      else x(static_cast<Eigen::Index>(i), c++) = t.columns[j][i];
    }
  }
  const auto committee = ensemble::default_committee(regressors::all_kinds(), 42);
  for (auto _ : state) benchmark::DoNotOptimize(ensemble::cross_validate(committee, x, y, 5, 42));
}
BENCHMARK(BM_CommitteeCrossValidation)->Unit(benchmark::kMillisecond);

void BM_HybridFit(benchmark::State& state) {
  const auto raw = synth::ar_sin(200, 7).generation;
  const auto scale = hybrid::UnitScale::fit(raw);
  std::vector<double> y;
  for (double v : raw) y.push_back(scale.apply(v));
  hybrid::HybridConfig cfg;
  cfg.lags = {4, 2, 2, 2};
  cfg.error_mlp.hidden_layers = cfg.assoc_mlp.hidden_layers = {16, 16, 16};
  cfg.error_mlp.max_epochs = cfg.assoc_mlp.max_epochs = 100;
  for (auto _ : state) benchmark::DoNotOptimize(hybrid::fit_hybrid(cfg, y));
}
BENCHMARK(BM_HybridFit)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
