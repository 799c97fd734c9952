#include "pvcast/hybrid.hpp"

#include <cmath>

#include "pvcast/random.hpp"
#include "pvcast/synth.hpp"
#include "test_support.hpp"

using namespace pvcast;
using namespace pvcast::hybrid;

namespace {

std::vector<double> unit_scaled(const std::vector<double>& v) {
  const auto s = UnitScale::fit(v);
  std::vector<double> out;
  for (double x : v) out.push_back(s.apply(x));
  return out;
}

std::vector<double> ar_sin_unit(std::size_t n, std::uint64_t seed) { return unit_scaled(synth::ar_sin(n, seed).generation); }

HybridConfig small_config() {
  HybridConfig c;
  c.arima_order = {1, 0, 0, std::nullopt};
  for (auto* m : {&c.error_mlp, &c.assoc_mlp}) {
    m->activation = neuralnet::Activation::identity;
    m->solver = neuralnet::Solver::lbfgs;
    m->hidden_layers = {4, 4, 4};
    m->max_epochs = 200;
  }
  c.error_mlp.seed = 1;
  c.assoc_mlp.seed = 2;
  c.lags = {4, 2, 2, 2};
  return c;
}

// Association network whose output is its first input coordinate.
neuralnet::Mlp first_coordinate(std::size_t inputs) {
  neuralnet::MlpConfig cfg;
  cfg.activation = neuralnet::Activation::identity;
  cfg.hidden_layers = {1};
  auto mlp = neuralnet::init(cfg, inputs);
  mlp.layers[0].weights.setZero();
  mlp.layers[0].weights(0, 0) = 1.0;
  mlp.layers[0].bias.setZero();
  mlp.layers[1].weights.setOnes();
  mlp.layers[1].bias.setZero();
  return mlp;
}

}  // namespace

TEST_CASE("error series and supervised windows") {
  const std::vector<double> y{1.0, 2.0}, f{1.0, 1.0};
  CHECK(error_series(y, f) == std::vector<double>{0.0, 1.0});
  CHECK(error_series(y, y) == std::vector<double>{0.0, 0.0});
  const std::vector<double> one{1.0};
  CHECK_ERRC(error_series(y, one), Errc::LengthMismatch);

  Rng rng(2);
  std::vector<double> a(30), b(30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  const auto e = error_series(a, b);
  // exact up to the rounding of one subtraction and one addition
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(e[i] + b[i] - a[i]) <= 1e-15 * (std::abs(a[i]) + std::abs(b[i])));

  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  const auto sup = make_supervised(s, 2);
  CHECK(sup.x.rows() == 2);
  CHECK(sup.x(0, 0) == 1.0);
  CHECK(sup.x(0, 1) == 2.0);
  CHECK(sup.x(1, 0) == 2.0);
  CHECK(sup.x(1, 1) == 3.0);
  CHECK(sup.y(0) == 3.0);
  CHECK(sup.y(1) == 4.0);
  const std::vector<double> lag1{5.0, 6.0, 7.0};
  const auto l1 = make_supervised(lag1, 1);
  CHECK(l1.x.col(0)(0) == 5.0);
  CHECK(l1.x.col(0)(1) == 6.0);
  CHECK(l1.y(1) == 7.0);
  const std::vector<double> pair{1.0, 2.0};
  CHECK_ERRC(make_supervised(pair, 2), Errc::TooShort);
  for (std::size_t lag = 1; lag < a.size(); ++lag)
    CHECK(make_supervised(a, lag).x.rows() == static_cast<Eigen::Index>(a.size() - lag));
}

TEST_CASE("forecast metrics") {
  const std::vector<double> y{1.0, 2.0}, p{1.0, 3.0};
  const auto m = metrics(y, p);
  CHECK(m.mae == 0.5);
  CHECK(m.mse == 0.5);
  CHECK(m.mape == 0.25);
  const auto same = metrics(y, y);
  CHECK(same.mae == 0.0);
  CHECK(same.mse == 0.0);
  CHECK(same.mape == 0.0);
  const std::vector<double> zeros{0.0, 0.0};
  CHECK_ERRC(metrics(zeros, p), Errc::AllZeroTruth);
  const std::vector<double> one{1.0};
  CHECK_ERRC(metrics(one, p), Errc::LengthMismatch);
  const std::vector<double> with_zero{0.0, 2.0};
  const auto z = metrics(with_zero, p);
  CHECK(z.excluded_zeros == 1);
  CHECK(z.mape == 0.5);
}

TEST_CASE("unit scale") {
  const std::vector<double> v{2.0, 6.0, 4.0};
  const auto s = UnitScale::fit(v);
  CHECK(s.apply(4.0) == 0.5);
  CHECK(s.invert(0.5) == 4.0);
  const std::vector<double> flat{3.0, 3.0};
  CHECK(UnitScale::fit(flat).apply(3.0) == 0.0);
}

TEST_CASE("identity association reproduces the ARIMA forecasts") {
  const auto y = ar_sin_unit(120, 3);
  auto model = fit_hybrid(small_config(), y);
  CHECK(model.split == 96);
  model.assoc_mlp = first_coordinate(model.config.lags.association_inputs());

  const auto on_history = arima::assemble(model.history, model.arima.order, model.arima.coef, model.arima.has_intercept);
  const auto ar = arima::forecast(on_history, 10);
  const auto hy = predict_hybrid(model, 10);
  for (std::size_t h = 0; h < 10; ++h) CHECK(std::abs(hy[h] - std::clamp(ar[h], 0.0, 1.0)) < 1e-9);

  for (auto mode : {EvalMode::one_step, EvalMode::multi_step}) {
    const auto f = test_forecasts(model, mode);
    REQUIRE(f.truth.size() == 24);
    for (std::size_t i = 0; i < f.truth.size(); ++i) CHECK(std::abs(f.hybrid[i] - std::clamp(f.arima[i], 0.0, 1.0)) < 1e-9);
  }
}

TEST_CASE("predictions are deterministic and clipped") {
  const auto y = ar_sin_unit(120, 4);
  const auto model = fit_hybrid(small_config(), y);
  const auto a = predict_hybrid(model, 15);
  CHECK(a == predict_hybrid(model, 15));
  for (double v : a) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_ERRC(predict_hybrid(model, 0), Errc::InvalidArgument);

  const auto again = fit_hybrid(small_config(), y);
  CHECK(again.assoc_mlp.parameters() == model.assoc_mlp.parameters());

  const auto back = from_json(nlohmann::json::parse(to_json(model).dump()));
  CHECK(predict_hybrid(back, 15) == a);
}

TEST_CASE("hybrid contracts") {
  const auto y = ar_sin_unit(120, 5);
  auto cfg = small_config();
  cfg.lags = {30, 1, 1, 1};
  const std::vector<double> shorter(y.begin(), y.begin() + 40);
  CHECK_ERRC(fit_hybrid(cfg, shorter), Errc::InsufficientTraining);
  std::vector<double> raw = y;
  raw[3] = 1.5;
  CHECK_ERRC(fit_hybrid(small_config(), raw), Errc::InvalidArgument);

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(y.size()), 2);
  const auto with_exog = fit_hybrid(small_config(), y, &x);
  CHECK_ERRC(predict_hybrid(with_exog, 3), Errc::MissingExog);
  const Eigen::MatrixXd future = x.topRows(3);
  CHECK(predict_hybrid(with_exog, 3, &future).size() == 3);

  const std::vector<double> tiny(y.begin(), y.begin() + 40);
  CHECK_ERRC(search_hybrid(tiny, nullptr, small_config(), {}), Errc::TooShort);
}

TEST_CASE("near-exact ARIMA fit leaves the hybrid as good on the training span") {
  // (y - 0.5) follows an exact AR(2) recursion, so the ARIMA errors vanish
  std::vector<double> y;
  for (int t = 0; t < 120; ++t) y.push_back(0.5 + 0.4 * std::sin(0.5 * t));
  auto cfg = small_config();
  cfg.arima_order = {2, 0, 0, std::nullopt};
  cfg.lags = {2, 1, 1, 1};
  const auto model = fit_hybrid(cfg, y);
  // in-sample one-step forecasts over the training rows
  HybridModel train = model;
  train.history.resize(model.split);
  train.history_exog = model.history_exog.topRows(static_cast<Eigen::Index>(model.split));
  train.split = 10;
  const auto f = test_forecasts(train);
  const auto arima = metrics(f.truth, f.arima);
  const auto hybrid = metrics(f.truth, f.hybrid);
  CHECK(arima.mae < 1e-6);
  CHECK(hybrid.mae <= arima.mae + 1e-6);
}

TEST_CASE("search space and decoding") {
  const auto space = search_space();
  CHECK(space.genes.size() == 16);
  const auto g = evolution::random_genome(space, 5);
  const auto a = decode(space, g, small_config(), 1);
  const auto b = decode(space, g, small_config(), 1);
  CHECK(a.error_mlp.seed == b.error_mlp.seed);
  CHECK(a.error_mlp.seed != a.assoc_mlp.seed);
  CHECK(a.error_mlp.hidden_layers.size() == 3);
  for (auto h : a.assoc_mlp.hidden_layers) {
    CHECK(h >= 1);
    CHECK(h <= 128);
  }
  CHECK(a.lags.lag_error >= 1);
  CHECK(a.lags.lag_error <= 20);
  const auto back = config_from_json(config_to_json(a));
  CHECK(back.lags.forecast_association_error == a.lags.forecast_association_error);
  CHECK(back.assoc_mlp.hidden_layers == a.assoc_mlp.hidden_layers);
}

TEST_CASE("search is reproducible and monotone") {
  const auto y = ar_sin_unit(80, 6);
  evolution::GaConfig ga;
  ga.population_size = 4;
  ga.generations = 2;
  ga.seed = 9;
  SearchOptions opt;
  opt.hidden_max = 16;
  opt.max_epochs = 50;
  const auto a = search_hybrid(y, nullptr, small_config(), ga, opt);
  const auto b = search_hybrid(y, nullptr, small_config(), ga, opt);
  CHECK(a.ga.best.genome == b.ga.best.genome);
  for (std::size_t i = 1; i < a.ga.history.size(); ++i) CHECK(a.ga.history[i] <= a.ga.history[i - 1]);
  CHECK(a.comparison.hybrid.mae == a.ga.best.fitness);

  opt.fitness = FitnessMode::validation;
  const auto v = search_hybrid(y, nullptr, small_config(), ga, opt);
  CHECK(v.best.split == 64);
  CHECK(std::isfinite(v.comparison.hybrid.mae));
}

TEST_CASE("hybrid beats ARIMA on the sin-contaminated AR series") {
  const auto table = synth::ar_sin(200, 7);
  const auto y = unit_scaled(table.generation);
  evolution::GaConfig ga;
  ga.population_size = 10;
  ga.generations = 3;
  ga.seed = 42;
  const auto r = search_hybrid(y, nullptr, small_config(), ga);
  MESSAGE("arima " << r.comparison.arima.mae << " hybrid " << r.comparison.hybrid.mae);
  CHECK(r.comparison.hybrid.mae < r.comparison.arima.mae);
}
