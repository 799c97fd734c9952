#include "pvcast/hybrid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pvcast/error.hpp"
#include "pvcast/random.hpp"

namespace pvcast::hybrid {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One-step ARIMA values, their errors and the in-sample error-MLP values
// over a series, with the model coefficients frozen.
struct Trace {
  std::vector<double> f;
  std::vector<double> e;
  std::vector<double> ehat;
  std::size_t start = 0;
};

const MatrixXd* exog_ptr(const MatrixXd& m) { return m.cols() > 0 ? &m : nullptr; }

arima::ArimaModel reassemble(const arima::ArimaModel& fitted, std::span<const double> series, const MatrixXd& exog) {
  return arima::assemble(series, fitted.order, fitted.coef, fitted.has_intercept, exog_ptr(exog));
}

std::vector<double> error_path(const neuralnet::Mlp& mlp, std::vector<double> window, std::size_t steps) {
  std::vector<double> out;
  out.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const double v = mlp.forward(window);
    out.push_back(v);
    window.erase(window.begin());
    window.push_back(v);
  }
  return out;
}

Trace trace(const arima::ArimaModel& on_series, const neuralnet::Mlp* error_mlp, std::size_t lag_error) {
  const std::size_t n = on_series.series.size();
  Trace t;
  t.start = on_series.usable_start;
  t.f.assign(n, kNaN);
  t.e.assign(n, kNaN);
  t.ehat.assign(n, kNaN);
  for (std::size_t i = 0; i < on_series.fitted.size(); ++i) {
    t.f[t.start + i] = on_series.fitted[i];
    t.e[t.start + i] = on_series.residuals[i];
  }
  if (error_mlp != nullptr)
    for (std::size_t i = t.start + lag_error; i < n; ++i)
      t.ehat[i] = error_mlp->forward(std::span<const double>(t.e).subspan(i - lag_error, lag_error));
  return t;
}

std::size_t first_row(const Trace& t, const LagConfig& lags) {
  return t.start + std::max(lags.lag_association_arima - 1, lags.lag_error + lags.lag_association_error);
}

// Association inputs at time i with the true errors known up to i - 1.
std::vector<double> one_step_features(const Trace& t, const LagConfig& lags, const neuralnet::Mlp& error_mlp,
                                      std::size_t i) {
  std::vector<double> x;
  x.reserve(lags.association_inputs());
  for (std::size_t k = 0; k < lags.lag_association_arima; ++k) x.push_back(t.f[i - k]);
  for (std::size_t k = 1; k <= lags.lag_association_error; ++k) x.push_back(t.ehat[i - k]);
  const std::vector<double> window(t.e.begin() + static_cast<std::ptrdiff_t>(i - lags.lag_error),
                                   t.e.begin() + static_cast<std::ptrdiff_t>(i));
  for (double v : error_path(error_mlp, window, lags.forecast_association_error)) x.push_back(v);
  return x;
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_unit(std::span<const double> series) {
  for (std::size_t i = 0; i < series.size(); ++i)
    require(std::isfinite(series[i]) && series[i] >= 0.0 && series[i] <= 1.0, Errc::InvalidArgument,
            "series value " + std::to_string(i + 1) + " is outside [0, 1]");
}

std::uint64_t genome_hash(const evolution::Genome& g) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (double v : g.genes) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

const std::vector<std::string> kActivations{"identity", "logistic", "tanh", "relu"};
const std::vector<std::string> kSchedules{"constant", "invscaling", "adaptive"};
const std::vector<std::string> kSolvers{"adam", "lbfgs"};
const char* const kMlps[] = {"error_mlp", "assoc_mlp"};

}  // namespace

void LagConfig::validate() const {
  require(lag_error >= 1 && forecast_association_error >= 1 && lag_association_error >= 1 && lag_association_arima >= 1,
          Errc::InvalidConfig, "every lag must be at least 1");
}

UnitScale UnitScale::fit(std::span<const double> values) {
  require(!values.empty(), Errc::InvalidArgument, "cannot scale an empty column");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

double UnitScale::apply(double v) const { return max > min ? (v - min) / (max - min) : 0.0; }

double UnitScale::invert(double v) const { return min + v * (max - min); }

std::vector<double> error_series(std::span<const double> y, std::span<const double> fitted) {
  require(y.size() == fitted.size(), Errc::LengthMismatch,
          std::to_string(y.size()) + " values vs " + std::to_string(fitted.size()) + " fitted");
  std::vector<double> e(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) e[i] = y[i] - fitted[i];
  return e;
}

Supervised make_supervised(std::span<const double> series, std::size_t lag) {
  require(lag >= 1, Errc::InvalidArgument, "lag must be at least 1");
  require(series.size() > lag, Errc::TooShort,
          "series of length " + std::to_string(series.size()) + " is too short for lag " + std::to_string(lag));
  const auto rows = static_cast<Index>(series.size() - lag);
  Supervised s{MatrixXd(rows, static_cast<Index>(lag)), VectorXd(rows)};
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k < static_cast<Index>(lag); ++k) s.x(i, k) = series[static_cast<std::size_t>(i + k)];
    s.y(i) = series[static_cast<std::size_t>(i) + lag];
  }
  return s;
}

ForecastMetrics metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  require(y_true.size() == y_pred.size(), Errc::LengthMismatch,
          std::to_string(y_true.size()) + " truths vs " + std::to_string(y_pred.size()) + " predictions");
  require(!y_true.empty(), Errc::InvalidArgument, "metrics need at least one value");
  ForecastMetrics m;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_pred[i] - y_true[i];
    m.mae += std::abs(d);
    m.mse += d * d;
    if (y_true[i] == 0.0) {
      ++m.excluded_zeros;
    } else {
      m.mape += std::abs(d / y_true[i]);
      ++counted;
    }
  }
  require(counted > 0, Errc::AllZeroTruth, "MAPE is undefined when every true value is zero");
  const auto n = static_cast<double>(y_true.size());
  m.mae /= n;
  m.mse /= n;
  m.mape /= static_cast<double>(counted);
  return m;
}

HybridModel fit_hybrid(const HybridConfig& config, std::span<const double> series, const MatrixXd* exog) {
  check_unit(series);
  const std::size_t split = series.size() * 4 / 5;
  require(split >= 2, Errc::InsufficientTraining, "series is too short to split");
  if (exog != nullptr && exog->cols() > 0) {
    require(static_cast<std::size_t>(exog->rows()) == series.size(), Errc::LengthMismatch,
            "exogenous rows differ from the series length");
    const MatrixXd train_exog = exog->topRows(static_cast<Index>(split));
    return fit_hybrid(config, arima::fit(series.first(split), config.arima_order, &train_exog), series, exog);
  }
  return fit_hybrid(config, arima::fit(series.first(split), config.arima_order), series, nullptr);
}

HybridModel fit_hybrid(const HybridConfig& config, const arima::ArimaModel& fitted, std::span<const double> series,
                       const MatrixXd* exog) {
  config.lags.validate();
  check_unit(series);
  const std::size_t n = series.size(), split = n * 4 / 5;
  require(fitted.series.size() == split, Errc::InvalidArgument, "ARIMA model was not fitted on the training span");
  const Index k = fitted.exog.cols();
  require(k == 0 || (exog != nullptr && exog->cols() == k && static_cast<std::size_t>(exog->rows()) == n),
          Errc::LengthMismatch, "exogenous data does not match the ARIMA model");

  HybridModel m;
  m.config = config;
  m.arima = fitted;
  m.split = split;
  m.history.assign(series.begin(), series.end());
  m.history_exog = k > 0 ? *exog : MatrixXd(static_cast<Index>(n), 0);

  const auto& lags = config.lags;
  const Trace base = trace(fitted, nullptr, lags.lag_error);
  const std::size_t max_lag = std::max(lags.lag_association_arima, lags.lag_error + lags.lag_association_error);
  require(split >= base.start + lags.lag_error + 2 && split >= base.start + max_lag + 2, Errc::InsufficientTraining,
          "training span of " + std::to_string(split) + " points is too short for the lags");

  const auto errors = std::span<const double>(base.e).subspan(base.start, split - base.start);
  const auto sup = make_supervised(errors, lags.lag_error);
  m.error_mlp = neuralnet::train(neuralnet::init(config.error_mlp, lags.lag_error), sup.x, sup.y);

  const Trace t = trace(fitted, &m.error_mlp, lags.lag_error);
  const std::size_t first = first_row(t, lags);
  MatrixXd x(static_cast<Index>(split - first), static_cast<Index>(lags.association_inputs()));
  VectorXd y(x.rows());
  for (std::size_t i = first; i < split; ++i) {
    const auto row = one_step_features(t, lags, m.error_mlp, i);
    x.row(static_cast<Index>(i - first)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), x.cols());
    y(static_cast<Index>(i - first)) = series[i];
  }
  m.assoc_mlp = neuralnet::train(neuralnet::init(config.assoc_mlp, lags.association_inputs()), x, y);
  return m;
}

std::vector<double> predict_hybrid(const HybridModel& model, std::size_t horizon, const MatrixXd* exog_future) {
  require(horizon >= 1, Errc::InvalidArgument, "horizon must be at least 1");
  const auto on_history = reassemble(model.arima, model.history, model.history_exog);
  const auto fa = arima::forecast(on_history, horizon, exog_future);
  const auto& lags = model.config.lags;
  const Trace t = trace(on_history, &model.error_mlp, lags.lag_error);
  const std::size_t origin = model.history.size();
  const std::vector<double> window(t.e.end() - static_cast<std::ptrdiff_t>(lags.lag_error), t.e.end());
  const auto path = error_path(model.error_mlp, window, horizon + lags.forecast_association_error - 1);

  std::vector<double> out;
  std::vector<double> x(lags.association_inputs());
  for (std::size_t h = 0; h < horizon; ++h) {
    const std::size_t now = origin + h;
    std::size_t c = 0;
    for (std::size_t k = 0; k < lags.lag_association_arima; ++k) {
      const std::size_t at = now - k;
      x[c++] = at >= origin ? fa[at - origin] : t.f[at];
    }
    for (std::size_t k = 1; k <= lags.lag_association_error; ++k) {
      const std::size_t at = now - k;
      x[c++] = at >= origin ? path[at - origin] : t.ehat[at];
    }
    for (std::size_t k = 0; k < lags.forecast_association_error; ++k) x[c++] = path[h + k];
    out.push_back(clip01(model.assoc_mlp.forward(x)));
  }
  return out;
}

TestForecasts test_forecasts(const HybridModel& model, EvalMode mode) {
  const std::size_t n = model.history.size(), split = model.split;
  TestForecasts out;
  out.truth.assign(model.history.begin() + static_cast<std::ptrdiff_t>(split), model.history.end());
  if (split >= n) return out;
  if (mode == EvalMode::multi_step) {
    HybridModel head = model;
    head.history.resize(split);
    head.history_exog = model.history_exog.topRows(static_cast<Index>(split));
    const MatrixXd future = model.history_exog.bottomRows(static_cast<Index>(n - split));
    const MatrixXd* fx = exog_ptr(future);
    out.arima = arima::forecast(model.arima, n - split, fx);
    out.hybrid = predict_hybrid(head, n - split, fx);
    return out;
  }
  const auto on_history = reassemble(model.arima, model.history, model.history_exog);
  const Trace t = trace(on_history, &model.error_mlp, model.config.lags.lag_error);
  for (std::size_t i = split; i < n; ++i) {
    out.arima.push_back(t.f[i]);
    out.hybrid.push_back(clip01(model.assoc_mlp.forward(one_step_features(t, model.config.lags, model.error_mlp, i))));
  }
  return out;
}

Comparison compare(const TestForecasts& f) { return {metrics(f.truth, f.arima), metrics(f.truth, f.hybrid)}; }

evolution::SearchSpace search_space(const SearchOptions& options) {
  require(options.lag_max >= 1 && options.hidden_max >= 1, Errc::InvalidConfig, "search bounds must be at least 1");
  evolution::SearchSpace space;
  const auto hidden = static_cast<double>(options.hidden_max), lag = static_cast<double>(options.lag_max);
  for (const char* mlp : kMlps) {
    const std::string p = std::string(mlp) + ".";
    space.genes.push_back(evolution::GeneDomain::categorical(p + "activation", kActivations));
    space.genes.push_back(evolution::GeneDomain::categorical(p + "learning_rate", kSchedules));
    space.genes.push_back(evolution::GeneDomain::categorical(p + "solver", kSolvers));
    for (int l = 1; l <= 3; ++l) space.genes.push_back(evolution::GeneDomain::integer(p + "hidden_" + std::to_string(l), 1, hidden));
  }
  for (const char* name : {"lag_error", "forecast_association_error", "lag_association_error", "lag_association_arima"})
    space.genes.push_back(evolution::GeneDomain::integer(name, 1, lag));
  return space;
}

HybridConfig decode(const evolution::SearchSpace& space, const evolution::Genome& genome, const HybridConfig& base,
                    std::uint64_t seed) {
  require(genome.genes.size() == space.genes.size(), Errc::DimensionMismatch, "genome does not match the search space");
  auto gene = [&](const std::string& name) { return genome.genes[space.index(name)]; };
  auto count = [&](const std::string& name) { return static_cast<std::size_t>(std::llround(gene(name))); };
  HybridConfig c = base;
  const std::uint64_t h = genome_hash(genome);
  for (const char* mlp : kMlps) {
    const std::string p = std::string(mlp) + ".";
    auto& cfg = std::string(mlp) == "error_mlp" ? c.error_mlp : c.assoc_mlp;
    cfg.activation = *neuralnet::activation_from_string(kActivations[count(p + "activation")]);
    cfg.lr_schedule = *lr_schedule_from_string(kSchedules[count(p + "learning_rate")]);
    cfg.solver = *neuralnet::solver_from_string(kSolvers[count(p + "solver")]);
    cfg.hidden_layers = {count(p + "hidden_1"), count(p + "hidden_2"), count(p + "hidden_3")};
    cfg.seed = derive_seed(seed, {h, &cfg == &c.error_mlp ? 0xe77ULL : 0xa55ULL});
  }
  c.lags = {count("lag_error"), count("forecast_association_error"), count("lag_association_error"),
            count("lag_association_arima")};
  return c;
}

SearchResult search_hybrid(std::span<const double> series, const MatrixXd* exog, const HybridConfig& base,
                           const evolution::GaConfig& ga, const SearchOptions& options) {
  require(series.size() >= 50, Errc::TooShort, "the forecaster search needs at least 50 points");
  check_unit(series);
  const MatrixXd* ex = (exog != nullptr && exog->cols() > 0) ? exog : nullptr;
  if (ex != nullptr)
    require(static_cast<std::size_t>(ex->rows()) == series.size(), Errc::LengthMismatch,
            "exogenous rows differ from the series length");

  HybridConfig shaped = base;
  shaped.error_mlp.max_epochs = options.max_epochs;
  shaped.assoc_mlp.max_epochs = options.max_epochs;

  auto fit_arima = [&](std::size_t len) {
    const std::size_t split = len * 4 / 5;
    if (ex == nullptr) return arima::fit(series.first(split), base.arima_order);
    const MatrixXd train = ex->topRows(static_cast<Index>(split));
    return arima::fit(series.first(split), base.arima_order, &train);
  };
  const std::size_t n = series.size();
  const std::size_t search_len = options.fitness == FitnessMode::test ? n : n * 4 / 5;
  const auto search_arima = fit_arima(search_len);
  const auto final_arima = search_len == n ? search_arima : fit_arima(n);
  const MatrixXd search_exog = ex ? MatrixXd(ex->topRows(static_cast<Index>(search_len))) : MatrixXd();

  const auto space = search_space(options);
  const evolution::Fitness fitness = [&](const evolution::Genome& g, const evolution::EvalContext&) {
    const auto cfg = decode(space, g, shaped, ga.seed);
    const auto model = fit_hybrid(cfg, search_arima, series.first(search_len), ex ? &search_exog : nullptr);
    return compare(test_forecasts(model, options.eval)).hybrid.mae;
  };
  evolution::GaOptions ga_options;
  ga_options.threads = options.threads;
  ga_options.on_generation = options.on_generation;

  SearchResult r;
  r.ga = evolution::run_ga(space, fitness, ga, ga_options);
  require(std::isfinite(r.ga.best.fitness), Errc::FitnessFailure,
          "every candidate failed: " + (r.ga.failures.empty() ? std::string() : r.ga.failures.front()));
  r.best = fit_hybrid(decode(space, r.ga.best.genome, shaped, ga.seed), final_arima, series, ex);
  r.comparison = compare(test_forecasts(r.best, options.eval));
  return r;
}

json metrics_json(const ForecastMetrics& m) {
  return {{"mae", m.mae}, {"mse", m.mse}, {"mape", m.mape}, {"excluded_zeros", m.excluded_zeros}};
}

json comparison_json(const Comparison& c) {
  return {{"arima", metrics_json(c.arima)}, {"hybrid", metrics_json(c.hybrid)}};
}

std::string comparison_table(const Comparison& c) {
  char buf[256];
  std::string out = "metric        arima       hybrid\n";
  std::snprintf(buf, sizeof buf, "MAE    %12.6f %12.6f\n", c.arima.mae, c.hybrid.mae);
  out += buf;
  std::snprintf(buf, sizeof buf, "MSE    %12.6f %12.6f\n", c.arima.mse, c.hybrid.mse);
  out += buf;
  std::snprintf(buf, sizeof buf, "MAPE   %12.6f %12.6f\n", c.arima.mape, c.hybrid.mape);
  out += buf;
  return out;
}

json config_to_json(const HybridConfig& c) {
  return {{"arima_order", arima::order_to_json(c.arima_order)},
          {"error_mlp", neuralnet::config_to_json(c.error_mlp)},
          {"assoc_mlp", neuralnet::config_to_json(c.assoc_mlp)},
          {"lags",
           {{"lag_error", c.lags.lag_error},
            {"forecast_association_error", c.lags.forecast_association_error},
            {"lag_association_error", c.lags.lag_association_error},
            {"lag_association_arima", c.lags.lag_association_arima}}},
          {"association_input_order", {"arima", "past_modeled_error", "error_forecast"}},
          {"exog_columns", c.exog_columns}};
}

HybridConfig config_from_json(const json& j) {
  try {
    HybridConfig c;
    c.arima_order = arima::order_from_json(j.at("arima_order"));
    c.error_mlp = neuralnet::config_from_json(j.at("error_mlp"));
    c.assoc_mlp = neuralnet::config_from_json(j.at("assoc_mlp"));
    const auto& l = j.at("lags");
    c.lags = {l.at("lag_error").get<std::size_t>(), l.at("forecast_association_error").get<std::size_t>(),
              l.at("lag_association_error").get<std::size_t>(), l.at("lag_association_arima").get<std::size_t>()};
    c.lags.validate();
    c.exog_columns = j.at("exog_columns").get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("malformed hybrid config: ") + e.what());
  }
}

json to_json(const HybridModel& m) {
  json exog = json::array();
  for (Index i = 0; i < m.history_exog.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.history_exog.cols()));
    for (Index k = 0; k < m.history_exog.cols(); ++k) row[static_cast<std::size_t>(k)] = m.history_exog(i, k);
    exog.push_back(row);
  }
  json scales = json::array();
  for (const auto& s : m.exog_scale) scales.push_back({{"min", s.min}, {"max", s.max}});
  return {{"config", config_to_json(m.config)},
          {"arima", arima::to_json(m.arima)},
          {"error_mlp", neuralnet::to_json(m.error_mlp)},
          {"assoc_mlp", neuralnet::to_json(m.assoc_mlp)},
          {"split", m.split},
          {"history", m.history},
          {"history_exog", exog},
          {"scale", {{"min", m.scale.min}, {"max", m.scale.max}}},
          {"exog_scale", scales}};
}

HybridModel from_json(const json& j) {
  try {
    HybridModel m;
    m.config = config_from_json(j.at("config"));
    m.arima = arima::from_json(j.at("arima"));
    m.error_mlp = neuralnet::from_json(j.at("error_mlp"));
    m.assoc_mlp = neuralnet::from_json(j.at("assoc_mlp"));
    m.split = j.at("split").get<std::size_t>();
    m.history = j.at("history").get<std::vector<double>>();
    const auto rows = j.at("history_exog").get<std::vector<std::vector<double>>>();
    const Index k = m.arima.exog.cols();
    m.history_exog = MatrixXd(static_cast<Index>(m.history.size()), k);
    require(k == 0 || rows.size() == m.history.size(), Errc::LengthMismatch, "exogenous history length differs");
    for (std::size_t i = 0; k > 0 && i < rows.size(); ++i) {
      require(static_cast<Index>(rows[i].size()) == k, Errc::LengthMismatch, "ragged exogenous row");
      for (Index c = 0; c < k; ++c) m.history_exog(static_cast<Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    }
    m.scale = {j.at("scale").at("min").get<double>(), j.at("scale").at("max").get<double>()};
    for (const auto& s : j.at("exog_scale")) m.exog_scale.push_back({s.at("min").get<double>(), s.at("max").get<double>()});
    require(m.split == m.history.size() * 4 / 5 && m.arima.series.size() == m.split, Errc::InvalidConfig,
            "split does not match the history");
    require(m.error_mlp.input_dim == m.config.lags.lag_error &&
                m.assoc_mlp.input_dim == m.config.lags.association_inputs(),
            Errc::InvalidConfig, "network input sizes do not match the lags");
    return m;
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("malformed hybrid model: ") + e.what());
  }
}

}  // namespace pvcast::hybrid
