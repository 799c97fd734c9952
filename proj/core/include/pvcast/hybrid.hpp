#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvcast/arima.hpp"
#include "pvcast/evolution.hpp"
#include "pvcast/neuralnet.hpp"

namespace pvcast::hybrid {

struct LagConfig {
  std::size_t lag_error = 1;                   // error MLP window
  std::size_t forecast_association_error = 1;  // future modeled errors fed to the association MLP
  std::size_t lag_association_error = 1;       // past modeled errors fed to the association MLP
  std::size_t lag_association_arima = 1;       // ARIMA values (current and past) fed to the association MLP

  /// Throws InvalidConfig when a lag is zero.
  void validate() const;
  std::size_t association_inputs() const {
    return lag_association_arima + lag_association_error + forecast_association_error;
  }
};

struct HybridConfig {
  arima::ArimaOrder arima_order{1, 0, 0, std::nullopt};
  neuralnet::MlpConfig error_mlp;
  neuralnet::MlpConfig assoc_mlp;
  LagConfig lags;
  std::vector<std::string> exog_columns;
};

/// Min-max map of raw values onto [0, 1]; a constant column maps to 0.
struct UnitScale {
  double min = 0.0;
  double max = 1.0;

  static UnitScale fit(std::span<const double> values);
  double apply(double v) const;
  double invert(double v) const;
};

/// Association MLP input order: ARIMA values at t, t-1, ..., then modeled
/// errors at t-1, t-2, ..., then error forecasts for t, t+1, ...
struct HybridModel {
  HybridConfig config;
  arima::ArimaModel arima;  // fitted on history[0, split)
  neuralnet::Mlp error_mlp;
  neuralnet::Mlp assoc_mlp;
  std::size_t split = 0;        // floor(0.8 n)
  std::vector<double> history;  // unit-scaled series the model was built on
  Eigen::MatrixXd history_exog;
  UnitScale scale;                     // generation, for reporting in original units
  std::vector<UnitScale> exog_scale;   // one per exogenous column
};

struct ForecastMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double mape = 0.0;                 // fraction, zeros of y_true excluded
  std::size_t excluded_zeros = 0;
};

/// y - fitted. Throws LengthMismatch.
std::vector<double> error_series(std::span<const double> y, std::span<const double> fitted);

struct Supervised {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

/// Row i = series[i .. i+lag), target series[i+lag]. Throws TooShort.
Supervised make_supervised(std::span<const double> series, std::size_t lag);

/// MAE, MSE and MAPE. Throws LengthMismatch, InvalidArgument (empty) or
/// AllZeroTruth when every y_true entry is zero.
ForecastMetrics metrics(std::span<const double> y_true, std::span<const double> y_pred);

/// Fits ARIMA(X) on the first floor(0.8 n) points, the error MLP on lagged
/// windows of its one-step errors and the association MLP on the training
/// span. Values must lie in [0, 1]. Throws InsufficientTraining,
/// InvalidArgument and whatever the components raise.
HybridModel fit_hybrid(const HybridConfig& config, std::span<const double> series,
                       const Eigen::MatrixXd* exog = nullptr);

/// Same, reusing an ARIMA model already fitted on the training span.
HybridModel fit_hybrid(const HybridConfig& config, const arima::ArimaModel& arima, std::span<const double> series,
                       const Eigen::MatrixXd* exog = nullptr);

/// Forecasts beyond the end of the history: ARIMA forecast, recursive
/// error forecast, association applied step by step, clipped to [0, 1].
/// Throws InvalidArgument for horizon 0, MissingExog.
std::vector<double> predict_hybrid(const HybridModel& model, std::size_t horizon,
                                   const Eigen::MatrixXd* exog_future = nullptr);

enum class EvalMode { one_step, multi_step };

struct TestForecasts {
  std::vector<double> truth;
  std::vector<double> arima;
  std::vector<double> hybrid;
};

/// Forecasts over the test span history[split, n). one_step feeds the true
/// past into both models with their coefficients frozen; multi_step
/// forecasts the whole span from the split.
TestForecasts test_forecasts(const HybridModel& model, EvalMode mode = EvalMode::one_step);

struct Comparison {
  ForecastMetrics arima;
  ForecastMetrics hybrid;
};

Comparison compare(const TestForecasts& f);

enum class FitnessMode { test, validation };

struct SearchOptions {
  std::size_t lag_max = 20;
  std::size_t hidden_max = 128;
  std::size_t max_epochs = 200;
  /// test: MAE on the last 20%; validation: MAE on the last 20% of the
  /// training span, so the test span is never seen during the search.
  FitnessMode fitness = FitnessMode::test;
  EvalMode eval = EvalMode::one_step;
  unsigned threads = 1;
  std::function<void(const evolution::GenerationRecord&)> on_generation;
};

struct SearchResult {
  HybridModel best;
  evolution::GaResult ga;
  Comparison comparison;  // on the test span
};

evolution::SearchSpace search_space(const SearchOptions& options = {});
/// Writes genes into `base` (MLP seeds derive from `seed` and the genome).
HybridConfig decode(const evolution::SearchSpace& space, const evolution::Genome& genome, const HybridConfig& base,
                    std::uint64_t seed);

/// GA over both MLP configurations and the four lags. The ARIMA part of
/// `base` is fitted once. Throws TooShort for fewer than 50 points.
SearchResult search_hybrid(std::span<const double> series, const Eigen::MatrixXd* exog, const HybridConfig& base,
                           const evolution::GaConfig& ga, const SearchOptions& options = {});

nlohmann::json metrics_json(const ForecastMetrics& m);
nlohmann::json comparison_json(const Comparison& c);
std::string comparison_table(const Comparison& c);

nlohmann::json config_to_json(const HybridConfig& c);
HybridConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HybridModel& m);
HybridModel from_json(const nlohmann::json& j);

}  // namespace pvcast::hybrid
