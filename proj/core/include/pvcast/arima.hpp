#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pvcast::arima {

struct SeasonalOrder {
  std::size_t p = 0;  // P
  std::size_t d = 0;  // D
  std::size_t q = 0;  // Q
  std::size_t s = 30; // period; daily data with a "monthly" season uses 30
};

struct ArimaOrder {
  std::size_t p = 0;
  std::size_t d = 0;
  std::size_t q = 0;
  std::optional<SeasonalOrder> seasonal;

  /// Throws InvalidConfig. An order without ARMA terms or differencing is
  /// only valid as an intercept-only model.
  void validate(bool has_intercept) const;
  std::size_t seasonal_p() const { return seasonal ? seasonal->p : 0; }
  std::size_t seasonal_d() const { return seasonal ? seasonal->d : 0; }
  std::size_t seasonal_q() const { return seasonal ? seasonal->q : 0; }
  std::size_t period() const { return seasonal ? seasonal->s : 0; }
  /// Observations consumed by differencing: d + D * s.
  std::size_t lost() const { return d + seasonal_d() * period(); }
};

/// d-fold first differences, then D-fold lag-s differences. Throws TooShort
/// unless the series is longer than d + D * s.
std::vector<double> difference(std::span<const double> series, std::size_t d, std::size_t seasonal_d = 0,
                               std::size_t s = 0);

struct Coefficients {
  std::vector<double> ar;           // phi_1 .. phi_p
  std::vector<double> ma;           // theta_1 .. theta_q
  std::vector<double> seasonal_ar;  // Phi_1 .. Phi_P
  std::vector<double> seasonal_ma;  // Theta_1 .. Theta_Q
  std::vector<double> exog;         // one per exogenous column
  double intercept = 0.0;           // mean of the differenced series net of exog
};

/// Regression with (seasonal) ARMA errors on the differenced series:
///   phi(B) Phi(B^s) (w_t - c - x_t' beta) = theta(B) Theta(B^s) e_t,
/// w = differenced series, x = identically differenced exogenous columns.
struct ArimaModel {
  ArimaOrder order;
  bool has_intercept = false;
  Coefficients coef;
  std::vector<double> series;          // training series
  Eigen::MatrixXd exog;                // training exogenous rows (0 columns when unused)
  std::size_t usable_start = 0;        // first series index with a residual
  std::vector<double> fitted;          // one-step-ahead fits from usable_start on
  std::vector<double> residuals;       // series - fitted from usable_start on
  double css = 0.0;                    // sum of squared residuals
  std::vector<std::string> warnings;   // e.g. non-stationary AR part
};

struct FitOptions {
  /// Default: an intercept only when d + D == 0.
  std::optional<bool> intercept;
  std::size_t max_evaluations = 20000;
};

/// Conditional sum of squares: Nelder-Mead over the ARMA coefficients
/// from zeros, restarted from Yule-Walker AR estimates and from the best
/// point; intercept and exogenous coefficients are concentrated out by
/// least squares. Throws TooShort, InvalidConfig, LengthMismatch.
ArimaModel fit(std::span<const double> series, const ArimaOrder& order, const Eigen::MatrixXd* exog = nullptr,
               const FitOptions& options = {});

/// Evaluates fixed coefficients on a series (fitted values, residuals, CSS).
ArimaModel assemble(std::span<const double> series, const ArimaOrder& order, const Coefficients& coef,
                    bool has_intercept, const Eigen::MatrixXd* exog = nullptr);

/// CSS objective of the model's coefficients on its own series.
double css(const ArimaModel& model);

/// Recursive forecast with future shocks set to zero, differencing
/// inverted. Throws MissingExog when the model uses exogenous columns and
/// exog_future is absent or has fewer than `horizon` rows.
std::vector<double> forecast(const ArimaModel& model, std::size_t horizon,
                             const Eigen::MatrixXd* exog_future = nullptr);

/// Smallest CSS-based AIC over p, q in {0, 1, 2} for the given d and
/// seasonal part.
ArimaOrder select_order(std::span<const double> series, std::size_t d, std::optional<SeasonalOrder> seasonal,
                        const Eigen::MatrixXd* exog = nullptr);

/// Moduli of the roots of the expanded AR polynomial, as companion
/// eigenvalues (values >= 1 mean non-stationary).
std::vector<double> ar_root_moduli(const ArimaModel& model);

nlohmann::json order_to_json(const ArimaOrder& order);
ArimaOrder order_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ArimaModel& model);
ArimaModel from_json(const nlohmann::json& j);

/// date (YYYY-MM-DD), generation, then exogenous columns.
struct SeriesTable {
  std::vector<std::string> dates;
  std::vector<double> generation;
  std::vector<std::string> exog_names;
  Eigen::MatrixXd exog;  // rows x exog_names.size()
};

/// Throws MissingColumn, NonNumericCell, InvalidArgument (bad date), EmptyTable.
SeriesTable load_series_csv(const std::filesystem::path& path);
std::string series_csv(const SeriesTable& table);

}  // namespace pvcast::arima
