#include "pvcast/arima.hpp"

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "pvcast/io.hpp"
#include "pvcast/random.hpp"
#include "test_support.hpp"

using namespace pvcast;
using namespace pvcast::arima;

namespace {

std::vector<double> simulate_ar1(double phi, std::size_t n, std::uint64_t seed, double mean = 0.0) {
  Rng rng(seed);
  std::vector<double> y;
  double u = 0.0;
  for (std::size_t i = 0; i < 100 + n; ++i) {
    u = phi * u + rng.normal();
    if (i >= 100) y.push_back(mean + u);
  }
  return y;
}

ArimaOrder order(std::size_t p, std::size_t d, std::size_t q) { return ArimaOrder{p, d, q, std::nullopt}; }

}  // namespace

TEST_CASE("differencing") {
  const std::vector<double> y{1.0, 2.0, 4.0};
  CHECK(difference(y, 1) == std::vector<double>{1.0, 2.0});
  CHECK(difference(y, 0) == y);
  CHECK(difference(y, 2) == std::vector<double>{1.0});
  const std::vector<double> two{1.0, 2.0};
  CHECK_ERRC(difference(two, 2), Errc::TooShort);
  const std::vector<double> seasonal{1.0, 5.0, 2.0, 7.0, 3.0};
  CHECK(difference(seasonal, 0, 1, 2) == std::vector<double>{1.0, 2.0, 1.0});
}

TEST_CASE("AR(1) coefficient is recovered") {
  const auto y = simulate_ar1(0.7, 2000, 11);
  const auto m = fit(y, order(1, 0, 0));
  REQUIRE(m.coef.ar.size() == 1);
  CHECK(m.coef.ar[0] >= 0.65);
  CHECK(m.coef.ar[0] <= 0.75);
  CHECK(m.has_intercept);
  CHECK(m.warnings.empty());

  // conditional least squares for AR(1) with a constant is ordinary least
  // squares of y_t on (y_{t-1}, 1)
  Eigen::MatrixXd x(static_cast<Eigen::Index>(y.size() - 1), 2);
  Eigen::VectorXd target(x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    x(t, 0) = y[static_cast<std::size_t>(t)];
    x(t, 1) = 1.0;
    target(t) = y[static_cast<std::size_t>(t) + 1];
  }
  const auto beta = oracles::normal_equations(x, target);
  CHECK(m.coef.ar[0] == doctest::Approx(beta(0)).epsilon(1e-6));
  CHECK(m.coef.intercept * (1.0 - m.coef.ar[0]) == doctest::Approx(beta(1)).epsilon(1e-4));
}

TEST_CASE("white noise intercept is the sample mean") {
  Rng rng(4);
  std::vector<double> y;
  for (int i = 0; i < 300; ++i) y.push_back(2.0 + rng.normal());
  const auto m = fit(y, order(0, 0, 0));
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  CHECK(std::abs(m.coef.intercept - mean) < 1e-6);
  for (double f : forecast(m, 5)) CHECK(f == doctest::Approx(m.coef.intercept).epsilon(1e-14));
  CHECK_ERRC(fit(y, order(0, 0, 0), nullptr, {.intercept = false}), Errc::InvalidConfig);
}

TEST_CASE("short series are rejected") {
  const std::vector<double> y{0.1, 0.2, 0.3};
  CHECK_ERRC(fit(y, order(5, 0, 0)), Errc::TooShort);
  CHECK_ERRC(fit(y, order(0, 3, 0)), Errc::TooShort);
  const std::vector<double> bad{0.1, std::nan(""), 0.3, 0.4};
  CHECK_ERRC(fit(bad, order(0, 1, 0)), Errc::InvalidArgument);
}

TEST_CASE("forecast examples") {
  const std::vector<double> walk{0.1, 0.5, 0.3, 0.8};
  const auto rw = fit(walk, order(0, 1, 0));
  for (double f : forecast(rw, 6)) CHECK(f == 0.8);

  Coefficients c;
  c.ar = {0.5};
  const std::vector<double> y{0.2, -0.4, 1.0};
  const auto ar = assemble(y, order(1, 0, 0), c, false);
  CHECK(forecast(ar, 3) == std::vector<double>{0.5, 0.25, 0.125});
  CHECK(forecast(ar, 0).empty());

  const std::vector<double> flat(40, 0.6);
  for (const auto& o : {order(1, 0, 0), order(1, 1, 1), order(0, 1, 1)}) {
    const auto m = fit(flat, o);
    for (double f : forecast(m, 4)) CHECK(f == doctest::Approx(0.6).epsilon(1e-12));
  }
}

TEST_CASE("fitted values and residuals reconstruct the series") {
  const auto y = simulate_ar1(0.4, 300, 21, 1.0);
  for (const auto& o : {order(1, 0, 1), order(2, 1, 1), ArimaOrder{1, 0, 0, SeasonalOrder{1, 0, 0, 7}}}) {
    const auto m = fit(y, o);
    REQUIRE(m.fitted.size() == m.residuals.size());
    REQUIRE(m.usable_start + m.fitted.size() == y.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < m.fitted.size(); ++i) {
      CHECK(std::abs(m.fitted[i] + m.residuals[i] - y[m.usable_start + i]) < 1e-10);
      sum += m.residuals[i] * m.residuals[i];
    }
    CHECK(m.css == doctest::Approx(sum).epsilon(1e-12));

    // never worse than the all-zero starting coefficients
    Coefficients zero;
    zero.ar.assign(o.p, 0.0);
    zero.ma.assign(o.q, 0.0);
    zero.seasonal_ar.assign(o.seasonal_p(), 0.0);
    zero.seasonal_ma.assign(o.seasonal_q(), 0.0);
    zero.intercept = m.coef.intercept;
    CHECK(m.css <= css(assemble(y, o, zero, m.has_intercept)) + 1e-12);
  }
}

TEST_CASE("seasonal structure is picked up") {
  Rng rng(9);
  std::vector<double> y;
  for (int t = 0; t < 400; ++t) y.push_back(std::sin(2.0 * M_PI * t / 7.0) + 0.1 * rng.normal());
  const auto m = fit(y, ArimaOrder{0, 0, 0, SeasonalOrder{1, 0, 0, 7}});
  REQUIRE(m.coef.seasonal_ar.size() == 1);
  CHECK(m.coef.seasonal_ar[0] > 0.8);
  const auto f = forecast(m, 7);
  for (std::size_t h = 0; h < 7; ++h)
    CHECK(std::abs(f[h] - std::sin(2.0 * M_PI * static_cast<double>(400 + h) / 7.0)) < 0.3);
}

TEST_CASE("exogenous regressors") {
  Rng rng(13);
  const std::size_t n = 250;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
  std::vector<double> y;
  double u = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    x(static_cast<Eigen::Index>(t), 0) = rng.uniform();
    x(static_cast<Eigen::Index>(t), 1) = rng.uniform();
    u = 0.5 * u + 0.05 * rng.normal();
    y.push_back(0.3 + 2.0 * x(static_cast<Eigen::Index>(t), 0) - 1.0 * x(static_cast<Eigen::Index>(t), 1) + u);
  }
  const auto m = fit(y, order(1, 0, 0), &x);
  REQUIRE(m.coef.exog.size() == 2);
  CHECK(m.coef.exog[0] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(m.coef.exog[1] == doctest::Approx(-1.0).epsilon(0.05));
  CHECK_ERRC(forecast(m, 3), Errc::MissingExog);
  const Eigen::MatrixXd few = x.topRows(2);
  CHECK_ERRC(forecast(m, 3, &few), Errc::MissingExog);
  const Eigen::MatrixXd future = x.topRows(3);
  CHECK(forecast(m, 3, &future).size() == 3);
  const Eigen::MatrixXd shorter = x.topRows(10);
  CHECK_ERRC(fit(y, order(1, 0, 0), &shorter), Errc::LengthMismatch);
}

TEST_CASE("non-stationary coefficients are flagged") {
  Coefficients c;
  c.ar = {1.2};
  const std::vector<double> y{0.1, 0.3, 0.2, 0.5};
  const auto m = assemble(y, order(1, 0, 0), c, false);
  CHECK(ar_root_moduli(m).front() == doctest::Approx(1.2));
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].rfind("NonStationaryFit", 0) == 0);
}

TEST_CASE("models and orders round-trip through json") {
  const auto y = simulate_ar1(0.6, 120, 5, 0.5);
  const ArimaOrder o{1, 0, 1, SeasonalOrder{1, 0, 0, 12}};
  const auto m = fit(y, o);
  const auto back = from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.coef.ar == m.coef.ar);
  CHECK(back.coef.seasonal_ar == m.coef.seasonal_ar);
  CHECK(back.css == m.css);
  CHECK(forecast(back, 5) == forecast(m, 5));
  const auto oo = order_from_json(order_to_json(o));
  CHECK(oo.seasonal->s == 12);
  CHECK_ERRC(order_from_json(nlohmann::json{{"p", 1}}), Errc::InvalidConfig);
}

TEST_CASE("order selection prefers the generating order") {
  const auto y = simulate_ar1(0.8, 500, 2);
  const auto o = select_order(y, 0, std::nullopt);
  CHECK(o.p + o.q >= 1);
  const auto walk = simulate_ar1(1.0, 200, 3);
  CHECK(select_order(walk, 1, std::nullopt).d == 1);
}

TEST_CASE("series csv") {
  testing::TempDir dir("arima");
  SeriesTable t;
  t.dates = {"2020-01-01", "2020-01-02"};
  t.generation = {0.25, 0.5};
  t.exog_names = {"temp"};
  t.exog = Eigen::MatrixXd(2, 1);
  t.exog << 0.1, 0.2;
  io::write_text_file(dir.path() / "s.csv", series_csv(t));
  const auto back = load_series_csv(dir.path() / "s.csv");
  CHECK(back.dates == t.dates);
  CHECK(back.generation == t.generation);
  CHECK(back.exog_names == t.exog_names);
  CHECK(back.exog == t.exog);

  io::write_text_file(dir.path() / "bad.csv", "date,generation\n2020-02-30,0.1\n");
  CHECK_ERRC(load_series_csv(dir.path() / "bad.csv"), Errc::InvalidArgument);
  io::write_text_file(dir.path() / "nogen.csv", "date,temp\n2020-02-03,0.1\n");
  CHECK_ERRC(load_series_csv(dir.path() / "nogen.csv"), Errc::MissingColumn);
}
