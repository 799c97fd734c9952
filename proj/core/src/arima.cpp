#include "pvcast/arima.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "nelder_mead.hpp"
#include "pvcast/error.hpp"
#include "pvcast/io.hpp"

namespace pvcast::arima {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

// (1 + sum c_k B^k) polynomials stored as [1, c_1, c_2, ...]
std::vector<double> multiply(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> lag_polynomial(const std::vector<double>& coef, std::size_t step, double sign) {
  std::vector<double> poly(coef.size() * step + 1, 0.0);
  poly[0] = 1.0;
  for (std::size_t i = 0; i < coef.size(); ++i) poly[(i + 1) * step] = sign * coef[i];
  return poly;
}

struct Expanded {
  std::vector<double> ar;  // u_t = sum ar[k-1] u_{t-k} + e_t + sum ma[k-1] e_{t-k}
  std::vector<double> ma;
};

Expanded expand(const ArimaOrder& order, const Coefficients& c) {
  const std::size_t s = std::max<std::size_t>(order.period(), 1);
  const auto ar_poly = multiply(lag_polynomial(c.ar, 1, -1.0), lag_polynomial(c.seasonal_ar, s, -1.0));
  const auto ma_poly = multiply(lag_polynomial(c.ma, 1, 1.0), lag_polynomial(c.seasonal_ma, s, 1.0));
  Expanded e;
  for (std::size_t k = 1; k < ar_poly.size(); ++k) e.ar.push_back(-ar_poly[k]);
  for (std::size_t k = 1; k < ma_poly.size(); ++k) e.ma.push_back(ma_poly[k]);
  return e;
}

std::size_t ar_span(const ArimaOrder& o) { return o.p + o.seasonal_p() * std::max<std::size_t>(o.period(), 1); }

// Conditional residuals: e_t = 0 for t < r, then the ARMA recursion.
VectorXd filter(const Expanded& ex, const VectorXd& u, std::size_t r) {
  const auto m = u.size();
  VectorXd e = VectorXd::Zero(m);
  for (Index t = static_cast<Index>(r); t < m; ++t) {
    double v = u(t);
    for (std::size_t k = 1; k <= ex.ar.size(); ++k)
      if (t >= static_cast<Index>(k)) v -= ex.ar[k - 1] * u(t - static_cast<Index>(k));
    for (std::size_t k = 1; k <= ex.ma.size(); ++k)
      if (t >= static_cast<Index>(k)) v -= ex.ma[k - 1] * e(t - static_cast<Index>(k));
    e(t) = v;
  }
  return e;
}

MatrixXd difference_columns(const MatrixXd& x, const ArimaOrder& o) {
  if (x.cols() == 0) return MatrixXd(static_cast<Index>(x.rows()) - static_cast<Index>(o.lost()), 0);
  MatrixXd out;
  for (Index j = 0; j < x.cols(); ++j) {
    const VectorXd col = x.col(j);
    const auto diff = difference({col.data(), static_cast<std::size_t>(col.size())}, o.d, o.seasonal_d(), o.period());
    if (j == 0) out.resize(static_cast<Index>(diff.size()), x.cols());
    out.col(j) = Eigen::Map<const VectorXd>(diff.data(), static_cast<Index>(diff.size()));
  }
  return out;
}

// Regressors of the differenced model: [1 if intercept, differenced exog].
MatrixXd design(const MatrixXd& exog_diff, bool intercept, Index rows) {
  MatrixXd z(rows, exog_diff.cols() + (intercept ? 1 : 0));
  if (intercept) z.col(0).setOnes();
  if (exog_diff.cols() > 0) z.rightCols(exog_diff.cols()) = exog_diff;
  return z;
}

std::size_t arma_count(const ArimaOrder& o) { return o.p + o.q + o.seasonal_p() + o.seasonal_q(); }

Coefficients unpack(const ArimaOrder& o, const VectorXd& x) {
  Coefficients c;
  Index i = 0;
  for (std::size_t k = 0; k < o.p; ++k) c.ar.push_back(x(i++));
  for (std::size_t k = 0; k < o.q; ++k) c.ma.push_back(x(i++));
  for (std::size_t k = 0; k < o.seasonal_p(); ++k) c.seasonal_ar.push_back(x(i++));
  for (std::size_t k = 0; k < o.seasonal_q(); ++k) c.seasonal_ma.push_back(x(i++));
  return c;
}

struct Concentrated {
  double css = 0.0;
  VectorXd gamma;
};

// CSS with the regression coefficients solved by least squares on the
// filtered data (the filter is linear in u).
Concentrated concentrated_css(const ArimaOrder& o, const Coefficients& c, const VectorXd& w, const MatrixXd& z) {
  const auto ex = expand(o, c);
  const std::size_t r = ar_span(o);
  const Index m = w.size(), rows = m - static_cast<Index>(r);
  Concentrated out;
  VectorXd fw = filter(ex, w, r);
  if (z.cols() > 0) {
    MatrixXd fz(m, z.cols());
    for (Index j = 0; j < z.cols(); ++j) fz.col(j) = filter(ex, z.col(j), r);
    out.gamma = fz.bottomRows(rows).colPivHouseholderQr().solve(fw.tail(rows));
    fw -= fz * out.gamma;
  }
  out.css = fw.tail(rows).squaredNorm();
  return out;
}

std::vector<double> autocorrelation(const VectorXd& w, std::size_t max_lag) {
  const double mean = w.mean();
  const VectorXd c = w.array() - mean;
  const double c0 = c.squaredNorm();
  std::vector<double> acf(max_lag + 1, 0.0);
  if (!(c0 > 0.0)) return acf;
  for (std::size_t k = 0; k <= max_lag && static_cast<Index>(k) < w.size(); ++k)
    acf[k] = c.head(w.size() - static_cast<Index>(k)).dot(c.tail(w.size() - static_cast<Index>(k))) / c0;
  return acf;
}

std::vector<double> yule_walker(const std::vector<double>& acf, std::size_t order, std::size_t step) {
  std::vector<double> phi(order, 0.0);
  if (order == 0 || order * step >= acf.size()) return phi;
  MatrixXd toeplitz(static_cast<Index>(order), static_cast<Index>(order));
  VectorXd rhs(static_cast<Index>(order));
  for (std::size_t i = 0; i < order; ++i) {
    rhs(static_cast<Index>(i)) = acf[(i + 1) * step];
    for (std::size_t j = 0; j < order; ++j)
      toeplitz(static_cast<Index>(i), static_cast<Index>(j)) = acf[(i > j ? i - j : j - i) * step];
  }
  const VectorXd sol = toeplitz.fullPivLu().solve(rhs);
  if (!sol.allFinite()) return phi;
  for (std::size_t i = 0; i < order; ++i) phi[i] = std::clamp(sol(static_cast<Index>(i)), -0.99, 0.99);
  return phi;
}

void check_inputs(std::span<const double> series, const ArimaOrder& order, const MatrixXd* exog, bool intercept) {
  order.validate(intercept);
  for (double v : series) require(std::isfinite(v), Errc::InvalidArgument, "series contains a non-finite value");
  if (exog != nullptr && exog->cols() > 0) {
    require(static_cast<std::size_t>(exog->rows()) == series.size(), Errc::LengthMismatch,
            "exogenous rows differ from the series length");
    require(exog->allFinite(), Errc::InvalidArgument, "exogenous data contains a non-finite value");
  }
  const std::size_t n = series.size();
  require(n > order.lost(), Errc::TooShort, "series of length " + std::to_string(n) + " is consumed by differencing");
  const std::size_t m = n - order.lost(), r = ar_span(order);
  const std::size_t params = arma_count(order) + (intercept ? 1 : 0) + (exog ? static_cast<std::size_t>(exog->cols()) : 0);
  require(m > r && m - r >= params + 1, Errc::TooShort,
          "series of length " + std::to_string(n) + " is too short for the order");
}

}  // namespace

void ArimaOrder::validate(bool has_intercept) const {
  if (seasonal) {
    require(seasonal->s >= 2, Errc::InvalidConfig, "seasonal period must be at least 2");
    require(seasonal->s > std::max<std::size_t>(1, seasonal->d), Errc::InvalidConfig, "seasonal period too small");
  }
  const bool has_terms = p + q + seasonal_p() + seasonal_q() >= 1 || d + seasonal_d() >= 1;
  require(has_terms || has_intercept, Errc::InvalidConfig, "order has no ARMA terms, differencing or intercept");
}

std::vector<double> difference(std::span<const double> series, std::size_t d, std::size_t seasonal_d, std::size_t s) {
  require(seasonal_d == 0 || s >= 1, Errc::InvalidConfig, "seasonal differencing needs a period");
  require(series.size() > d + seasonal_d * s, Errc::TooShort,
          "series of length " + std::to_string(series.size()) + " cannot be differenced");
  std::vector<double> out(series.begin(), series.end());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
    out.pop_back();
  }
  for (std::size_t k = 0; k < seasonal_d; ++k) {
    for (std::size_t i = 0; i + s < out.size(); ++i) out[i] = out[i + s] - out[i];
    out.resize(out.size() - s);
  }
  return out;
}

ArimaModel assemble(std::span<const double> series, const ArimaOrder& order, const Coefficients& coef,
                    bool has_intercept, const MatrixXd* exog) {
  order.validate(has_intercept);
  require(coef.ar.size() == order.p && coef.ma.size() == order.q && coef.seasonal_ar.size() == order.seasonal_p() &&
              coef.seasonal_ma.size() == order.seasonal_q(),
          Errc::InvalidConfig, "coefficient counts do not match the order");
  const Index k = exog ? exog->cols() : 0;
  require(coef.exog.size() == static_cast<std::size_t>(k), Errc::InvalidConfig, "exogenous coefficient count mismatch");
  if (k > 0)
    require(static_cast<std::size_t>(exog->rows()) == series.size(), Errc::LengthMismatch,
            "exogenous rows differ from the series length");
  require(series.size() > order.lost(), Errc::TooShort, "series is consumed by differencing");

  ArimaModel m;
  m.order = order;
  m.has_intercept = has_intercept;
  m.coef = coef;
  if (!has_intercept) m.coef.intercept = 0.0;
  m.series.assign(series.begin(), series.end());
  m.exog = k > 0 ? *exog : MatrixXd(static_cast<Index>(series.size()), 0);

  const auto wv = difference(series, order.d, order.seasonal_d(), order.period());
  const VectorXd w = Eigen::Map<const VectorXd>(wv.data(), static_cast<Index>(wv.size()));
  VectorXd u = w.array() - m.coef.intercept;
  if (k > 0) u -= difference_columns(m.exog, order) * Eigen::Map<const VectorXd>(m.coef.exog.data(), k);
  const std::size_t r = std::min<std::size_t>(ar_span(order), wv.size());
  const VectorXd e = filter(expand(order, m.coef), u, r);

  m.usable_start = order.lost() + r;
  for (std::size_t t = r; t < wv.size(); ++t) {
    const double res = e(static_cast<Index>(t));
    m.residuals.push_back(res);
    m.fitted.push_back(m.series[order.lost() + t] - res);
    m.css += res * res;
  }
  for (double mod : ar_root_moduli(m))
    if (mod >= 1.0) {
      m.warnings.push_back("NonStationaryFit: AR polynomial has a root on or inside the unit circle");
      break;
    }
  return m;
}

double css(const ArimaModel& model) { return model.css; }

ArimaModel fit(std::span<const double> series, const ArimaOrder& order, const MatrixXd* exog, const FitOptions& options) {
  const bool intercept = options.intercept.value_or(order.d + order.seasonal_d() == 0);
  const MatrixXd* ex = (exog != nullptr && exog->cols() > 0) ? exog : nullptr;
  check_inputs(series, order, ex, intercept);

  const auto wv = difference(series, order.d, order.seasonal_d(), order.period());
  const VectorXd w = Eigen::Map<const VectorXd>(wv.data(), static_cast<Index>(wv.size()));
  const MatrixXd xdiff = ex ? difference_columns(*ex, order) : MatrixXd(w.size(), 0);
  const MatrixXd z = design(xdiff, intercept, w.size());

  auto objective = [&](const VectorXd& x) { return concentrated_css(order, unpack(order, x), w, z).css; };
  const auto k = static_cast<Index>(arma_count(order));
  detail::NelderMeadOptions nm;
  nm.max_evaluations = options.max_evaluations;

  VectorXd best = VectorXd::Zero(k);
  double best_f = objective(best);
  if (k > 0) {
    auto consider = [&](const detail::NelderMeadResult& r) {
      if (r.f < best_f) {
        best = r.x;
        best_f = r.f;
      }
    };
    consider(detail::nelder_mead(objective, VectorXd::Zero(k), nm));
    if (order.p + order.seasonal_p() > 0) {
      const std::size_t s = std::max<std::size_t>(order.period(), 1);
      const auto acf = autocorrelation(w, std::max(order.p, order.seasonal_p() * s));
      VectorXd yw = VectorXd::Zero(k);
      const auto phi = yule_walker(acf, order.p, 1);
      const auto sphi = yule_walker(acf, order.seasonal_p(), s);
      for (std::size_t i = 0; i < phi.size(); ++i) yw(static_cast<Index>(i)) = phi[i];
      for (std::size_t i = 0; i < sphi.size(); ++i) yw(static_cast<Index>(order.p + order.q + i)) = sphi[i];
      consider(detail::nelder_mead(objective, yw, nm));
    }
    nm.initial_step = 0.02;
    consider(detail::nelder_mead(objective, best, nm));
  }

  Coefficients c = unpack(order, best);
  const auto conc = concentrated_css(order, c, w, z);
  Index g = 0;
  if (intercept) c.intercept = conc.gamma(g++);
  for (Index j = 0; j < xdiff.cols(); ++j) c.exog.push_back(conc.gamma(g++));
  return assemble(series, order, c, intercept, ex);
}

std::vector<double> forecast(const ArimaModel& model, std::size_t horizon, const MatrixXd* exog_future) {
  const Index k = model.exog.cols();
  if (k > 0) {
    require(exog_future != nullptr && exog_future->rows() >= static_cast<Index>(horizon), Errc::MissingExog,
            "forecast needs " + std::to_string(horizon) + " future exogenous rows");
    require(exog_future->cols() == k, Errc::MissingExog, "future exogenous column count differs");
  }
  if (horizon == 0) return {};
  const auto& o = model.order;
  const auto wv = difference(model.series, o.d, o.seasonal_d(), o.period());
  const Index m = static_cast<Index>(wv.size());
  VectorXd u = Eigen::Map<const VectorXd>(wv.data(), m).array() - model.coef.intercept;
  VectorXd xb_future = VectorXd::Zero(static_cast<Index>(horizon));
  if (k > 0) {
    const Eigen::Map<const VectorXd> beta(model.coef.exog.data(), k);
    u -= difference_columns(model.exog, o) * beta;
    MatrixXd stacked(model.exog.rows() + static_cast<Index>(horizon), k);
    stacked << model.exog, exog_future->topRows(static_cast<Index>(horizon));
    xb_future = difference_columns(stacked, o).bottomRows(static_cast<Index>(horizon)) * beta;
  }
  const auto ex = expand(o, model.coef);
  const std::size_t r = std::min<std::size_t>(ar_span(o), wv.size());
  VectorXd e = filter(ex, u, r);
  u.conservativeResize(m + static_cast<Index>(horizon));
  e.conservativeResize(m + static_cast<Index>(horizon));

  // differencing operator (1 - B)^d (1 - B^s)^D as [1, c_1, ...]
  std::vector<double> delta{1.0};
  for (std::size_t i = 0; i < o.d; ++i) delta = multiply(delta, {1.0, -1.0});
  for (std::size_t i = 0; i < o.seasonal_d(); ++i) delta = multiply(delta, lag_polynomial({1.0}, o.period(), -1.0));

  std::vector<double> y = model.series;
  std::vector<double> out;
  for (std::size_t h = 0; h < horizon; ++h) {
    const Index t = m + static_cast<Index>(h);
    double v = 0.0;
    for (std::size_t j = 1; j <= ex.ar.size(); ++j)
      if (t >= static_cast<Index>(j)) v += ex.ar[j - 1] * u(t - static_cast<Index>(j));
    for (std::size_t j = 1; j <= ex.ma.size(); ++j)
      if (t >= static_cast<Index>(j)) v += ex.ma[j - 1] * e(t - static_cast<Index>(j));
    u(t) = v;
    e(t) = 0.0;
    double next = v + model.coef.intercept + xb_future(static_cast<Index>(h));
    for (std::size_t j = 1; j < delta.size(); ++j) next -= delta[j] * y[y.size() - j];
    y.push_back(next);
    out.push_back(next);
  }
  return out;
}

ArimaOrder select_order(std::span<const double> series, std::size_t d, std::optional<SeasonalOrder> seasonal,
                        const MatrixXd* exog) {
  ArimaOrder best_order;
  double best_aic = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p <= 2; ++p) {
    for (std::size_t q = 0; q <= 2; ++q) {
      ArimaOrder o{p, d, q, seasonal};
      const bool intercept = d + o.seasonal_d() == 0;
      try {
        const auto model = fit(series, o, exog, {});
        const auto n = static_cast<double>(model.residuals.size());
        const double params = static_cast<double>(arma_count(o) + (intercept ? 1 : 0) + model.coef.exog.size());
        const double aic = n * std::log(std::max(model.css / n, 1e-300)) + 2.0 * params;
        if (aic < best_aic) {
          best_aic = aic;
          best_order = o;
        }
      } catch (const Error& e) {
        if (e.code() != Errc::TooShort && e.code() != Errc::InvalidConfig) throw;
      }
    }
  }
  require(std::isfinite(best_aic), Errc::TooShort, "no candidate order fits the series");
  return best_order;
}

std::vector<double> ar_root_moduli(const ArimaModel& model) {
  const auto ex = expand(model.order, model.coef);
  const auto r = static_cast<Index>(ex.ar.size());
  if (r == 0) return {};
  MatrixXd companion = MatrixXd::Zero(r, r);
  for (Index j = 0; j < r; ++j) companion(0, j) = ex.ar[static_cast<std::size_t>(j)];
  for (Index i = 1; i < r; ++i) companion(i, i - 1) = 1.0;
  const Eigen::VectorXcd eig = companion.eigenvalues();
  std::vector<double> out;
  for (Index i = 0; i < eig.size(); ++i) out.push_back(std::abs(eig(i)));
  std::sort(out.begin(), out.end());
  return out;
}

json order_to_json(const ArimaOrder& o) {
  json j{{"p", o.p}, {"d", o.d}, {"q", o.q}};
  if (o.seasonal) j["seasonal"] = {{"P", o.seasonal->p}, {"D", o.seasonal->d}, {"Q", o.seasonal->q}, {"s", o.seasonal->s}};
  return j;
}

ArimaOrder order_from_json(const json& j) {
  try {
    ArimaOrder o;
    o.p = j.at("p").get<std::size_t>();
    o.d = j.at("d").get<std::size_t>();
    o.q = j.at("q").get<std::size_t>();
    if (j.contains("seasonal") && !j["seasonal"].is_null()) {
      const auto& s = j["seasonal"];
      o.seasonal = SeasonalOrder{s.at("P").get<std::size_t>(), s.at("D").get<std::size_t>(), s.at("Q").get<std::size_t>(),
                                 s.at("s").get<std::size_t>()};
    }
    return o;
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("malformed order: ") + e.what());
  }
}

json to_json(const ArimaModel& m) {
  json exog = json::array();
  for (Index i = 0; i < m.exog.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.exog.cols()));
    for (Index j = 0; j < m.exog.cols(); ++j) row[static_cast<std::size_t>(j)] = m.exog(i, j);
    exog.push_back(row);
  }
  return {{"order", order_to_json(m.order)},
          {"has_intercept", m.has_intercept},
          {"coefficients",
           {{"ar", m.coef.ar},
            {"ma", m.coef.ma},
            {"seasonal_ar", m.coef.seasonal_ar},
            {"seasonal_ma", m.coef.seasonal_ma},
            {"exog", m.coef.exog},
            {"intercept", m.coef.intercept}}},
          {"series", m.series},
          {"exog", exog},
          {"css", m.css},
          {"warnings", m.warnings}};
}

ArimaModel from_json(const json& j) {
  try {
    const auto order = order_from_json(j.at("order"));
    const auto& c = j.at("coefficients");
    Coefficients coef;
    coef.ar = c.at("ar").get<std::vector<double>>();
    coef.ma = c.at("ma").get<std::vector<double>>();
    coef.seasonal_ar = c.at("seasonal_ar").get<std::vector<double>>();
    coef.seasonal_ma = c.at("seasonal_ma").get<std::vector<double>>();
    coef.exog = c.at("exog").get<std::vector<double>>();
    coef.intercept = c.at("intercept").get<double>();
    const auto series = j.at("series").get<std::vector<double>>();
    const auto rows = j.at("exog").get<std::vector<std::vector<double>>>();
    MatrixXd exog(static_cast<Index>(series.size()), static_cast<Index>(coef.exog.size()));
    require(coef.exog.empty() || rows.size() == series.size(), Errc::LengthMismatch, "exogenous rows differ from the series");
    for (std::size_t i = 0; i < rows.size() && !coef.exog.empty(); ++i) {
      require(rows[i].size() == coef.exog.size(), Errc::LengthMismatch, "ragged exogenous row");
      for (std::size_t k = 0; k < rows[i].size(); ++k) exog(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    return assemble(series, order, coef, j.at("has_intercept").get<bool>(), coef.exog.empty() ? nullptr : &exog);
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("malformed arima model: ") + e.what());
  }
}

SeriesTable load_series_csv(const std::filesystem::path& path) {
  const auto doc = io::read_csv_file(path);
  const auto date_col = doc.column("date");
  const auto gen_col = doc.column("generation");
  require(date_col.has_value(), Errc::MissingColumn, "date");
  require(gen_col.has_value(), Errc::MissingColumn, "generation");
  require(!doc.rows.empty(), Errc::EmptyTable, path.string());
  SeriesTable t;
  std::vector<std::size_t> exog_cols;
  for (std::size_t j = 0; j < doc.header.size(); ++j)
    if (j != *date_col && j != *gen_col) {
      t.exog_names.push_back(doc.header[j]);
      exog_cols.push_back(j);
    }
  t.exog.resize(static_cast<Index>(doc.rows.size()), static_cast<Index>(exog_cols.size()));
  for (std::size_t i = 0; i < doc.rows.size(); ++i) {
    const auto& row = doc.rows[i];
    const std::string& date = row[*date_col];
    int y = 0;
    unsigned mo = 0, d = 0;
    char extra = 0;
    const bool shaped = date.size() == 10 && date[4] == '-' && date[7] == '-' &&
                        std::sscanf(date.c_str(), "%4d-%2u-%2u%c", &y, &mo, &d, &extra) == 3;
    require(shaped && std::chrono::year_month_day(std::chrono::year(y), std::chrono::month(mo), std::chrono::day(d)).ok(),
            Errc::InvalidArgument, "row " + std::to_string(i + 1) + ": bad date '" + date + "'");
    t.dates.push_back(date);
    auto number = [&](std::size_t col) {
      const auto v = io::parse_number(row[col]);
      require(v.has_value(), Errc::NonNumericCell, "(" + std::to_string(i + 1) + ", " + doc.header[col] + ")");
      return *v;
    };
    t.generation.push_back(number(*gen_col));
    for (std::size_t k = 0; k < exog_cols.size(); ++k)
      t.exog(static_cast<Index>(i), static_cast<Index>(k)) = number(exog_cols[k]);
  }
  return t;
}

std::string series_csv(const SeriesTable& t) {
  std::ostringstream out;
  out << "date,generation";
  for (const auto& n : t.exog_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < t.generation.size(); ++i) {
    out << t.dates[i] << ',' << io::format_number(t.generation[i]);
    for (Index k = 0; k < t.exog.cols(); ++k) out << ',' << io::format_number(t.exog(static_cast<Index>(i), k));
    out << '\n';
  }
  return out.str();
}

}  // namespace pvcast::arima
