#include "pvcast/covcor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pvcast/error.hpp"
#include "pvcast/io.hpp"

namespace pvcast::covcor {

using Eigen::Index;
using nlohmann::json;

namespace {

std::size_t position(const std::vector<std::string>& names, std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  require(it != names.end(), Errc::UnknownVariable, std::string(name));
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

Matrices cov_corr(const datacube::Table& table) {
  const auto n = static_cast<Index>(table.rows());
  const auto p = static_cast<Index>(table.cols());
  require(n >= 2, Errc::TooFewRows, "covariance needs at least 2 rows");
  Eigen::MatrixXd x(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) x(i, j) = table.columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();

  Matrices m;
  m.names = table.names;
  m.k = centered.transpose() * centered / static_cast<double>(n - 1);
  m.r = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd sd(p);
  for (Index j = 0; j < p; ++j) {
    sd(j) = std::sqrt(m.k(j, j));
    if (!(sd(j) > 0.0)) m.warnings.push_back("constant column " + table.names[static_cast<std::size_t>(j)] + " has zero correlation");
  }
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      if (sd(i) > 0.0 && sd(j) > 0.0) m.r(i, j) = i == j ? 1.0 : std::clamp(m.k(i, j) / (sd(i) * sd(j)), -1.0, 1.0);
  return m;
}

const std::vector<std::string>& default_flip_set() {
  static const std::vector<std::string> names{"avg_max_temp", "avg_rel_humidity", "total_precipitation"};
  return names;
}

Weights build_weights(const Matrices& m, std::string_view target, std::span<const std::string> flip, FlipMode mode) {
  const auto t = static_cast<Index>(position(m.names, target));
  Weights w;
  w.names = m.names;
  w.target = std::string(target);
  for (std::size_t j = 0; j < m.names.size(); ++j) {
    w.a.push_back(m.k(t, static_cast<Index>(j)));
    w.b.push_back(m.r(t, static_cast<Index>(j)));
  }
  for (const auto& name : flip) {
    const auto j = position(m.names, name);
    bool changed = false;
    if (mode == FlipMode::both && w.a[j] > 0.0) {
      w.a[j] = -w.a[j];
      changed = true;
    }
    if (w.b[j] > 0.0) {
      w.b[j] = -w.b[j];
      changed = true;
    }
    if (changed && std::find(w.flipped.begin(), w.flipped.end(), name) == w.flipped.end()) w.flipped.push_back(name);
  }
  return w;
}

double estimate_row(const Weights& w, std::span<const double> x) {
  require(x.size() == w.names.size(), Errc::DimensionMismatch, "row length differs from the weight count");
  double quadratic = 0.0, linear = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) quadratic += w.a[i] * x[i] * x[i];
  for (std::size_t i = 0; i < x.size(); ++i) linear += w.b[i] * x[i];
  return quadratic + linear;
}

EstimateField estimate(const Weights& w, const datacube::Table& cube) {
  std::vector<const std::vector<double>*> cols;
  for (const auto& name : w.names) {
    const auto idx = cube.find(name);
    require(idx.has_value(), Errc::MissingVariable, name);
    cols.push_back(&cube.columns[*idx]);
  }
  EstimateField out;
  out.locations = cube.locations;
  out.values.resize(cube.rows());
  std::vector<double> row(w.names.size());
  for (std::size_t i = 0; i < cube.rows(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = (*cols[j])[i];
      require(v >= 0.0 && v <= 1.0, Errc::InvalidArgument,
              w.names[j] + " row " + std::to_string(i + 1) + " is outside [0, 1]");
      row[j] = v;
    }
    out.values[i] = estimate_row(w, row);
  }
  return out;
}

EstimateField rescale(const EstimateField& field) {
  EstimateField out = field;
  if (field.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
  const double min = *lo, span = *hi - *lo;
  for (auto& v : out.values) v = span > 0.0 ? (v - min) / span : 0.0;
  return out;
}

FieldErrors evaluate_field(const EstimateField& estimate, const EstimateField& reference) {
  require(estimate.values.size() == reference.values.size(), Errc::RowMismatch,
          std::to_string(estimate.values.size()) + " vs " + std::to_string(reference.values.size()) + " rows");
  require(!estimate.values.empty(), Errc::RowMismatch, "fields are empty");
  if (!estimate.locations.empty() && !reference.locations.empty()) {
    require(estimate.locations.size() == reference.locations.size(), Errc::RowMismatch, "location counts differ");
    for (std::size_t i = 0; i < estimate.locations.size(); ++i)
      require(estimate.locations[i] == reference.locations[i], Errc::RowMismatch,
              "row " + std::to_string(i + 1) + " locations differ");
  }
  FieldErrors e;
  for (std::size_t i = 0; i < estimate.values.size(); ++i) {
    const double d = estimate.values[i] - reference.values[i];
    e.mse += d * d;
    e.mae += std::abs(d);
  }
  e.mse /= static_cast<double>(estimate.values.size());
  e.mae /= static_cast<double>(estimate.values.size());
  return e;
}

json weights_to_json(const Weights& w) {
  return {{"target", w.target}, {"variables", w.names}, {"a", w.a}, {"b", w.b}, {"flipped", w.flipped}};
}

Weights weights_from_json(const json& j) {
  Weights w;
  try {
    w.target = j.at("target").get<std::string>();
    w.names = j.at("variables").get<std::vector<std::string>>();
    w.a = j.at("a").get<std::vector<double>>();
    w.b = j.at("b").get<std::vector<double>>();
    w.flipped = j.at("flipped").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("malformed weights: ") + e.what());
  }
  require(w.a.size() == w.names.size() && w.b.size() == w.names.size(), Errc::LengthMismatch,
          "weight vectors differ in length from the variable list");
  for (double b : w.b) require(b >= -1.0 && b <= 1.0, Errc::InvalidArgument, "correlation weight outside [-1, 1]");
  return w;
}

std::string field_csv(const EstimateField& field) {
  std::ostringstream out;
  out << "lat,lon,value\n";
  for (std::size_t i = 0; i < field.values.size(); ++i)
    out << io::format_number(field.locations[i].lat) << ',' << io::format_number(field.locations[i].lon) << ','
        << io::format_number(field.values[i]) << '\n';
  return out.str();
}

EstimateField load_field_csv(const std::filesystem::path& path, std::string_view value_column) {
  const auto table = datacube::load_table(path, datacube::SourceTag::other);
  EstimateField f;
  f.locations = table.locations;
  f.values = table.column(value_column);
  return f;
}

}  // namespace pvcast::covcor
