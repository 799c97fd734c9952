#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pvcast/datacube.hpp"

namespace pvcast::covcor {

struct Matrices {
  std::vector<std::string> names;
  Eigen::MatrixXd k;  // sample covariance, denominator n - 1
  Eigen::MatrixXd r;  // Pearson correlation; 0 for constant columns
  std::vector<std::string> warnings;
};

/// Over every column of the table. Throws TooFewRows for fewer than 2 rows.
Matrices cov_corr(const datacube::Table& table);

enum class FlipMode {
  both,              // negate positive covariance and correlation entries
  correlation_only,  // negate positive correlation entries only
};

struct Weights {
  std::vector<std::string> names;
  std::vector<double> a;  // covariance row of the target
  std::vector<double> b;  // correlation row of the target
  std::vector<std::string> flipped;
  std::string target;
};

/// avg_max_temp, avg_rel_humidity, total_precipitation.
const std::vector<std::string>& default_flip_set();

/// a = K[target, .], b = R[target, .], then the flip rule for every listed
/// variable. Throws UnknownVariable for an absent target or flip name.
Weights build_weights(const Matrices& m, std::string_view target, std::span<const std::string> flip,
                      FlipMode mode = FlipMode::both);

/// E = sum a_i x_i^2 + sum b_i x_i for one row aligned with weights.names.
double estimate_row(const Weights& w, std::span<const double> x);

struct EstimateField {
  std::vector<datacube::Location> locations;
  std::vector<double> values;
};

/// Per cube row. Throws MissingVariable when the table lacks a weighted
/// column, InvalidArgument when a value lies outside [0, 1].
EstimateField estimate(const Weights& w, const datacube::Table& cube);

/// Min-max rescaling to [0, 1]; a constant field becomes all zeros.
EstimateField rescale(const EstimateField& field);

struct FieldErrors {
  double mse = 0.0;
  double mae = 0.0;
};

/// Compares aligned fields as given (callers rescale first). Throws
/// RowMismatch when the row counts or locations differ.
FieldErrors evaluate_field(const EstimateField& estimate, const EstimateField& reference);

nlohmann::json weights_to_json(const Weights& w);
Weights weights_from_json(const nlohmann::json& j);

/// "lat,lon,value" rows.
std::string field_csv(const EstimateField& field);
/// Reads lat, lon and the named value column from a CSV with a header.
EstimateField load_field_csv(const std::filesystem::path& path, std::string_view value_column);

}  // namespace pvcast::covcor
