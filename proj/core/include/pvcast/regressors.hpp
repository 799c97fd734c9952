#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pvcast::regressors {

enum class Kind {
  ols,
  sgd_linear,
  passive_aggressive,
  ransac,
  decision_tree,
  random_forest,
  bagging,
  adaboost,
  gradient_boosting,
  svr_linear,
};

std::string_view to_string(Kind kind);
std::optional<Kind> kind_from_string(std::string_view name);
const std::vector<Kind>& all_kinds();

/// One hyperparameter of a regressor kind. `valid_*` bounds are enforced by
/// RegressorSpec::validate; `search_*` bounds are the range the committee
/// search samples from and always contain the default.
struct ParamDef {
  std::string name;
  double valid_min = 0.0;
  double valid_max = 0.0;
  double search_min = 0.0;
  double search_max = 0.0;
  double default_value = 0.0;
  bool integer = false;
  bool log_scale = false;
  /// Non-empty for categorical parameters; the value is the choice index.
  std::vector<std::string> choices;
};

const std::vector<ParamDef>& param_schema(Kind kind);

struct RegressorSpec {
  Kind kind = Kind::ols;
  std::map<std::string, double> params;  // missing entries take the schema default
  std::uint64_t seed = 0;

  double param(std::string_view name) const;
  /// Throws InvalidParam(name) for unknown names, out-of-range or
  /// non-integral values.
  void validate() const;
};

RegressorSpec default_spec(Kind kind, std::uint64_t seed);

/// A fitted model. `state` is a flat numeric encoding interpreted by kind:
///   linear kinds    [w_1 .. w_d, intercept]
///   decision_tree   one encoded tree
///   forest/bagging  [count, (tree)...], mean vote
///   adaboost        [count, (estimator weight, tree)...], weighted median
///   gradient_boost  [initial, learning rate, count, (tree)...]
/// where a tree is [node count, (feature, threshold, left, right, value)...]
/// and leaves carry feature -1.
struct FittedRegressor {
  RegressorSpec spec;
  std::size_t input_dim = 0;
  std::vector<double> state;
  double train_score = 0.0;  // MAE on the training data
};

/// Deterministic given (spec, x, y). Throws InvalidParam, DegenerateData,
/// DimensionMismatch, InsufficientData (n < 2) or FitDiverged.
FittedRegressor fit(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Throws DimensionMismatch when x has the wrong column count.
Eigen::VectorXd predict(const FittedRegressor& model, const Eigen::MatrixXd& x);

/// Predictions after each boosting round (adaboost, gradient_boosting).
std::vector<Eigen::VectorXd> staged_predict(const FittedRegressor& model, const Eigen::MatrixXd& x);

/// [w_1 .. w_d, intercept] for the linear kinds; throws InvalidArgument otherwise.
std::vector<double> linear_coefficients(const FittedRegressor& model);

nlohmann::json spec_to_json(const RegressorSpec& spec);
RegressorSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedRegressor& model);
FittedRegressor from_json(const nlohmann::json& j);

}  // namespace pvcast::regressors
