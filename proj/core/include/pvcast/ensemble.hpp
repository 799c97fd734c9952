#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pvcast/evolution.hpp"
#include "pvcast/regressors.hpp"

namespace pvcast::ensemble {

/// Mean-vote committee; each kind appears at most once.
struct Committee {
  std::vector<regressors::RegressorSpec> members;

  /// Throws InvalidConfig (empty, repeated kind) or InvalidParam.
  void validate() const;
};

struct FittedCommittee {
  Committee committee;
  std::vector<regressors::FittedRegressor> fitted;
};

/// Fits every member on the same data. Member errors are rethrown with the
/// member kind prefixed to the detail.
FittedCommittee fit_committee(const Committee& committee, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              unsigned threads = 1);

/// n x members matrix of member predictions.
Eigen::MatrixXd member_predictions(const FittedCommittee& model, const Eigen::MatrixXd& x);

/// Row-wise arithmetic mean of the member predictions.
Eigen::VectorXd vote_predict(const FittedCommittee& model, const Eigen::MatrixXd& x);

/// Fold index per row: a seeded permutation dealt round-robin, so fold
/// sizes differ by at most one. Throws TooFewRows when n < folds or folds < 2.
std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct Scores {
  double mae = 0.0;
  double mse = 0.0;
};

/// Mean held-out MAE and MSE over the folds.
Scores cross_validate(const Committee& committee, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::size_t folds, std::uint64_t seed);

/// Cross-validated MAE (the committee search fitness).
double evaluate_committee(const Committee& committee, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          std::size_t folds, std::uint64_t seed);

/// Seed of the member of `kind` for a run seeded with `seed`.
std::uint64_t member_seed(std::uint64_t seed, regressors::Kind kind);

/// Every pool kind with its default parameters.
Committee default_committee(const std::vector<regressors::Kind>& pool, std::uint64_t seed);

/// Per kind: an inclusion gene "<kind>.include" (omitted for a single-kind
/// pool), then one gene "<kind>.<param>" per hyperparameter over its search range.
evolution::SearchSpace committee_space(const std::vector<regressors::Kind>& pool);
evolution::Genome encode(const std::vector<regressors::Kind>& pool, const Committee& committee);
/// Empty committee when no inclusion bit is set.
Committee decode(const std::vector<regressors::Kind>& pool, const evolution::Genome& genome, std::uint64_t seed);

struct OptimizeOptions {
  std::size_t folds = 5;
  unsigned threads = 1;
  std::function<void(const evolution::GenerationRecord&)> on_generation;
};

struct OptimizeResult {
  FittedCommittee best;  // refitted on all rows
  Scores best_scores;    // cross-validated
  Scores default_scores; // cross-validated default committee
  std::vector<double> history;
  std::vector<std::string> failures;
};

/// GA over committee membership and member hyperparameters; the default
/// committee is part of the initial population, so the result never scores
/// worse than it. Throws InvalidConfig on an empty pool.
OptimizeResult optimize_committee(const std::vector<regressors::Kind>& pool, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, const evolution::GaConfig& config,
                                  const OptimizeOptions& options = {});

/// Relative reduction 100 * (before - after) / before; 0 when before is 0.
double percent_reduction(double before, double after);

nlohmann::json committee_to_json(const Committee& committee);
Committee committee_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedCommittee& model);
FittedCommittee from_json(const nlohmann::json& j);

/// Comparison of default and optimized scores: JSON and a text table.
nlohmann::json comparison_json(const Scores& def, const Scores& opt);
std::string comparison_table(const Scores& def, const Scores& opt);

}  // namespace pvcast::ensemble
