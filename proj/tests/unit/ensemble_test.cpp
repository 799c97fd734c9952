#include "pvcast/ensemble.hpp"

#include <cmath>

#include "pvcast/random.hpp"
#include "test_support.hpp"

using namespace pvcast;
using namespace pvcast::ensemble;
using regressors::Kind;

namespace {

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Data linear(int n, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = rng.uniform();
    d.x(i, 1) = rng.uniform();
    d.y(i) = 0.4 * d.x(i, 0) - 0.3 * d.x(i, 1) + 0.2;
  }
  return d;
}

Data curved(int n, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Eigen::MatrixXd(n, 3), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) d.x(i, j) = rng.uniform();
    d.y(i) = 0.5 * d.x(i, 0) + 0.3 * std::sin(4.0 * d.x(i, 1)) * d.x(i, 2) + 0.02 * rng.normal();
  }
  return d;
}

// Hand-built linear member y = w x + b on one feature.
regressors::FittedRegressor line_member(double w, double b) {
  regressors::FittedRegressor m;
  m.spec = regressors::default_spec(Kind::ols, 0);
  m.input_dim = 1;
  m.state = {w, b};
  return m;
}

FittedCommittee hand_committee(std::vector<regressors::FittedRegressor> members) {
  FittedCommittee c;
  for (const auto& m : members) c.committee.members.push_back(m.spec);
  c.fitted = std::move(members);
  return c;
}

}  // namespace

TEST_CASE("mean vote arithmetic") {
  Eigen::MatrixXd at0(1, 1);
  at0 << 0.0;
  CHECK(vote_predict(hand_committee({line_member(0, 1), line_member(0, 3)}), at0)(0) == 2.0);
  CHECK(vote_predict(hand_committee({line_member(0, 1), line_member(0, 2), line_member(0, 6)}), at0)(0) == 3.0);

  Eigen::MatrixXd two(2, 1);
  two << 0.0, 1.0;
  const Eigen::VectorXd v = vote_predict(hand_committee({line_member(2, 0), line_member(-2, 2)}), two);
  CHECK(v(0) == 1.0);
  CHECK(v(1) == 1.0);

  const auto single = hand_committee({line_member(1.5, -0.5)});
  CHECK(vote_predict(single, two) == regressors::predict(single.fitted[0], two));
}

TEST_CASE("vote equals the column mean of member predictions") {
  const auto d = curved(60, 4);
  Committee c;
  for (Kind k : {Kind::ols, Kind::decision_tree, Kind::gradient_boosting, Kind::random_forest})
    c.members.push_back(regressors::default_spec(k, 3));
  const auto model = fit_committee(c, d.x, d.y, 3);
  REQUIRE(model.fitted.size() == 4);
  const Eigen::MatrixXd preds = member_predictions(model, d.x);
  Eigen::VectorXd manual = Eigen::VectorXd::Zero(d.x.rows());
  for (Eigen::Index m = 0; m < preds.cols(); ++m) manual += preds.col(m);
  manual /= 4.0;
  CHECK((vote_predict(model, d.x) - manual).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(member_predictions(fit_committee(c, d.x, d.y, 1), d.x) == preds);

  Committee only_ols{{regressors::default_spec(Kind::ols, 0)}};
  const auto ols_model = fit_committee(only_ols, d.x, d.y);
  CHECK(vote_predict(ols_model, d.x) == regressors::predict(ols_model.fitted[0], d.x));

  const auto restored = from_json(nlohmann::json::parse(to_json(model).dump()));
  CHECK(vote_predict(restored, d.x) == vote_predict(model, d.x));
}

TEST_CASE("committee contracts") {
  const auto d = linear(20, 1);
  CHECK_ERRC(fit_committee(Committee{}, d.x, d.y), Errc::InvalidConfig);
  Committee twice{{regressors::default_spec(Kind::ols, 0), regressors::default_spec(Kind::ols, 1)}};
  CHECK_ERRC(fit_committee(twice, d.x, d.y), Errc::InvalidConfig);

  Committee robust{{regressors::default_spec(Kind::ols, 0), regressors::default_spec(Kind::ransac, 0)}};
  try {
    fit_committee(robust, d.x, Eigen::VectorXd::Constant(20, 0.5));
    FAIL("expected DegenerateData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateData);
    CHECK(e.detail().rfind("ransac: ", 0) == 0);
  }
  CHECK_ERRC(vote_predict(fit_committee(Committee{{regressors::default_spec(Kind::ols, 0)}}, d.x, d.y),
                          Eigen::MatrixXd::Zero(2, 3)),
             Errc::DimensionMismatch);
}

TEST_CASE("folds partition the rows evenly and deterministically") {
  const auto a = kfold_assignment(23, 5, 9);
  CHECK(a == kfold_assignment(23, 5, 9));
  CHECK(a != kfold_assignment(23, 5, 10));
  std::vector<int> sizes(5, 0);
  for (auto f : a) ++sizes.at(f);
  for (int s : sizes) CHECK((s == 4 || s == 5));
  CHECK_ERRC(kfold_assignment(3, 5, 0), Errc::TooFewRows);
  CHECK_ERRC(kfold_assignment(10, 1, 0), Errc::TooFewRows);
}

TEST_CASE("cross-validated fitness") {
  const auto d = linear(40, 2);
  Committee ols{{regressors::default_spec(Kind::ols, 0)}};
  CHECK(evaluate_committee(ols, d.x, d.y, 5, 11) < 1e-8);
  CHECK_ERRC(evaluate_committee(ols, d.x.topRows(4), d.y.head(4), 5, 11), Errc::TooFewRows);

  // A root-only tree predicts the training mean m. Every held-out fold holds
  // two zeros and two ones, so its MAE is (2m + 2(1 - m)) / 4 = 0.5 for any m.
  const auto folds = kfold_assignment(20, 5, 11);
  Eigen::VectorXd y(20);
  std::vector<int> seen(5, 0);
  for (std::size_t i = 0; i < 20; ++i) y(static_cast<Eigen::Index>(i)) = (seen[folds[i]]++ % 2 == 0) ? 0.0 : 1.0;
  CHECK(y.mean() == 0.5);
  auto stump = regressors::default_spec(Kind::decision_tree, 0);
  stump.params["min_samples_split"] = 1000;
  CHECK(evaluate_committee(Committee{{stump}}, d.x.topRows(20), y, 5, 11) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("genome encoding round-trips committees") {
  const std::vector<Kind> pool{Kind::ols, Kind::random_forest, Kind::sgd_linear};
  const auto space = committee_space(pool);
  CHECK(space.genes.front().name == "ols.include");
  CHECK(space.index("random_forest.n_trees") > 0);
  CHECK(space.genes[space.index("sgd_linear.schedule")].kind == evolution::GeneKind::categorical);

  const auto defaults = default_committee(pool, 5);
  const auto g = encode(pool, defaults);
  REQUIRE(g.genes.size() == space.genes.size());
  for (std::size_t j = 0; j < g.genes.size(); ++j) CHECK(space.genes[j].contains(g.genes[j]));
  const auto back = decode(pool, g, 5);
  REQUIRE(back.members.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.members[i].params == defaults.members[i].params);
    CHECK(back.members[i].seed == defaults.members[i].seed);
  }

  auto none = g;
  none.genes[space.index("ols.include")] = 0;
  none.genes[space.index("random_forest.include")] = 0;
  none.genes[space.index("sgd_linear.include")] = 0;
  CHECK(decode(pool, none, 5).members.empty());

  const std::vector<Kind> single{Kind::decision_tree};
  CHECK(committee_space(single).genes.size() == regressors::param_schema(Kind::decision_tree).size());
}

TEST_CASE("optimization never loses to the default committee") {
  const auto d = linear(50, 3);
  evolution::GaConfig cfg;
  cfg.population_size = 8;
  cfg.generations = 4;
  cfg.seed = 42;
  const std::vector<Kind> pool{Kind::ols, Kind::decision_tree};
  const auto r = optimize_committee(pool, d.x, d.y, cfg);
  CHECK(r.best_scores.mae <= r.default_scores.mae);
  CHECK(r.best_scores.mae == r.history.back());
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  CHECK(r.default_scores.mae == evaluate_committee(default_committee(pool, 42), d.x, d.y, 5, 42));

  const auto again = optimize_committee(pool, d.x, d.y, cfg);
  CHECK(to_json(again.best) == to_json(r.best));
  CHECK(again.history == r.history);

  const auto single = optimize_committee({Kind::decision_tree}, d.x, d.y, cfg);
  REQUIRE(single.best.committee.members.size() == 1);
  CHECK(single.best.committee.members[0].kind == Kind::decision_tree);
  CHECK(single.best_scores.mae <= single.default_scores.mae);

  CHECK_ERRC(optimize_committee({}, d.x, d.y, cfg), Errc::InvalidConfig);
}

TEST_CASE("comparison report") {
  const Scores def{0.2, 0.05}, opt{0.15, 0.04};
  const auto j = comparison_json(def, opt);
  CHECK(j["mae_reduction_percent"].get<double>() == doctest::Approx(25.0));
  CHECK(j["mse_reduction_percent"].get<double>() == doctest::Approx(20.0));
  const auto table = comparison_table(def, opt);
  CHECK(table.find("25.00%") != std::string::npos);
  CHECK(percent_reduction(0.0, 0.0) == 0.0);
}
