#include "pvcast/ensemble.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "pvcast/error.hpp"
#include "pvcast/parallel.hpp"
#include "pvcast/random.hpp"

namespace pvcast::ensemble {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using regressors::Kind;

namespace {

MatrixXd select_rows(const MatrixXd& x, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

VectorXd select(const VectorXd& y, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
  return out;
}

bool has_include_gene(const std::vector<Kind>& pool) { return pool.size() > 1; }

}  // namespace

void Committee::validate() const {
  require(!members.empty(), Errc::InvalidConfig, "a committee needs at least one member");
  std::set<Kind> seen;
  for (const auto& m : members) {
    require(seen.insert(m.kind).second, Errc::InvalidConfig,
            "regressor kind " + std::string(regressors::to_string(m.kind)) + " appears twice");
    m.validate();
  }
}

FittedCommittee fit_committee(const Committee& committee, const MatrixXd& x, const VectorXd& y, unsigned threads) {
  committee.validate();
  FittedCommittee out;
  out.committee = committee;
  out.fitted.resize(committee.members.size());
  parallel_for(committee.members.size(), threads, [&](std::size_t i) {
    const auto& spec = committee.members[i];
    try {
      out.fitted[i] = regressors::fit(spec, x, y);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(regressors::to_string(spec.kind)) + ": " + e.detail());
    }
  });
  return out;
}

MatrixXd member_predictions(const FittedCommittee& model, const MatrixXd& x) {
  MatrixXd out(x.rows(), static_cast<Index>(model.fitted.size()));
  for (std::size_t m = 0; m < model.fitted.size(); ++m) out.col(static_cast<Index>(m)) = regressors::predict(model.fitted[m], x);
  return out;
}

VectorXd vote_predict(const FittedCommittee& model, const MatrixXd& x) {
  require(!model.fitted.empty(), Errc::InvalidConfig, "committee has no fitted members");
  if (x.rows() == 0) return VectorXd(0);
  return member_predictions(model, x).rowwise().mean();
}

std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  require(folds >= 2, Errc::TooFewRows, "at least 2 folds are required");
  require(n >= folds, Errc::TooFewRows, std::to_string(n) + " rows cannot fill " + std::to_string(folds) + " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {0xf01d}));
  rng.shuffle(order);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
  return fold;
}

Scores cross_validate(const Committee& committee, const MatrixXd& x, const VectorXd& y, std::size_t folds,
                      std::uint64_t seed) {
  require(x.rows() == y.size(), Errc::DimensionMismatch, "feature and target row counts differ");
  const auto assignment = kfold_assignment(static_cast<std::size_t>(x.rows()), folds, seed);
  Scores s;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Index> train, test;
    for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == f ? test : train).push_back(static_cast<Index>(i));
    const auto model = fit_committee(committee, select_rows(x, train), select(y, train));
    const VectorXd err = vote_predict(model, select_rows(x, test)) - select(y, test);
    s.mae += err.cwiseAbs().mean();
    s.mse += err.squaredNorm() / static_cast<double>(err.size());
  }
  s.mae /= static_cast<double>(folds);
  s.mse /= static_cast<double>(folds);
  return s;
}

double evaluate_committee(const Committee& committee, const MatrixXd& x, const VectorXd& y, std::size_t folds,
                          std::uint64_t seed) {
  return cross_validate(committee, x, y, folds, seed).mae;
}

std::uint64_t member_seed(std::uint64_t seed, Kind kind) {
  return derive_seed(seed, {0x3e3b, static_cast<std::uint64_t>(kind)});
}

Committee default_committee(const std::vector<Kind>& pool, std::uint64_t seed) {
  Committee c;
  for (Kind k : pool) c.members.push_back(regressors::default_spec(k, member_seed(seed, k)));
  return c;
}

evolution::SearchSpace committee_space(const std::vector<Kind>& pool) {
  evolution::SearchSpace space;
  for (Kind k : pool) {
    const std::string prefix(regressors::to_string(k));
    if (has_include_gene(pool)) space.genes.push_back(evolution::GeneDomain::categorical(prefix + ".include", {"off", "on"}));
    for (const auto& p : regressors::param_schema(k)) {
      const std::string name = prefix + "." + p.name;
      if (!p.choices.empty())
        space.genes.push_back(evolution::GeneDomain::categorical(name, p.choices));
      else if (p.integer)
        space.genes.push_back(evolution::GeneDomain::integer(name, p.search_min, p.search_max));
      else
        space.genes.push_back(evolution::GeneDomain::real(name, p.search_min, p.search_max, p.log_scale));
    }
  }
  return space;
}

evolution::Genome encode(const std::vector<Kind>& pool, const Committee& committee) {
  evolution::Genome g;
  for (Kind k : pool) {
    const auto it = std::find_if(committee.members.begin(), committee.members.end(),
                                 [&](const regressors::RegressorSpec& s) { return s.kind == k; });
    if (has_include_gene(pool)) g.genes.push_back(it == committee.members.end() ? 0.0 : 1.0);
    for (const auto& p : regressors::param_schema(k))
      g.genes.push_back(it == committee.members.end() ? p.default_value : it->param(p.name));
  }
  return g;
}

Committee decode(const std::vector<Kind>& pool, const evolution::Genome& genome, std::uint64_t seed) {
  Committee c;
  std::size_t pos = 0;
  for (Kind k : pool) {
    bool included = true;
    if (has_include_gene(pool)) included = genome.genes.at(pos++) == 1.0;
    auto spec = regressors::default_spec(k, member_seed(seed, k));
    for (const auto& p : regressors::param_schema(k)) spec.params[p.name] = genome.genes.at(pos++);
    if (included) c.members.push_back(std::move(spec));
  }
  return c;
}

OptimizeResult optimize_committee(const std::vector<Kind>& pool, const MatrixXd& x, const VectorXd& y,
                                  const evolution::GaConfig& config, const OptimizeOptions& options) {
  require(!pool.empty(), Errc::InvalidConfig, "the regressor pool is empty");
  require(std::set<Kind>(pool.begin(), pool.end()).size() == pool.size(), Errc::InvalidConfig,
          "the regressor pool repeats a kind");
  config.validate();
  // fail fast on bad folds before the search starts
  kfold_assignment(static_cast<std::size_t>(x.rows()), options.folds, config.seed);

  const auto space = committee_space(pool);
  const auto defaults = default_committee(pool, config.seed);
  auto fitness = [&](const evolution::Genome& g, const evolution::EvalContext&) {
    const auto committee = decode(pool, g, config.seed);
    if (committee.members.empty()) return std::numeric_limits<double>::infinity();
    return evaluate_committee(committee, x, y, options.folds, config.seed);
  };
  evolution::GaOptions ga;
  ga.threads = options.threads;
  ga.initial_genomes = {encode(pool, defaults)};
  ga.on_generation = options.on_generation;
  const auto run = evolution::run_ga(space, fitness, config, ga);

  OptimizeResult out;
  out.history = run.history;
  out.failures = run.failures;
  const auto best = decode(pool, run.best.genome, config.seed);
  out.best = fit_committee(best, x, y, options.threads);
  out.best_scores = cross_validate(best, x, y, options.folds, config.seed);
  out.default_scores = cross_validate(defaults, x, y, options.folds, config.seed);
  return out;
}

double percent_reduction(double before, double after) {
  return before == 0.0 ? 0.0 : 100.0 * (before - after) / before;
}

json committee_to_json(const Committee& committee) {
  json members = json::array();
  for (const auto& m : committee.members) members.push_back(regressors::spec_to_json(m));
  return {{"members", members}};
}

Committee committee_from_json(const json& j) {
  Committee c;
  try {
    for (const auto& m : j.at("members")) c.members.push_back(regressors::spec_from_json(m));
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("malformed committee: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const FittedCommittee& model) {
  json fitted = json::array();
  for (const auto& f : model.fitted) fitted.push_back(regressors::to_json(f));
  return {{"committee", committee_to_json(model.committee)}, {"fitted", fitted}};
}

FittedCommittee from_json(const json& j) {
  FittedCommittee m;
  try {
    m.committee = committee_from_json(j.at("committee"));
    for (const auto& f : j.at("fitted")) m.fitted.push_back(regressors::from_json(f));
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("malformed committee model: ") + e.what());
  }
  require(m.fitted.size() == m.committee.members.size(), Errc::InvalidConfig, "fitted member count mismatch");
  return m;
}

json comparison_json(const Scores& def, const Scores& opt) {
  return {{"default", {{"mae", def.mae}, {"mse", def.mse}}},
          {"optimized", {{"mae", opt.mae}, {"mse", opt.mse}}},
          {"mae_reduction_percent", percent_reduction(def.mae, opt.mae)},
          {"mse_reduction_percent", percent_reduction(def.mse, opt.mse)}};
}

std::string comparison_table(const Scores& def, const Scores& opt) {
  char buf[256];
  std::string out = "metric  default       optimized     reduction\n";
  std::snprintf(buf, sizeof buf, "MAE     %-12.6g  %-12.6g  %.2f%%\n", def.mae, opt.mae, percent_reduction(def.mae, opt.mae));
  out += buf;
  std::snprintf(buf, sizeof buf, "MSE     %-12.6g  %-12.6g  %.2f%%\n", def.mse, opt.mse, percent_reduction(def.mse, opt.mse));
  out += buf;
  return out;
}

}  // namespace pvcast::ensemble
