#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "pvcast/arima.hpp"
#include "pvcast/covcor.hpp"
#include "pvcast/datacube.hpp"
#include "pvcast/ensemble.hpp"
#include "pvcast/error.hpp"
#include "pvcast/heatmap.hpp"
#include "pvcast/hybrid.hpp"
#include "pvcast/interpolation.hpp"
#include "pvcast/io.hpp"
#include "pvcast/synth.hpp"

namespace pvcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::string output_dir;
};

class Output {
 public:
  Output(const Globals& g, std::ostream& log) : dir_(g.output_dir), log_(log) {}

  fs::path path(const std::string& name) const { return dir_ / name; }

  void text(const std::string& name, const std::string& content) const {
    const auto p = path(name);
    fs::create_directories(p.parent_path());
    io::write_text_file(p, content);
    note(name);
  }

  void note(const std::string& name) const { log_ << "wrote " << path(name).string() << '\n'; }

  void json_file(const std::string& name, const json& j) const { text(name, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
  std::ostream& log_;
};

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const std::string& flag) {
  std::vector<double> out;
  for (const auto& part : io::split(text, ',')) {
    const auto v = io::parse_number(part);
    require(v.has_value(), Errc::UsageError, flag + ": '" + part + "' is not a number");
    out.push_back(*v);
  }
  require(out.size() == expected, Errc::UsageError,
          flag + " expects " + std::to_string(expected) + " comma-separated values");
  return out;
}

std::size_t as_count(double v, const std::string& flag) {
  require(v >= 0.0 && v == std::floor(v), Errc::UsageError, flag + " expects non-negative integers");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> name_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : io::split(text, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

datacube::GridSpec parse_grid(const std::string& text) {
  const auto v = parse_numbers(text, 5, "--grid");
  return {v[0], v[1], v[2], v[3], v[4]};
}

std::vector<datacube::Location> query_locations(const std::string& grid, const std::string& query_csv) {
  require(grid.empty() != query_csv.empty(), Errc::UsageError, "exactly one of --grid and --query-csv is required");
  if (!grid.empty()) return datacube::regular_grid(parse_grid(grid));
  return datacube::load_table(query_csv, datacube::SourceTag::other).locations;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string kind;
  std::size_t n = 0;
};

void run_synth(const SynthArgs& a, const Globals& g, const Output& out) {
  if (a.kind == "ar-sin") {
    out.text("ar_sin.csv", arima::series_csv(synth::ar_sin(a.n ? a.n : 200, g.seed)));
  } else if (a.kind == "linear-map") {
    const auto m = synth::linear_map(a.n ? a.n : 60, g.seed);
    out.text("atlas.csv", synth::table_csv(m.atlas));
    out.text("stations.csv", synth::table_csv(m.stations));
    out.text("pvgis.csv", synth::table_csv(m.pvgis));
    out.text("plants.csv", synth::table_csv(m.plants));
    out.text("reference.csv", synth::table_csv(m.reference));
    out.json_file("grid.json", {{"grid",
                                 io::format_number(m.grid.lat_min) + "," + io::format_number(m.grid.lat_max) + "," +
                                     io::format_number(m.grid.lon_min) + "," + io::format_number(m.grid.lon_max) +
                                     "," + io::format_number(m.grid.step)}});
  } else if (a.kind == "outlier-line") {
    const auto line = synth::outlier_line(a.n ? a.n : 100, 0.3, g.seed);
    std::string csv = "x,y\n";
    for (std::size_t i = 0; i < line.x.size(); ++i)
      csv += io::format_number(line.x[i]) + "," + io::format_number(line.y[i]) + "\n";
    out.text("outlier_line.csv", csv);
  } else {
    const auto f = synth::variogram_field(a.n ? a.n : 20, g.seed);
    std::string samples = "lat,lon,value\n";
    for (const auto& s : f.samples)
      samples += io::format_number(s.location.lat) + "," + io::format_number(s.location.lon) + "," +
                 io::format_number(s.value) + "\n";
    out.text("samples.csv", samples);
    std::string lags = "lag,semivariance,pairs\n";
    for (const auto& p : f.lags)
      lags += io::format_number(p.lag) + "," + io::format_number(p.semivariance) + "," + std::to_string(p.pairs) + "\n";
    out.text("lags.csv", lags);
  }
}

// ---------------------------------------------------------------- cube

struct CubeArgs {
  std::string atlas, stations, pvgis, plants;
  std::string grid, query_csv;
  std::size_t k = 1;
  bool include_pvgis = false;
  std::string name = "cube";
};

void run_cube_build(const CubeArgs& a, const Output& out) {
  std::vector<datacube::Table> sources;
  if (!a.atlas.empty()) sources.push_back(datacube::load_table(a.atlas, datacube::SourceTag::atlas));
  if (!a.stations.empty()) sources.push_back(datacube::load_table(a.stations, datacube::SourceTag::stations));
  if (!a.pvgis.empty()) sources.push_back(datacube::load_table(a.pvgis, datacube::SourceTag::pvgis));
  if (!a.plants.empty()) sources.push_back(datacube::load_table(a.plants, datacube::SourceTag::plants));
  require(!sources.empty(), Errc::UsageError, "at least one of --atlas, --stations, --pvgis, --plants is required");
  const auto grid = query_locations(a.grid, a.query_csv);
  const auto cube = datacube::build_cube(sources, grid, {a.k, a.include_pvgis});
  out.text(a.name + ".csv", datacube::cube_csv(cube));
  out.text(a.name + ".json", datacube::cube_sidecar_json(cube));
}

// ---------------------------------------------------------------- krige

struct KrigeArgs {
  std::string samples;
  std::string value = "value";
  std::string grid, query_csv;
  std::size_t bins = 10;
  std::string metric = "haversine";
  bool heatmap = false;
  std::string name = "raster";
};

void run_krige(const KrigeArgs& a, const Globals& g, const Output& out) {
  const auto table = datacube::load_table(a.samples, datacube::SourceTag::other);
  const auto& values = table.column(a.value);
  std::vector<interpolation::Sample> samples;
  for (std::size_t i = 0; i < table.rows(); ++i) samples.push_back({table.locations[i], values[i]});
  const auto metric =
      a.metric == "planar" ? interpolation::DistanceMetric::planar_degrees : interpolation::DistanceMetric::haversine_km;
  const auto lags = interpolation::empirical_semivariogram(samples, a.bins, metric);
  interpolation::VariogramModel variogram;
  std::vector<std::string> warnings;
  if (lags.size() >= 3) {
    variogram = interpolation::fit_variogram(lags).model;
  } else {
    warnings.push_back("fewer than three lag bins; using a linear variogram");
    variogram = {0.0, 1.0, 1.0};
  }
  if (variogram.scale == 0.0 && variogram.nugget == 0.0) {
    warnings.push_back("flat variogram (constant field); using a linear variogram");
    variogram = {0.0, 1.0, 1.0};
  }
  const auto model = interpolation::make_kriging_model(samples, variogram, metric);
  const auto grid = query_locations(a.grid, a.query_csv);
  const auto raster = interpolation::krige_grid(model, grid, g.threads);
  out.text(a.name + ".csv", interpolation::raster_csv(raster));
  json lag_json = json::array();
  for (const auto& p : lags) lag_json.push_back({{"lag", p.lag}, {"semivariance", p.semivariance}, {"pairs", p.pairs}});
  out.json_file(a.name + "_variogram.json", {{"nugget", variogram.nugget},
                                             {"scale", variogram.scale},
                                             {"exponent", variogram.exponent},
                                             {"metric", a.metric},
                                             {"empirical", lag_json},
                                             {"warnings", warnings}});
  if (a.heatmap) {
    require(raster.n_rows > 0, Errc::UsageError, "--heatmap needs a regular grid");
    heatmap::write_png(out.path(a.name + ".png"), raster.prediction, raster.n_rows, raster.n_cols);
    out.note(a.name + ".png");
  }
}

// ---------------------------------------------------------------- ensemble

struct EnsembleArgs {
  std::string cube, target = "capacity_factor", features, pool;
  std::size_t pop = 20, gens = 8, folds = 5, elite = 1;
  double crossover = 0.8, mutation = 0.2;
  std::string model, name = "committee";
};

datacube::NormalizationParams sidecar_params(const std::string& cube_csv) {
  fs::path sidecar = cube_csv;
  sidecar.replace_extension(".json");
  require(fs::exists(sidecar), Errc::MissingColumn, "cube sidecar " + sidecar.string() + " not found");
  return datacube::load_cube(cube_csv, sidecar).norm;
}

Eigen::MatrixXd feature_matrix(const datacube::Table& t, const std::vector<std::string>& names) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto& col = t.column(names[j]);
    for (std::size_t i = 0; i < t.rows(); ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return x;
}

void run_ensemble_optimize(const EnsembleArgs& a, const Globals& g, const Output& out) {
  const auto table = datacube::load_table(a.cube, datacube::SourceTag::other);
  std::vector<std::string> features = name_list(a.features);
  if (features.empty())
    for (const auto& n : table.names)
      if (n != a.target) features.push_back(n);
  require(!features.empty(), Errc::UsageError, "no feature columns");
  const auto& target = table.column(a.target);
  const Eigen::MatrixXd x = feature_matrix(table, features);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));

  std::vector<regressors::Kind> pool;
  for (const auto& name : name_list(a.pool)) {
    const auto k = regressors::kind_from_string(name);
    require(k.has_value(), Errc::UsageError, "--pool: unknown regressor '" + name + "'");
    pool.push_back(*k);
  }
  if (pool.empty()) pool = regressors::all_kinds();

  evolution::GaConfig ga{a.pop, a.gens, a.crossover, a.mutation, a.elite, g.seed};
  ensemble::OptimizeOptions opt;
  opt.folds = a.folds;
  opt.threads = g.threads;
  const auto space = ensemble::committee_space(pool);
  opt.on_generation = [&](const evolution::GenerationRecord& r) {
    char name[64];
    std::snprintf(name, sizeof name, "checkpoints/ensemble_gen_%03zu.json", r.generation);
    out.json_file(name, evolution::checkpoint_json(space, r));
  };
  const auto result = ensemble::optimize_committee(pool, x, y, ga, opt);

  json model = ensemble::to_json(result.best);
  model["features"] = features;
  model["target"] = a.target;
  const auto norm = sidecar_params(a.cube);
  json ranges = json::array();
  for (const auto& n : features) {
    const auto& r = norm.range(n);
    ranges.push_back({{"name", r.name}, {"min", r.min}, {"max", r.max}});
  }
  const auto& tr = norm.range(a.target);
  model["feature_ranges"] = ranges;
  model["target_range"] = {{"min", tr.min}, {"max", tr.max}};
  out.json_file(a.name + ".json", model);

  json report = ensemble::comparison_json(result.default_scores, result.best_scores);
  report["default_mae"] = result.default_scores.mae;
  report["optimized_mae"] = result.best_scores.mae;
  report["history"] = result.history;
  report["failures"] = result.failures;
  report["committee"] = ensemble::committee_to_json(result.best.committee);
  report["rows"] = table.rows();
  report["folds"] = a.folds;
  out.json_file("ensemble_report.json", report);
  out.text("ensemble_report.txt", ensemble::comparison_table(result.default_scores, result.best_scores));
}

void run_ensemble_predict(const EnsembleArgs& a, const Output& out) {
  const json model = json::parse(io::read_text_file(a.model));
  const auto fitted = ensemble::from_json(model);
  std::vector<std::string> features;
  std::vector<datacube::ColumnRange> ranges;
  double tmin = 0.0, tmax = 1.0;
  try {
    features = model.at("features").get<std::vector<std::string>>();
    for (const auto& r : model.at("feature_ranges"))
      ranges.push_back({r.at("name").get<std::string>(), r.at("min").get<double>(), r.at("max").get<double>()});
    tmin = model.at("target_range").at("min").get<double>();
    tmax = model.at("target_range").at("max").get<double>();
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("malformed committee file: ") + e.what());
  }
  const datacube::NormalizationParams train{ranges};
  const auto cube_norm = sidecar_params(a.cube);
  auto table = datacube::load_table(a.cube, datacube::SourceTag::other);
  // bring the cube onto the training normalization
  for (const auto& name : features) {
    const auto idx = table.find(name);
    require(idx.has_value(), Errc::MissingVariable, name);
    for (auto& v : table.columns[*idx]) v = train.normalize(name, cube_norm.denormalize(name, v));
  }
  const auto pred = ensemble::vote_predict(fitted, feature_matrix(table, features));
  std::string csv = "lat,lon,prediction\n";
  for (std::size_t i = 0; i < table.rows(); ++i)
    csv += io::format_number(table.locations[i].lat) + "," + io::format_number(table.locations[i].lon) + "," +
           io::format_number(tmin + pred(static_cast<Eigen::Index>(i)) * (tmax - tmin)) + "\n";
  out.text(a.name + "_predictions.csv", csv);
}

// ---------------------------------------------------------------- covcor

struct CovcorArgs {
  std::string cube, target = "direct_normal", flip = "default", flip_mode = "both", variables;
  std::string weights, name = "estimate";
  bool heatmap = false;
  std::string estimate, reference, estimate_column = "value", reference_column = "value";
  bool no_rescale = false;
};

datacube::Table select_columns(const datacube::Table& t, const std::vector<std::string>& names) {
  if (names.empty()) return t;
  datacube::Table out;
  out.source = t.source;
  out.locations = t.locations;
  for (const auto& n : names) {
    const auto idx = t.find(n);
    require(idx.has_value(), Errc::UnknownVariable, n);
    out.add_column(n, t.columns[*idx]);
  }
  return out;
}

void run_covcor_weights(const CovcorArgs& a, const Output& out) {
  const auto table = select_columns(datacube::load_table(a.cube, datacube::SourceTag::other), name_list(a.variables));
  const auto m = covcor::cov_corr(table);
  std::vector<std::string> flip;
  if (a.flip == "default") flip = covcor::default_flip_set();
  else if (a.flip != "none") flip = name_list(a.flip);
  // flip entries absent from the cube are skipped with a warning
  std::vector<std::string> present, warnings = m.warnings;
  for (const auto& n : flip) {
    if (std::find(m.names.begin(), m.names.end(), n) != m.names.end()) present.push_back(n);
    else warnings.push_back("flip variable " + n + " is not in the cube");
  }
  const auto mode = a.flip_mode == "correlation-only" ? covcor::FlipMode::correlation_only : covcor::FlipMode::both;
  auto w = covcor::weights_to_json(covcor::build_weights(m, a.target, present, mode));
  w["flip_mode"] = a.flip_mode;
  w["warnings"] = warnings;
  out.json_file("weights.json", w);
  json k = json::array(), r = json::array();
  for (Eigen::Index i = 0; i < m.k.rows(); ++i) {
    std::vector<double> kr, rr;
    for (Eigen::Index j = 0; j < m.k.cols(); ++j) {
      kr.push_back(m.k(i, j));
      rr.push_back(m.r(i, j));
    }
    k.push_back(kr);
    r.push_back(rr);
  }
  out.json_file("matrices.json", {{"variables", m.names}, {"covariance", k}, {"correlation", r}});
}

void run_covcor_estimate(const CovcorArgs& a, const Output& out) {
  const auto w = covcor::weights_from_json(json::parse(io::read_text_file(a.weights)));
  const auto table = datacube::load_table(a.cube, datacube::SourceTag::other);
  const auto field = covcor::estimate(w, table);
  out.text(a.name + ".csv", covcor::field_csv(field));
  if (a.heatmap) {
    const auto shape = datacube::grid_shape(field.locations);
    require(shape.has_value(), Errc::UsageError, "--heatmap needs a cube on a regular grid");
    heatmap::write_png(out.path(a.name + ".png"), field.values, shape->first, shape->second);
    out.note(a.name + ".png");
  }
}

void run_covcor_evaluate(const CovcorArgs& a, const Output& out) {
  auto est = covcor::load_field_csv(a.estimate, a.estimate_column);
  auto ref = covcor::load_field_csv(a.reference, a.reference_column);
  if (!a.no_rescale) {
    est = covcor::rescale(est);
    ref = covcor::rescale(ref);
  }
  const auto e = covcor::evaluate_field(est, ref);
  out.json_file(a.name + "_evaluation.json", {{"estimate", a.estimate},
                                              {"estimate_column", a.estimate_column},
                                              {"reference", a.reference},
                                              {"reference_column", a.reference_column},
                                              {"rescaled", !a.no_rescale},
                                              {"rows", est.values.size()},
                                              {"mse", e.mse},
                                              {"mae", e.mae}});
}

// ---------------------------------------------------------------- forecast

struct ForecastArgs {
  std::string series, order = "1,0,0", seasonal, exog = "all";
  std::size_t diff = 0;
  std::size_t pop = 10, gens = 3, elite = 1;
  double crossover = 0.8, mutation = 0.2;
  std::string fitness = "test", eval = "one-step";
  std::size_t lag_max = 20, hidden_max = 128, max_epochs = 200;
  std::string model, exog_future, name = "hybrid_model";
  std::size_t horizon = 0;
};

std::string next_date(const std::string& date, std::size_t days_ahead) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  require(std::sscanf(date.c_str(), "%d-%u-%u", &y, &m, &d) == 3, Errc::InvalidArgument, "bad date " + date);
  const year_month_day next{sys_days{year{y} / month{m} / day{d}} + days{static_cast<int>(days_ahead)}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(next.year()), static_cast<unsigned>(next.month()),
                static_cast<unsigned>(next.day()));
  return buf;
}

void run_forecast_fit(const ForecastArgs& a, const Globals& g, const Output& out) {
  const auto table = arima::load_series_csv(a.series);
  std::vector<std::string> exog_names;
  if (a.exog == "all") exog_names = table.exog_names;
  else if (a.exog != "none") exog_names = name_list(a.exog);

  hybrid::HybridModel scaled_meta;
  scaled_meta.scale = hybrid::UnitScale::fit(table.generation);
  std::vector<double> y;
  for (double v : table.generation) y.push_back(scaled_meta.scale.apply(v));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(exog_names.size()));
  for (std::size_t j = 0; j < exog_names.size(); ++j) {
    const auto it = std::find(table.exog_names.begin(), table.exog_names.end(), exog_names[j]);
    require(it != table.exog_names.end(), Errc::MissingColumn, exog_names[j]);
    const Eigen::VectorXd col = table.exog.col(it - table.exog_names.begin());
    const auto s = hybrid::UnitScale::fit(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    scaled_meta.exog_scale.push_back(s);
    for (Eigen::Index i = 0; i < col.size(); ++i) x(i, static_cast<Eigen::Index>(j)) = s.apply(col(i));
  }
  const Eigen::MatrixXd* ex = exog_names.empty() ? nullptr : &x;

  std::optional<arima::SeasonalOrder> seasonal;
  if (!a.seasonal.empty()) {
    const auto v = parse_numbers(a.seasonal, 4, "--seasonal");
    seasonal = arima::SeasonalOrder{as_count(v[0], "--seasonal"), as_count(v[1], "--seasonal"),
                                    as_count(v[2], "--seasonal"), as_count(v[3], "--seasonal")};
  }
  hybrid::HybridConfig base;
  base.exog_columns = exog_names;
  if (a.order == "auto") {
    const std::size_t split = y.size() * 4 / 5;
    const Eigen::MatrixXd train = x.topRows(static_cast<Eigen::Index>(split));
    base.arima_order = arima::select_order(std::span<const double>(y).first(split), a.diff, seasonal,
                                           ex ? &train : nullptr);
  } else {
    const auto v = parse_numbers(a.order, 3, "--order");
    base.arima_order = {as_count(v[0], "--order"), as_count(v[1], "--order"), as_count(v[2], "--order"), seasonal};
  }

  evolution::GaConfig ga{a.pop, a.gens, a.crossover, a.mutation, a.elite, g.seed};
  hybrid::SearchOptions opt;
  opt.lag_max = a.lag_max;
  opt.hidden_max = a.hidden_max;
  opt.max_epochs = a.max_epochs;
  opt.fitness = a.fitness == "validation" ? hybrid::FitnessMode::validation : hybrid::FitnessMode::test;
  opt.eval = a.eval == "multi-step" ? hybrid::EvalMode::multi_step : hybrid::EvalMode::one_step;
  opt.threads = g.threads;
  const auto space = hybrid::search_space(opt);
  auto with_meta = [&](hybrid::HybridModel m) {
    m.scale = scaled_meta.scale;
    m.exog_scale = scaled_meta.exog_scale;
    json j = hybrid::to_json(m);
    j["last_date"] = table.dates.back();
    return j;
  };
  opt.on_generation = [&](const evolution::GenerationRecord& r) {
    json cp = evolution::checkpoint_json(space, r);
    if (std::isfinite(r.best.fitness)) {
      hybrid::HybridConfig shaped = base;
      shaped.error_mlp.max_epochs = opt.max_epochs;
      shaped.assoc_mlp.max_epochs = opt.max_epochs;
      cp["best_model"] = with_meta(hybrid::fit_hybrid(hybrid::decode(space, r.best.genome, shaped, g.seed), y, ex));
    }
    char name[64];
    std::snprintf(name, sizeof name, "checkpoints/forecast_gen_%03zu.json", r.generation);
    out.json_file(name, cp);
  };
  const auto result = hybrid::search_hybrid(y, ex, base, ga, opt);

  out.json_file(a.name + ".json", with_meta(result.best));
  json report = hybrid::comparison_json(result.comparison);
  report["mae_reduction_percent"] = ensemble::percent_reduction(result.comparison.arima.mae, result.comparison.hybrid.mae);
  report["arima_order"] = arima::order_to_json(base.arima_order);
  report["best_genome"] = evolution::genome_json(space, result.ga.best.genome);
  report["history"] = result.ga.history;
  report["failures"] = result.ga.failures;
  report["split"] = result.best.split;
  report["test_points"] = y.size() - result.best.split;
  report["fitness"] = a.fitness;
  report["evaluation"] = a.eval;
  report["exog_columns"] = exog_names;
  out.json_file("forecast_report.json", report);
  out.text("forecast_report.txt", hybrid::comparison_table(result.comparison));
}

void run_forecast_predict(const ForecastArgs& a, const Output& out) {
  const json doc = json::parse(io::read_text_file(a.model));
  const auto model = hybrid::from_json(doc);
  require(a.horizon >= 1, Errc::UsageError, "--horizon must be at least 1");
  const auto& names = model.config.exog_columns;
  std::vector<std::string> dates;
  Eigen::MatrixXd future;
  if (!a.exog_future.empty()) {
    const auto csv = io::read_csv_file(a.exog_future);
    require(csv.rows.size() >= a.horizon, Errc::MissingExog,
            "future exogenous file has " + std::to_string(csv.rows.size()) + " rows, horizon is " +
                std::to_string(a.horizon));
    const auto date_col = csv.column("date");
    future.resize(static_cast<Eigen::Index>(a.horizon), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto col = csv.column(names[j]);
      require(col.has_value(), Errc::MissingExog, names[j]);
      for (std::size_t i = 0; i < a.horizon; ++i) {
        const auto v = io::parse_number(csv.rows[i][*col]);
        require(v.has_value(), Errc::NonNumericCell, "(" + std::to_string(i + 1) + ", " + names[j] + ")");
        future(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = model.exog_scale.at(j).apply(*v);
      }
    }
    if (date_col)
      for (std::size_t i = 0; i < a.horizon; ++i) dates.push_back(csv.rows[i][*date_col]);
  } else {
    require(names.empty(), Errc::MissingExog, "model uses exogenous columns; pass --exog-future");
  }
  if (dates.empty()) {
    const std::string last = doc.value("last_date", std::string("1970-01-01"));
    for (std::size_t h = 1; h <= a.horizon; ++h) dates.push_back(next_date(last, h));
  }
  const auto pred = hybrid::predict_hybrid(model, a.horizon, names.empty() ? nullptr : &future);
  std::string csv = "date,prediction\n";
  for (std::size_t h = 0; h < pred.size(); ++h) csv += dates[h] + "," + io::format_number(model.scale.invert(pred[h])) + "\n";
  out.text("forecast.csv", csv);
}

std::string default_output_dir() {
  const char* env = std::getenv("PVCAST_OUTPUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Globals g;
  g.output_dir = default_output_dir();
  CLI::App app{"pvcast: photovoltaic production estimation toolkit", "pvcast"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Seed for every stochastic step")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory for every output file (default $PVCAST_OUTPUT_DIR or .)");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write synthetic fixtures");
  synth->add_option("--kind", synth_args.kind, "Fixture kind")
      ->required()
      ->check(CLI::IsMember({"ar-sin", "linear-map", "outlier-line", "variogram-field"}));
  synth->add_option("--n", synth_args.n, "Size: series length, plant count, points or samples (0 = kind default)");

  CubeArgs cube_args;
  auto* cube = app.add_subcommand("cube", "Data cube commands");
  cube->require_subcommand(1);
  auto* cube_build = cube->add_subcommand("build", "Fuse source tables into a normalized cube");
  cube_build->add_option("--atlas", cube_args.atlas, "Atlas CSV")->check(CLI::ExistingFile);
  cube_build->add_option("--stations", cube_args.stations, "Station CSV")->check(CLI::ExistingFile);
  cube_build->add_option("--pvgis", cube_args.pvgis, "PVGIS CSV")->check(CLI::ExistingFile);
  cube_build->add_option("--plants", cube_args.plants, "Plant CSV")->check(CLI::ExistingFile);
  cube_build->add_option("--grid", cube_args.grid, "Query grid lat_min,lat_max,lon_min,lon_max,step");
  cube_build->add_option("--query-csv", cube_args.query_csv, "CSV whose lat,lon rows are the query points")
      ->check(CLI::ExistingFile);
  cube_build->add_option("--k", cube_args.k, "Nearest neighbours averaged per source")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cube_build->add_flag("--include-pvgis", cube_args.include_pvgis, "Join PVGIS as a feature instead of keeping it for evaluation");
  cube_build->add_option("--name", cube_args.name, "Output stem (<name>.csv, <name>.json)")->capture_default_str();

  KrigeArgs krige_args;
  auto* krige = app.add_subcommand("krige", "Ordinary kriging with a fitted power variogram");
  krige->add_option("--samples", krige_args.samples, "CSV with lat,lon and a value column")->required()->check(CLI::ExistingFile);
  krige->add_option("--value", krige_args.value, "Value column")->capture_default_str();
  krige->add_option("--grid", krige_args.grid, "Target grid lat_min,lat_max,lon_min,lon_max,step");
  krige->add_option("--query-csv", krige_args.query_csv, "CSV whose lat,lon rows are the targets")->check(CLI::ExistingFile);
  krige->add_option("--bins", krige_args.bins, "Semivariogram distance bins")->check(CLI::PositiveNumber)->capture_default_str();
  krige->add_option("--metric", krige_args.metric, "Distance metric")
      ->check(CLI::IsMember({"haversine", "planar"}))
      ->capture_default_str();
  krige->add_flag("--heatmap", krige_args.heatmap, "Also write <name>.png");
  krige->add_option("--name", krige_args.name, "Output stem")->capture_default_str();

  EnsembleArgs ens_args;
  auto* ens = app.add_subcommand("ensemble", "Voting-regressor committee");
  ens->require_subcommand(1);
  auto* ens_opt = ens->add_subcommand("optimize", "Genetic search over committee members and hyperparameters");
  ens_opt->add_option("--cube", ens_args.cube, "Cube CSV (sidecar JSON next to it)")->required()->check(CLI::ExistingFile);
  ens_opt->add_option("--target", ens_args.target, "Target column")->capture_default_str();
  ens_opt->add_option("--features", ens_args.features, "Comma-separated feature columns (default: all but target)");
  ens_opt->add_option("--pool", ens_args.pool, "Comma-separated regressor kinds (default: all)");
  ens_opt->add_option("--pop", ens_args.pop, "Population size")->capture_default_str();
  ens_opt->add_option("--gens", ens_args.gens, "Generations")->capture_default_str();
  ens_opt->add_option("--folds", ens_args.folds, "Cross-validation folds")->capture_default_str();
  ens_opt->add_option("--crossover", ens_args.crossover, "Crossover rate")->capture_default_str();
  ens_opt->add_option("--mutation", ens_args.mutation, "Mutation rate")->capture_default_str();
  ens_opt->add_option("--elite", ens_args.elite, "Elite count")->capture_default_str();
  ens_opt->add_option("--name", ens_args.name, "Model file stem")->capture_default_str();
  auto* ens_pred = ens->add_subcommand("predict", "Apply a fitted committee to a cube");
  ens_pred->add_option("--model", ens_args.model, "Committee JSON")->required()->check(CLI::ExistingFile);
  ens_pred->add_option("--cube", ens_args.cube, "Cube CSV (sidecar JSON next to it)")->required()->check(CLI::ExistingFile);
  ens_pred->add_option("--name", ens_args.name, "Output stem")->capture_default_str();

  CovcorArgs cc_args;
  auto* cc = app.add_subcommand("covcor", "Covariance/correlation metric");
  cc->require_subcommand(1);
  auto* cc_w = cc->add_subcommand("weights", "Weights from the cube's covariance and correlation");
  cc_w->add_option("--cube", cc_args.cube, "Cube CSV")->required()->check(CLI::ExistingFile);
  cc_w->add_option("--target", cc_args.target, "Target variable row")->capture_default_str();
  cc_w->add_option("--variables", cc_args.variables, "Comma-separated variables (default: all cube columns)");
  cc_w->add_option("--flip", cc_args.flip, "Variables whose positive weights are negated: default, none or a list")
      ->capture_default_str();
  cc_w->add_option("--flip-mode", cc_args.flip_mode, "Which weights the flip applies to")
      ->check(CLI::IsMember({"both", "correlation-only"}))
      ->capture_default_str();
  auto* cc_e = cc->add_subcommand("estimate", "Evaluate the metric on every cube row");
  cc_e->add_option("--weights", cc_args.weights, "Weights JSON")->required()->check(CLI::ExistingFile);
  cc_e->add_option("--cube", cc_args.cube, "Cube CSV")->required()->check(CLI::ExistingFile);
  cc_e->add_flag("--heatmap", cc_args.heatmap, "Also write <name>.png");
  cc_e->add_option("--name", cc_args.name, "Output stem")->capture_default_str();
  auto* cc_v = cc->add_subcommand("evaluate", "MSE and MAE of a field against a reference");
  cc_v->add_option("--estimate", cc_args.estimate, "Estimate CSV")->required()->check(CLI::ExistingFile);
  cc_v->add_option("--reference", cc_args.reference, "Reference CSV")->required()->check(CLI::ExistingFile);
  cc_v->add_option("--estimate-column", cc_args.estimate_column, "Estimate value column")->capture_default_str();
  cc_v->add_option("--reference-column", cc_args.reference_column, "Reference value column")->capture_default_str();
  cc_v->add_flag("--no-rescale", cc_args.no_rescale, "Compare raw values instead of min-max rescaled ones");
  cc_v->add_option("--name", cc_args.name, "Output stem")->capture_default_str();

  ForecastArgs fc_args;
  auto* fc = app.add_subcommand("forecast", "Hybrid ARIMA + MLP forecaster");
  fc->require_subcommand(1);
  auto* fc_fit = fc->add_subcommand("fit", "Genetic search of the hybrid forecaster");
  fc_fit->add_option("--series", fc_args.series, "Series CSV: date, generation, exogenous columns")
      ->required()
      ->check(CLI::ExistingFile);
  fc_fit->add_option("--order", fc_args.order, "ARIMA p,d,q or auto")->capture_default_str();
  fc_fit->add_option("--diff", fc_args.diff, "Differencing order used by --order auto")->capture_default_str();
  fc_fit->add_option("--seasonal", fc_args.seasonal, "Seasonal P,D,Q,s");
  fc_fit->add_option("--exog", fc_args.exog, "Exogenous columns: all, none or a list")->capture_default_str();
  fc_fit->add_option("--pop", fc_args.pop, "Population size")->capture_default_str();
  fc_fit->add_option("--gens", fc_args.gens, "Generations")->capture_default_str();
  fc_fit->add_option("--crossover", fc_args.crossover, "Crossover rate")->capture_default_str();
  fc_fit->add_option("--mutation", fc_args.mutation, "Mutation rate")->capture_default_str();
  fc_fit->add_option("--elite", fc_args.elite, "Elite count")->capture_default_str();
  fc_fit->add_option("--fitness", fc_args.fitness, "Search fitness span")
      ->check(CLI::IsMember({"test", "validation"}))
      ->capture_default_str();
  fc_fit->add_option("--eval", fc_args.eval, "Test-span forecasting")
      ->check(CLI::IsMember({"one-step", "multi-step"}))
      ->capture_default_str();
  fc_fit->add_option("--lag-max", fc_args.lag_max, "Upper bound of the four lag genes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fc_fit->add_option("--hidden-max", fc_args.hidden_max, "Upper bound of hidden layer sizes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fc_fit->add_option("--max-epochs", fc_args.max_epochs, "Training epochs / iterations per MLP")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fc_fit->add_option("--name", fc_args.name, "Model file stem")->capture_default_str();
  auto* fc_pred = fc->add_subcommand("predict", "Forecast beyond the end of the model's series");
  fc_pred->add_option("--model", fc_args.model, "Hybrid model JSON")->required()->check(CLI::ExistingFile);
  fc_pred->add_option("--horizon", fc_args.horizon, "Steps ahead")->required()->check(CLI::PositiveNumber);
  fc_pred->add_option("--exog-future", fc_args.exog_future, "CSV with date and the model's exogenous columns")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "UsageError: " << e.what() << '\n';
    return 1;
  }

  try {
    fs::create_directories(g.output_dir);
    const Output output(g, out);
    if (synth->parsed()) run_synth(synth_args, g, output);
    else if (cube_build->parsed()) run_cube_build(cube_args, output);
    else if (krige->parsed()) run_krige(krige_args, g, output);
    else if (ens_opt->parsed()) run_ensemble_optimize(ens_args, g, output);
    else if (ens_pred->parsed()) run_ensemble_predict(ens_args, output);
    else if (cc_w->parsed()) run_covcor_weights(cc_args, output);
    else if (cc_e->parsed()) run_covcor_estimate(cc_args, output);
    else if (cc_v->parsed()) run_covcor_evaluate(cc_args, output);
    else if (fc_fit->parsed()) run_forecast_fit(fc_args, g, output);
    else if (fc_pred->parsed()) run_forecast_predict(fc_args, output);
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const json::exception& e) {
    err << "InvalidArgument: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"pvcast"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pvcast::cli
