#include "pvcast/covcor.hpp"

#include <cmath>

#include "oracles.hpp"
#include "pvcast/io.hpp"
#include "pvcast/random.hpp"
#include "test_support.hpp"

using namespace pvcast;
using namespace pvcast::covcor;
using datacube::Table;

namespace {

Table make_table(const std::vector<std::string>& names, const std::vector<std::vector<double>>& rows) {
  Table t;
  for (std::size_t i = 0; i < rows.size(); ++i) t.locations.push_back({-8.0 - 0.1 * static_cast<double>(i), -35.0, {}});
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> col;
    for (const auto& r : rows) col.push_back(r[j]);
    t.add_column(names[j], col);
  }
  return t;
}

Table random_table(const std::vector<std::string>& names, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(names.size()));
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform();
  return make_table(names, rows);
}

Weights manual(std::vector<double> a, std::vector<double> b) {
  Weights w;
  for (std::size_t i = 0; i < a.size(); ++i) w.names.push_back("v" + std::to_string(i));
  w.a = std::move(a);
  w.b = std::move(b);
  w.target = "v0";
  return w;
}

FieldErrors compare(std::vector<double> e, std::vector<double> r) {
  return evaluate_field(EstimateField{{}, std::move(e)}, EstimateField{{}, std::move(r)});
}

}  // namespace

TEST_CASE("covariance and correlation examples") {
  const auto same = cov_corr(make_table({"x", "y"}, {{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}}));
  CHECK(same.r(0, 1) == doctest::Approx(1.0).epsilon(1e-15));

  const auto mirror = cov_corr(make_table({"x", "y"}, {{0.1, 0.9}, {0.4, 0.6}, {0.8, 0.2}}));
  CHECK(mirror.r(0, 1) == doctest::Approx(-1.0).epsilon(1e-15));

  // hand formula: means (0.5, 1/3); deviations (-0.5, 0, 0.5) and (-1/3, 2/3, -1/3)
  const auto hand = cov_corr(make_table({"x", "y"}, {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}}));
  CHECK(std::abs(hand.k(0, 1)) < 1e-15);
  CHECK(std::abs(hand.r(0, 1)) < 1e-15);
  CHECK(hand.k(0, 0) == doctest::Approx(0.25));  // (0.25 + 0 + 0.25) / 2
  CHECK(hand.r(0, 0) == 1.0);

  const auto constant = cov_corr(make_table({"x", "c"}, {{0.0, 0.5}, {1.0, 0.5}, {0.3, 0.5}}));
  CHECK(constant.r(1, 1) == 0.0);
  CHECK(constant.r(0, 1) == 0.0);
  CHECK(constant.warnings.size() == 1);

  CHECK_ERRC(cov_corr(make_table({"x"}, {{0.2}})), Errc::TooFewRows);
}

TEST_CASE("weights take the target rows and apply the flip rule") {
  const std::vector<std::string> names{"direct_normal", "avg_rel_humidity", "avg_wind_speed"};
  Rng rng(3);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 30; ++i) {
    const double dni = rng.uniform();
    rows.push_back({dni, std::clamp(0.8 * dni + 0.2 * rng.uniform(), 0.0, 1.0), rng.uniform()});
  }
  const auto m = cov_corr(make_table(names, rows));
  const std::vector<std::string> none;
  const auto raw = build_weights(m, "direct_normal", none);
  CHECK(raw.a[0] == m.k(0, 0));
  CHECK(raw.b[0] == 1.0);
  REQUIRE(raw.b[1] > 0.0);
  CHECK(raw.flipped.empty());

  const std::vector<std::string> humidity{"avg_rel_humidity"};
  const auto flipped = build_weights(m, "direct_normal", humidity);
  CHECK(flipped.b[1] == -raw.b[1]);
  CHECK(flipped.a[1] == -raw.a[1]);
  CHECK(flipped.b[2] == raw.b[2]);
  CHECK(flipped.flipped == humidity);

  const auto corr_only = build_weights(m, "direct_normal", humidity, FlipMode::correlation_only);
  CHECK(corr_only.b[1] == -raw.b[1]);
  CHECK(corr_only.a[1] == raw.a[1]);

  // flipping is idempotent: already-negative entries stay negative
  const std::vector<std::string> twice{"avg_rel_humidity", "avg_rel_humidity"};
  const auto again = build_weights(m, "direct_normal", twice);
  CHECK(again.a == flipped.a);
  CHECK(again.b == flipped.b);
  CHECK(build_weights(m, "direct_normal", humidity).b == flipped.b);

  const std::vector<std::string> absent{"avg_max_temp"};
  CHECK_ERRC(build_weights(m, "direct_normal", absent), Errc::UnknownVariable);
  CHECK_ERRC(build_weights(m, "tilted", none), Errc::UnknownVariable);

  const auto restored = weights_from_json(nlohmann::json::parse(weights_to_json(flipped).dump()));
  CHECK(restored.a == flipped.a);
  CHECK(restored.flipped == flipped.flipped);
}

TEST_CASE("estimate arithmetic") {
  const double one[] = {1.0};
  CHECK(estimate_row(manual({0.5}, {0.2}), one) == doctest::Approx(0.7).epsilon(1e-15));
  const double zeros[] = {0.0, 0.0};
  CHECK(estimate_row(manual({0.3, -0.2}, {0.9, 0.4}), zeros) == 0.0);
  const double pair[] = {0.5, 0.25};
  CHECK(estimate_row(manual({1.0, 0.0}, {0.0, 1.0}), pair) == 0.5);

  auto w = manual({0.5, 0.1}, {0.2, -0.3});
  const auto table = make_table({"v0", "v1"}, {{0.2, 0.4}, {1.0, 0.0}});
  const auto field = estimate(w, table);
  REQUIRE(field.values.size() == 2);
  CHECK(field.values[1] == doctest::Approx(0.7));
  CHECK(field.locations[0] == table.locations[0]);

  w.names[1] = "missing";
  CHECK_ERRC(estimate(w, table), Errc::MissingVariable);
  CHECK_ERRC(estimate(manual({1.0}, {1.0}), make_table({"v0"}, {{1.5}})), Errc::InvalidArgument);
}

TEST_CASE("estimate matches a brute-force evaluation on random rows") {
  const std::vector<std::string> names{"direct_normal", "global_horizontal", "diffuse", "avg_rel_humidity",
                                       "avg_max_temp", "total_precipitation", "avg_wind_speed"};
  const auto table = random_table(names, 100, 17);
  const auto w = build_weights(cov_corr(table), "direct_normal", default_flip_set());
  const auto field = estimate(w, table);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    std::vector<double> x;
    for (const auto& col : table.columns) x.push_back(col[i]);
    CHECK(std::abs(field.values[i] - oracles::quadratic_linear_form(w.a, w.b, x)) < 1e-12);
  }
}

TEST_CASE("partial derivatives follow 2 a x + b") {
  const auto w = manual({0.4, 0.02, 0.3}, {1.0, -0.5, 0.25});
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    const auto numeric = oracles::central_difference([&](const std::vector<double>& p) { return estimate_row(w, p); }, x, 1e-6);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(numeric[i] - (2.0 * w.a[i] * x[i] + w.b[i])) < 1e-6);
  }
}

TEST_CASE("identical columns give unit correlation weights") {
  Rng rng(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i) {
    const double v = rng.uniform();
    rows.push_back({v, v, v});
  }
  const auto table = make_table({"direct_normal", "p", "q"}, rows);
  const std::vector<std::string> none;
  const auto w = build_weights(cov_corr(table), "direct_normal", none);
  for (double b : w.b) CHECK(b == doctest::Approx(1.0).epsilon(1e-14));
  const auto field = estimate(w, table);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double x = rows[i][0];
    const double expected = (w.a[0] + w.a[1] + w.a[2]) * x * x + (w.b[0] + w.b[1] + w.b[2]) * x;
    CHECK(field.values[i] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("field evaluation") {
  const auto same = compare({0.1, 0.7}, {0.1, 0.7});
  CHECK(same.mse == 0.0);
  CHECK(same.mae == 0.0);
  const auto opposite = compare({0.0, 1.0}, {1.0, 0.0});
  CHECK(opposite.mse == 1.0);
  CHECK(opposite.mae == 1.0);
  const auto half = compare({0.0, 0.5}, {0.0, 1.0});
  CHECK(half.mse == 0.125);
  CHECK(half.mae == 0.25);
  CHECK_ERRC(compare({0.0}, {0.0, 1.0}), Errc::RowMismatch);

  const auto scaled = rescale(EstimateField{{}, {2.0, 4.0, 3.0}});
  CHECK(scaled.values == std::vector<double>{0.0, 1.0, 0.5});
  CHECK(rescale(EstimateField{{}, {3.0, 3.0}}).values == std::vector<double>{0.0, 0.0});

  EstimateField a{{{-8.0, -35.0, {}}}, {0.5}}, b{{{-8.1, -35.0, {}}}, {0.5}};
  CHECK_ERRC(evaluate_field(a, b), Errc::RowMismatch);
}

TEST_CASE("estimate fields round-trip through csv") {
  testing::TempDir dir("covcor");
  EstimateField f{{{-8.25, -35.5, {}}, {-9.0, -36.0, {}}}, {0.125, 1.0 / 3.0}};
  io::write_text_file(dir.path() / "f.csv", field_csv(f));
  const auto back = load_field_csv(dir.path() / "f.csv", "value");
  CHECK(back.values == f.values);
  CHECK(back.locations == f.locations);
}
