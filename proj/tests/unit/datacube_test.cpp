#include "pvcast/datacube.hpp"

#include <algorithm>
#include <sstream>

#include "pvcast/io.hpp"
#include "pvcast/random.hpp"
#include "test_support.hpp"

using namespace pvcast;
using namespace pvcast::datacube;

namespace {

Table from_csv(const std::string& text, SourceTag tag) {
  std::istringstream in(text);
  return parse_table(in, tag);
}

Table single_column(std::vector<double> values, std::string name = "v") {
  Table t;
  for (std::size_t i = 0; i < values.size(); ++i) t.locations.push_back({0.0, static_cast<double>(i), std::nullopt});
  t.add_column(std::move(name), std::move(values));
  return t;
}

Table point_table(std::vector<std::pair<Location, double>> rows, std::string name = "v") {
  Table t;
  std::vector<double> values;
  for (auto& [loc, v] : rows) {
    t.locations.push_back(loc);
    values.push_back(v);
  }
  t.add_column(std::move(name), std::move(values));
  return t;
}

Table random_source(SourceTag tag, std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  Table t;
  t.source = tag;
  for (std::size_t r = 0; r < rows; ++r) t.locations.push_back({rng.uniform(-10, -5), rng.uniform(-40, -35), std::nullopt});
  for (const auto& name : catalog::columns_for(tag)) {
    std::vector<double> col(rows);
    for (auto& v : col) v = rng.uniform(0.0, 300.0);
    t.add_column(name, std::move(col));
  }
  return t;
}

}  // namespace

TEST_CASE("load_table parses a plants file") {
  const auto t = from_csv("lat,lon,capacity_factor\n-8.0,-35.0,0.22\n", SourceTag::plants);
  REQUIRE(t.rows() == 1);
  CHECK(t.locations[0].lat == -8.0);
  CHECK(t.locations[0].lon == -35.0);
  CHECK(t.column("capacity_factor")[0] == 0.22);
}

TEST_CASE("load_table contract errors") {
  CHECK_ERRC(from_csv("lat,capacity_factor\n-8.0,0.22\n", SourceTag::plants), Errc::MissingColumn);
  try {
    from_csv("lat,lon,capacity_factor\n-8.0,-35.0,abc\n", SourceTag::plants);
    FAIL("expected NonNumericCell");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonNumericCell);
    CHECK(e.detail() == "(1, capacity_factor)");
  }
  CHECK_ERRC(from_csv("lat,lon,capacity_factor\n", SourceTag::plants), Errc::EmptyTable);
  CHECK_ERRC(from_csv("lat,lon,capacity_factor\n-8.0,-35.0,\n", SourceTag::plants), Errc::NonNumericCell);
  CHECK_ERRC(from_csv("lat,lon,capacity_factor\n95,-35.0,0.1\n", SourceTag::plants), Errc::InvalidLocation);
  // stations require altitude
  CHECK_ERRC(from_csv("lat,lon,total_solar_irradiance\n1,1,1\n", SourceTag::stations), Errc::MissingColumn);
}

TEST_CASE("load_table keeps file order and stations altitude") {
  std::string header = "lat,lon,alt";
  std::string row1 = "-7,-36,512", row2 = "-9,-38,10";
  for (const auto& c : catalog::station_columns()) {
    header += "," + c;
    row1 += ",1";
    row2 += ",2";
  }
  const auto t = from_csv(header + "\n" + row1 + "\n" + row2 + "\n", SourceTag::stations);
  REQUIRE(t.rows() == 2);
  CHECK(t.cols() == 12);
  CHECK(t.locations[0].alt == 512.0);
  CHECK(t.locations[1].lat == -9.0);
  CHECK(t.column("evaporation")[1] == 2.0);
}

TEST_CASE("normalize min-max mapping") {
  auto n = normalize(single_column({1, 3, 5}));
  CHECK(n.table.columns[0] == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(n.warnings.empty());

  n = normalize(single_column({7, 7, 7}));
  CHECK(n.table.columns[0] == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(n.warnings.size() == 1);

  n = normalize(single_column({0, 1}));
  CHECK(n.table.columns[0] == std::vector<double>{0.0, 1.0});
  CHECK(n.params.range("v").min == 0.0);
  CHECK(n.params.range("v").max == 1.0);

  CHECK_ERRC(normalize(Table{}), Errc::EmptyTable);
}

TEST_CASE("normalization round-trip property") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> col(2 + rng.index(30));
    for (auto& v : col) v = rng.uniform(-1e3, 1e3);
    const auto table = single_column(col);
    const auto n = normalize(table);
    const auto back = denormalize(n.table, n.params);
    for (std::size_t i = 0; i < col.size(); ++i) {
      CHECK(n.table.columns[0][i] >= 0.0);
      CHECK(n.table.columns[0][i] <= 1.0);
      CHECK(back.columns[0][i] == doctest::Approx(col[i]).epsilon(1e-12));
      CHECK(std::abs(back.columns[0][i] - col[i]) <= 1e-12 * std::max(1.0, std::abs(col[i])) * 1e3);
    }
  }
}

TEST_CASE("knn_join examples") {
  const auto base = point_table({{{0, 0}, 0.0}}, "base");
  SUBCASE("single neighbor") {
    const auto out = knn_join(base, point_table({{{5, 5}, 10.0}}), 1);
    CHECK(out.column("v")[0] == 10.0);
    CHECK(out.column("base")[0] == 0.0);
  }
  SUBCASE("symmetric mean") {
    const auto other = point_table({{{0, 1}, 2.0}, {{0, -1}, 4.0}});
    CHECK(knn_join(base, other, 2).column("v")[0] == 3.0);
  }
  SUBCASE("k not satisfiable") {
    const auto other = point_table({{{0, 1}, 2.0}, {{0, -1}, 4.0}});
    CHECK_ERRC(knn_join(base, other, 3), Errc::KNotSatisfiable);
    CHECK_ERRC(knn_join(base, other, 0), Errc::KNotSatisfiable);
  }
  SUBCASE("distance tie broken by lat, lon, then input order") {
    // (0,1) and (0,-1) are equidistant from the origin; (0,-1) has smaller lon.
    const auto other = point_table({{{0, 1}, 2.0}, {{0, -1}, 4.0}});
    CHECK(knn_join(base, other, 1).column("v")[0] == 4.0);
    const auto dup = point_table({{{0, 1}, 7.0}, {{0, 1}, 9.0}});
    CHECK(knn_join(base, dup, 1).column("v")[0] == 7.0);
  }
}

TEST_CASE("knn_join with coinciding location returns that row exactly") {
  Rng rng(3);
  std::vector<std::pair<Location, double>> rows;
  for (int i = 0; i < 25; ++i) rows.push_back({{rng.uniform(-20, 0), rng.uniform(-45, -30)}, rng.uniform(0, 100)});
  const auto other = point_table(rows);
  for (const auto& [loc, v] : rows) {
    const auto out = knn_join(point_table({{loc, 0.0}}, "base"), other, 1);
    CHECK(out.column("v")[0] == v);
  }
}

TEST_CASE("haversine distance") {
  CHECK(haversine_km({0, 0}, {0, 0}) == 0.0);
  // one degree of arc on the mean sphere
  CHECK(haversine_km({0, 0}, {0, 1}) == doctest::Approx(kEarthRadiusKm * std::numbers::pi / 180.0).epsilon(1e-12));
  CHECK(haversine_km({-8, -35}, {-9, -36}) == doctest::Approx(haversine_km({-9, -36}, {-8, -35})));
}

TEST_CASE("build_cube joins atlas and stations") {
  const Table sources[] = {random_source(SourceTag::atlas, 4, 1), random_source(SourceTag::stations, 6, 2)};
  const Location grid[] = {{-7.5, -37.0}};
  const auto cube = build_cube(sources, grid, {});
  CHECK(cube.table.rows() == 1);
  CHECK(cube.table.cols() == 5 + 12);
  CHECK(cube.provenance.size() == 17);
  CHECK(cube.provenance.front() == SourceTag::atlas);
  CHECK(cube.provenance.back() == SourceTag::stations);
}

TEST_CASE("build_cube values are normalized and one row per query point") {
  const Table sources[] = {random_source(SourceTag::atlas, 10, 5), random_source(SourceTag::stations, 8, 6)};
  const Location grid[] = {{-6.0, -36.0}, {-8.0, -38.0}, {-9.5, -39.5}};
  for (std::size_t k : {1u, 2u, 3u}) {
    const auto cube = build_cube(sources, grid, {k, false});
    CHECK(cube.table.rows() == 3);
    for (const auto& col : cube.table.columns)
      for (double v : col) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
  }
}

TEST_CASE("build_cube contract errors") {
  const Location grid[] = {{-6.0, -36.0}};
  SUBCASE("duplicate column across sources") {
    const Table sources[] = {random_source(SourceTag::atlas, 3, 1), random_source(SourceTag::atlas, 3, 2)};
    CHECK_ERRC(build_cube(sources, grid, {}), Errc::UnknownColumn);
  }
  SUBCASE("non-catalog column") {
    auto atlas = random_source(SourceTag::atlas, 3, 1);
    atlas.add_column("wind_gust", {1, 2, 3});
    const Table sources[] = {atlas};
    CHECK_ERRC(build_cube(sources, grid, {}), Errc::UnknownColumn);
  }
  SUBCASE("empty source") {
    Table empty;
    empty.source = SourceTag::plants;
    const Table sources[] = {empty};
    CHECK_ERRC(build_cube(sources, grid, {}), Errc::DisjointCoverage);
  }
}

TEST_CASE("build_cube keeps pvgis out unless requested") {
  const Table sources[] = {random_source(SourceTag::atlas, 5, 1), random_source(SourceTag::pvgis, 5, 2)};
  const Location grid[] = {{-6.0, -36.0}, {-7.0, -37.0}};
  const auto evaluation_only = build_cube(sources, grid, {});
  CHECK_FALSE(evaluation_only.table.find(catalog::kPvgisMonthlyMean));
  const auto included = build_cube(sources, grid, {1, true});
  REQUIRE(included.table.find(catalog::kPvgisMonthlyMean));
  CHECK(included.table.cols() == 6);
}

TEST_CASE("reduce_pvgis averages monthly means") {
  auto pv = random_source(SourceTag::pvgis, 3, 9);
  const auto reduced = reduce_pvgis(pv);
  for (std::size_t r = 0; r < 3; ++r) {
    double sum = 0;
    for (int m = 0; m < 12; ++m) sum += pv.columns[static_cast<std::size_t>(m)][r];
    CHECK(reduced.columns[0][r] == doctest::Approx(sum / 12.0).epsilon(1e-14));
  }
}

TEST_CASE("regular grid is row-major with top-left origin") {
  const auto grid = regular_grid({-9.0, -8.0, -36.0, -35.5, 0.5});
  REQUIRE(grid.size() == 3 * 2);
  CHECK(grid[0].lat == -8.0);
  CHECK(grid[0].lon == -36.0);
  CHECK(grid[1].lon == -35.5);
  CHECK(grid[5].lat == -9.0);
}

TEST_CASE("grid shape detection") {
  const auto grid = regular_grid({-9.0, -8.0, -36.0, -35.5, 0.5});
  const auto shape = grid_shape(grid);
  REQUIRE(shape.has_value());
  CHECK(shape->first == 3);
  CHECK(shape->second == 2);
  auto shuffled = grid;
  std::swap(shuffled[0], shuffled[3]);
  CHECK_FALSE(grid_shape(shuffled).has_value());
  const std::vector<Location> ragged(grid.begin(), grid.begin() + 5);
  CHECK_FALSE(grid_shape(ragged).has_value());
  CHECK_FALSE(grid_shape(std::vector<Location>{}).has_value());
}

TEST_CASE("cube files are deterministic and reload") {
  const Table sources[] = {random_source(SourceTag::atlas, 10, 5), random_source(SourceTag::stations, 8, 6)};
  const auto grid = regular_grid({-9.0, -6.0, -39.0, -36.0, 0.5});
  const auto a = build_cube(sources, grid, {2, false});
  const auto b = build_cube(sources, grid, {2, false});
  CHECK(cube_csv(a) == cube_csv(b));
  CHECK(cube_sidecar_json(a) == cube_sidecar_json(b));

  testing::TempDir dir("cube");
  save_cube(a, dir / "cube.csv", dir / "cube.json");
  const auto loaded = load_cube(dir / "cube.csv", dir / "cube.json");
  CHECK(loaded.table.names == a.table.names);
  CHECK(loaded.table.columns == a.table.columns);
  CHECK(loaded.provenance == a.provenance);
  CHECK(cube_csv(loaded) == cube_csv(a));
}
