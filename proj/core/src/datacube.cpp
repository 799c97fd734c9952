#include "pvcast/datacube.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "pvcast/error.hpp"
#include "pvcast/io.hpp"

namespace pvcast::datacube {

using nlohmann::json;

void validate(const Location& loc) {
  if (!std::isfinite(loc.lat) || !std::isfinite(loc.lon) || loc.lat < -90.0 || loc.lat > 90.0 || loc.lon < -180.0 ||
      loc.lon > 180.0)
    fail(Errc::InvalidLocation, "(" + io::format_number(loc.lat) + ", " + io::format_number(loc.lon) + ")");
  if (loc.alt && !std::isfinite(*loc.alt)) fail(Errc::InvalidLocation, "non-finite altitude");
}

double haversine_km(const Location& a, const Location& b) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * deg;
  const double dlon = (b.lon - a.lon) * deg;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat * deg) * std::cos(b.lat * deg) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::string_view to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::atlas: return "atlas";
    case SourceTag::stations: return "stations";
    case SourceTag::pvgis: return "pvgis";
    case SourceTag::plants: return "plants";
    case SourceTag::other: return "other";
  }
  return "other";
}

std::optional<SourceTag> source_tag_from_string(std::string_view name) {
  for (auto tag : {SourceTag::atlas, SourceTag::stations, SourceTag::pvgis, SourceTag::plants, SourceTag::other})
    if (to_string(tag) == name) return tag;
  return std::nullopt;
}

// ---------------------------------------------------------------- Table

std::optional<std::size_t> Table::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

const std::vector<double>& Table::column(std::string_view name) const {
  const auto idx = find(name);
  if (!idx) fail(Errc::MissingColumn, std::string(name));
  return columns[*idx];
}

void Table::add_column(std::string name, std::vector<double> values) {
  if (find(name)) fail(Errc::UnknownColumn, "duplicate column '" + name + "'");
  if (values.size() != rows())
    fail(Errc::LengthMismatch, "column '" + name + "' has " + std::to_string(values.size()) + " values for " +
                                   std::to_string(rows()) + " rows");
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

// ---------------------------------------------------------------- catalog

namespace catalog {

const std::vector<std::string>& atlas_columns() {
  static const std::vector<std::string> cols{"global_horizontal", "tilted", "direct_normal", "diffuse", "par"};
  return cols;
}

const std::vector<std::string>& station_columns() {
  static const std::vector<std::string> cols{
      "total_solar_irradiance", "days_with_precipitation", "atm_pressure",   "avg_max_temp",
      "avg_rel_humidity",       "avg_wind_speed",          "avg_cloudiness", "total_precipitation",
      "avg_comp_temp",          "avg_visibility",          "avg_min_temp",   "evaporation"};
  return cols;
}

const std::vector<std::string>& pvgis_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c;
    for (const char* prefix : {"em_", "sd_"})
      for (int m = 1; m <= 12; ++m) c.push_back(prefix + std::string(m < 10 ? "0" : "") + std::to_string(m));
    return c;
  }();
  return cols;
}

const std::vector<std::string>& plant_columns() {
  static const std::vector<std::string> cols{"capacity_factor"};
  return cols;
}

const std::vector<std::string>& columns_for(SourceTag tag) {
  static const std::vector<std::string> none;
  switch (tag) {
    case SourceTag::atlas: return atlas_columns();
    case SourceTag::stations: return station_columns();
    case SourceTag::pvgis: return pvgis_columns();
    case SourceTag::plants: return plant_columns();
    case SourceTag::other: return none;
  }
  return none;
}

}  // namespace catalog

// ---------------------------------------------------------------- loading

Table parse_table(std::istream& in, SourceTag expected, const std::string& source_name) {
  const auto doc = io::read_csv(in, source_name);

  std::vector<std::string> required{"lat", "lon"};
  if (expected == SourceTag::stations) required.emplace_back("alt");
  for (const auto& c : catalog::columns_for(expected)) required.push_back(c);
  for (const auto& name : required)
    if (!doc.column(name)) fail(Errc::MissingColumn, name);
  for (std::size_t i = 0; i < doc.header.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (doc.header[i] == doc.header[j]) fail(Errc::UnknownColumn, "duplicate header '" + doc.header[i] + "'");

  if (doc.rows.empty()) fail(Errc::EmptyTable, source_name);

  const std::size_t lat_idx = *doc.column("lat");
  const std::size_t lon_idx = *doc.column("lon");
  const auto alt_idx = doc.column("alt");
  const bool alt_is_location = alt_idx && expected == SourceTag::stations;

  Table table;
  table.source = expected;
  std::vector<std::size_t> value_cols;
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    if (c == lat_idx || c == lon_idx || (alt_is_location && c == *alt_idx)) continue;
    value_cols.push_back(c);
    table.names.push_back(doc.header[c]);
  }
  table.columns.assign(value_cols.size(), {});

  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    auto cell = [&](std::size_t c) {
      const auto v = io::parse_number(row[c]);
      if (!v) fail(Errc::NonNumericCell, "(" + std::to_string(r + 1) + ", " + doc.header[c] + ")");
      return *v;
    };
    Location loc{cell(lat_idx), cell(lon_idx), std::nullopt};
    if (alt_is_location) loc.alt = cell(*alt_idx);
    validate(loc);
    table.locations.push_back(loc);
    for (std::size_t k = 0; k < value_cols.size(); ++k) table.columns[k].push_back(cell(value_cols[k]));
  }
  return table;
}

Table load_table(const std::filesystem::path& path, SourceTag expected) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  return parse_table(in, expected, path.string());
}

// ---------------------------------------------------------------- normalization

const ColumnRange& NormalizationParams::range(std::string_view name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  fail(Errc::MissingColumn, std::string(name));
}

double NormalizationParams::normalize(std::string_view name, double raw) const {
  const auto& r = range(name);
  return r.max > r.min ? (raw - r.min) / (r.max - r.min) : 0.0;
}

double NormalizationParams::denormalize(std::string_view name, double unit) const {
  const auto& r = range(name);
  return r.max > r.min ? r.min + unit * (r.max - r.min) : r.min;
}

Normalized normalize(const Table& table) {
  if (table.rows() == 0) fail(Errc::EmptyTable, "normalize");
  Normalized out{table, {}, {}};
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const auto& col = table.columns[c];
    for (double v : col)
      if (!std::isfinite(v)) fail(Errc::InvalidArgument, "non-finite value in column '" + table.names[c] + "'");
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    ColumnRange range{table.names[c], *lo, *hi};
    auto& dst = out.table.columns[c];
    if (range.max > range.min) {
      const double width = range.max - range.min;
      for (auto& v : dst) v = (v - range.min) / width;
    } else {
      std::fill(dst.begin(), dst.end(), 0.0);
      out.warnings.push_back("constant column '" + table.names[c] + "' normalized to zero");
    }
    out.params.columns.push_back(std::move(range));
  }
  return out;
}

Table denormalize(const Table& table, const NormalizationParams& params) {
  Table out = table;
  for (std::size_t c = 0; c < out.cols(); ++c)
    for (auto& v : out.columns[c]) v = params.denormalize(out.names[c], v);
  return out;
}

// ---------------------------------------------------------------- joins

Table knn_join(const Table& base, const Table& other, std::size_t k) {
  if (base.rows() == 0) fail(Errc::EmptyTable, "knn_join base");
  if (other.rows() == 0) fail(Errc::EmptyTable, "knn_join other");
  if (k == 0 || k > other.rows())
    fail(Errc::KNotSatisfiable, "k=" + std::to_string(k) + " with " + std::to_string(other.rows()) + " rows");
  for (const auto& name : other.names)
    if (base.find(name)) fail(Errc::UnknownColumn, "column '" + name + "' present in more than one source");

  Table out = base;
  std::vector<std::vector<double>> joined(other.cols(), std::vector<double>(base.rows(), 0.0));

  struct Candidate {
    double dist;
    double lat;
    double lon;
    std::size_t index;
    bool operator<(const Candidate& o) const {
      if (dist != o.dist) return dist < o.dist;
      if (lat != o.lat) return lat < o.lat;
      if (lon != o.lon) return lon < o.lon;
      return index < o.index;
    }
  };
  std::vector<Candidate> cands(other.rows());
  for (std::size_t r = 0; r < base.rows(); ++r) {
    for (std::size_t j = 0; j < other.rows(); ++j) {
      const auto& loc = other.locations[j];
      cands[j] = {haversine_km(base.locations[r], loc), loc.lat, loc.lon, j};
    }
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end());
    for (std::size_t c = 0; c < other.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) sum += other.columns[c][cands[i].index];
      joined[c][r] = sum / static_cast<double>(k);
    }
  }
  for (std::size_t c = 0; c < other.cols(); ++c) out.add_column(other.names[c], std::move(joined[c]));
  return out;
}

Table reduce_pvgis(const Table& pvgis) {
  Table out;
  out.source = SourceTag::pvgis;
  out.locations = pvgis.locations;
  std::vector<double> mean(pvgis.rows(), 0.0);
  for (int m = 1; m <= 12; ++m) {
    const auto& col = pvgis.column(catalog::pvgis_columns()[static_cast<std::size_t>(m - 1)]);
    for (std::size_t r = 0; r < pvgis.rows(); ++r) mean[r] += col[r] / 12.0;
  }
  out.add_column(std::string(catalog::kPvgisMonthlyMean), std::move(mean));
  return out;
}

// ---------------------------------------------------------------- cube

DataCube build_cube(std::span<const Table> sources, std::span<const Location> query_grid, const CubeOptions& options) {
  if (query_grid.empty()) fail(Errc::EmptyTable, "query grid is empty");
  Table joined;
  for (const auto& loc : query_grid) {
    validate(loc);
    joined.locations.push_back(loc);
  }

  std::vector<SourceTag> provenance;
  std::vector<std::string> warnings;
  for (const auto& source : sources) {
    const auto tag_name = std::string(to_string(source.source));
    if (source.rows() == 0) fail(Errc::DisjointCoverage, tag_name + " source has zero rows");
    const auto& allowed = catalog::columns_for(source.source);
    for (const auto& name : source.names)
      if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
        fail(Errc::UnknownColumn, "'" + name + "' is not a catalog column of " + tag_name);
    for (const auto& name : allowed)
      if (!source.find(name)) fail(Errc::MissingColumn, name);

    const Table* to_join = &source;
    Table reduced;
    if (source.source == SourceTag::pvgis) {
      if (!options.include_pvgis) {
        warnings.push_back("pvgis source kept for evaluation only");
        continue;
      }
      reduced = reduce_pvgis(source);
      to_join = &reduced;
    }
    joined = knn_join(joined, *to_join, options.k);
    provenance.insert(provenance.end(), to_join->cols(), source.source);
  }

  auto normalized = normalize(joined);
  for (auto& w : normalized.warnings) warnings.push_back(std::move(w));
  return DataCube{std::move(normalized.table), std::move(normalized.params), std::move(provenance),
                  std::move(warnings)};
}

std::size_t GridSpec::n_rows() const {
  return static_cast<std::size_t>(std::floor((lat_max - lat_min) / step + 1e-9)) + 1;
}

std::size_t GridSpec::n_cols() const {
  return static_cast<std::size_t>(std::floor((lon_max - lon_min) / step + 1e-9)) + 1;
}

std::vector<Location> regular_grid(const GridSpec& spec) {
  if (!(spec.step > 0.0) || !(spec.lat_max >= spec.lat_min) || !(spec.lon_max >= spec.lon_min))
    fail(Errc::InvalidArgument, "grid needs step > 0 and max >= min");
  std::vector<Location> grid;
  const auto rows = spec.n_rows();
  const auto cols = spec.n_cols();
  grid.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      Location loc{spec.lat_max - static_cast<double>(r) * spec.step,
                   spec.lon_min + static_cast<double>(c) * spec.step, std::nullopt};
      validate(loc);
      grid.push_back(loc);
    }
  return grid;
}

// ---------------------------------------------------------------- persistence

std::optional<std::pair<std::size_t, std::size_t>> grid_shape(std::span<const Location> locs) {
  if (locs.empty()) return std::nullopt;
  std::size_t cols = 0;
  while (cols < locs.size() && locs[cols].lat == locs[0].lat) ++cols;
  if (locs.size() % cols != 0) return std::nullopt;
  const std::size_t rows = locs.size() / cols;
  for (std::size_t c = 1; c < cols; ++c)
    if (!(locs[c].lon > locs[c - 1].lon)) return std::nullopt;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& l = locs[r * cols + c];
      if (l.lat != locs[r * cols].lat || l.lon != locs[c].lon) return std::nullopt;
      if (r > 0 && c == 0 && !(l.lat < locs[(r - 1) * cols].lat)) return std::nullopt;
    }
  return std::pair{rows, cols};
}

std::string cube_csv(const DataCube& cube) {
  std::ostringstream out;
  out << "lat,lon";
  for (const auto& n : cube.table.names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < cube.table.rows(); ++r) {
    out << io::format_number(cube.table.locations[r].lat) << ',' << io::format_number(cube.table.locations[r].lon);
    for (const auto& col : cube.table.columns) out << ',' << io::format_number(col[r]);
    out << '\n';
  }
  return out.str();
}

std::string cube_sidecar_json(const DataCube& cube) {
  json columns = json::array();
  for (std::size_t c = 0; c < cube.table.cols(); ++c) {
    const auto& range = cube.norm.range(cube.table.names[c]);
    columns.push_back({{"name", range.name},
                       {"min", range.min},
                       {"max", range.max},
                       {"source", std::string(c < cube.provenance.size() ? to_string(cube.provenance[c]) : "other")}});
  }
  json doc{{"rows", cube.table.rows()}, {"columns", columns}, {"warnings", cube.warnings}};
  return doc.dump(2) + "\n";
}

void save_cube(const DataCube& cube, const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  io::write_text_file(csv_path, cube_csv(cube));
  io::write_text_file(json_path, cube_sidecar_json(cube));
}

DataCube load_cube(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  DataCube cube;
  cube.table = load_table(csv_path, SourceTag::other);
  json doc;
  try {
    doc = json::parse(io::read_text_file(json_path));
    for (const auto& col : doc.at("columns")) {
      cube.norm.columns.push_back(
          {col.at("name").get<std::string>(), col.at("min").get<double>(), col.at("max").get<double>()});
      cube.provenance.push_back(source_tag_from_string(col.at("source").get<std::string>()).value_or(SourceTag::other));
    }
    for (const auto& w : doc.value("warnings", json::array())) cube.warnings.push_back(w.get<std::string>());
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, json_path.string() + ": " + e.what());
  }
  if (cube.norm.columns.size() != cube.table.cols())
    fail(Errc::RowMismatch, "sidecar lists " + std::to_string(cube.norm.columns.size()) + " columns, cube has " +
                                std::to_string(cube.table.cols()));
  for (std::size_t c = 0; c < cube.table.cols(); ++c) {
    if (cube.norm.columns[c].name != cube.table.names[c])
      fail(Errc::UnknownColumn, "sidecar column order differs at '" + cube.table.names[c] + "'");
    for (double v : cube.table.columns[c])
      if (v < 0.0 || v > 1.0) fail(Errc::InvalidArgument, "cube value outside [0,1] in '" + cube.table.names[c] + "'");
  }
  return cube;
}

}  // namespace pvcast::datacube
