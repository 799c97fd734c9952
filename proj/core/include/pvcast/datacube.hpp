#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pvcast::datacube {

struct Location {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  std::optional<double> alt;  // meters

  friend bool operator==(const Location& a, const Location& b) { return a.lat == b.lat && a.lon == b.lon; }
};

/// Throws InvalidLocation unless lat in [-90, 90], lon in [-180, 180], finite.
void validate(const Location& loc);

inline constexpr double kEarthRadiusKm = 6371.0088;

/// Great-circle distance in kilometers.
double haversine_km(const Location& a, const Location& b);

enum class SourceTag { atlas, stations, pvgis, plants, other };

std::string_view to_string(SourceTag tag);
std::optional<SourceTag> source_tag_from_string(std::string_view name);

/// Location-keyed columnar table. Columns are stored by name in insertion
/// order and all have one value per location.
struct Table {
  SourceTag source = SourceTag::other;
  std::vector<Location> locations;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const noexcept { return locations.size(); }
  std::size_t cols() const noexcept { return names.size(); }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  /// Throws MissingColumn.
  const std::vector<double>& column(std::string_view name) const;
  /// Throws UnknownColumn on a duplicate name, LengthMismatch on a short column.
  void add_column(std::string name, std::vector<double> values);
};

namespace catalog {

inline constexpr std::string_view kPvgisMonthlyMean = "pvgis_monthly_mean";

const std::vector<std::string>& atlas_columns();
const std::vector<std::string>& station_columns();
/// em_01..em_12 then sd_01..sd_12.
const std::vector<std::string>& pvgis_columns();
const std::vector<std::string>& plant_columns();
/// Columns a file of the given schema must carry besides lat/lon; empty for `other`.
const std::vector<std::string>& columns_for(SourceTag tag);

}  // namespace catalog

/// Reads a CSV with mandatory header. lat/lon are required for every
/// schema; `stations` also requires alt. Catalog columns of the schema are
/// required, extra columns are kept (build_cube rejects them later).
/// Errors: MissingColumn, NonNumericCell(row, col) with 1-based data rows, EmptyTable.
Table load_table(const std::filesystem::path& path, SourceTag expected);
Table parse_table(std::istream& in, SourceTag expected, const std::string& source_name = "<stream>");

struct ColumnRange {
  std::string name;
  double min = 0.0;
  double max = 0.0;
};

struct NormalizationParams {
  std::vector<ColumnRange> columns;

  const ColumnRange& range(std::string_view name) const;
  double normalize(std::string_view name, double raw) const;
  /// Inverse map; constant columns return their single raw value.
  double denormalize(std::string_view name, double unit) const;
};

struct Normalized {
  Table table;
  NormalizationParams params;
  std::vector<std::string> warnings;
};

/// Min-max scaling per column to [0, 1]. Constant columns become all-zero
/// and are listed in `warnings`.
Normalized normalize(const Table& table);
Table denormalize(const Table& table, const NormalizationParams& params);

/// Appends to `base` the mean of each `other` column over the k nearest
/// other-rows (haversine). Ties in distance are broken by (lat, lon,
/// input order) ascending.
Table knn_join(const Table& base, const Table& other, std::size_t k);

/// Collapses the 24 PVGIS columns into `pvgis_monthly_mean`, the mean of
/// em_01..em_12.
Table reduce_pvgis(const Table& pvgis);

struct CubeOptions {
  std::size_t k = 1;
  /// PVGIS tables are evaluation references unless this is set.
  bool include_pvgis = false;
};

struct DataCube {
  Table table;  // normalized
  NormalizationParams norm;
  std::vector<SourceTag> provenance;  // per column of `table`
  std::vector<std::string> warnings;
};

DataCube build_cube(std::span<const Table> sources, std::span<const Location> query_grid, const CubeOptions& options);

struct GridSpec {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;
  double step = 0.1;

  std::size_t n_rows() const;
  std::size_t n_cols() const;
};

/// Row-major grid with top-left origin: rows run from lat_max down to
/// lat_min, columns from lon_min to lon_max.
std::vector<Location> regular_grid(const GridSpec& spec);

/// (rows, cols) when `locations` are laid out like regular_grid output.
std::optional<std::pair<std::size_t, std::size_t>> grid_shape(std::span<const Location> locations);

std::string cube_csv(const DataCube& cube);
std::string cube_sidecar_json(const DataCube& cube);
void save_cube(const DataCube& cube, const std::filesystem::path& csv_path, const std::filesystem::path& json_path);
DataCube load_cube(const std::filesystem::path& csv_path, const std::filesystem::path& json_path);

}  // namespace pvcast::datacube
