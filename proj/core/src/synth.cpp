#include "pvcast/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pvcast/error.hpp"
#include "pvcast/io.hpp"
#include "pvcast/random.hpp"

namespace pvcast::synth {

using datacube::Location;
using datacube::SourceTag;
using datacube::Table;

namespace {

constexpr double kLatMin = -10.0, kLatMax = -7.0, kLonMin = -41.0, kLonMax = -35.0;

std::string iso_date(std::size_t day) {
  using namespace std::chrono;
  const year_month_day d{sys_days{year{2019} / January / 1} + days{static_cast<int>(day)}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

Location random_location(Rng& rng) {
  return {rng.uniform(kLatMin, kLatMax), rng.uniform(kLonMin, kLonMax), std::nullopt};
}

// Rounded so the emitted CSV reproduces the in-memory tables exactly.
double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

double latent_field(double lat, double lon) {
  const double wave = std::sin(1.1 * (lon + 38.0)) * std::cos(0.9 * (lat + 8.5));
  const double trend = (lon - kLonMin) / (kLonMax - kLonMin);
  return std::clamp(0.45 + 0.3 * wave + 0.25 * (trend - 0.5), 0.0, 1.0);
}

arima::SeriesTable ar_sin(std::size_t n, std::uint64_t seed) {
  require(n >= 1, Errc::InvalidArgument, "series length must be at least 1");
  Rng rng(derive_seed(seed, {0xa5}));
  arima::SeriesTable t;
  t.exog_names = {"total_precipitation", "avg_max_temp", "avg_min_temp", "total_solar_irradiance",
                  "avg_comp_temp",       "avg_rel_humidity", "avg_wind_speed"};
  t.exog = Eigen::MatrixXd(static_cast<Eigen::Index>(n), 7);
  double u = 0.0;
  for (int i = 0; i < 50; ++i) u = 0.6 * u + 0.1 * rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    u = 0.6 * u + 0.1 * rng.normal();
    t.dates.push_back(iso_date(i));
    t.generation.push_back(round4(1.0 + u + 0.3 * std::sin(0.3 * static_cast<double>(i))));
    const auto r = static_cast<Eigen::Index>(i);
    t.exog(r, 0) = round4(std::max(0.0, 4.0 * rng.normal()));
    t.exog(r, 1) = round4(31.0 + 1.5 * rng.normal());
    t.exog(r, 2) = round4(21.0 + 1.2 * rng.normal());
    t.exog(r, 3) = round4(7.5 + 1.5 * rng.normal());
    t.exog(r, 4) = round4(26.0 + 1.0 * rng.normal());
    t.exog(r, 5) = round4(std::clamp(72.0 + 8.0 * rng.normal(), 0.0, 100.0));
    t.exog(r, 6) = round4(std::max(0.0, 3.0 + 0.8 * rng.normal()));
  }
  return t;
}

LinearMap linear_map(std::size_t n_plants, std::uint64_t seed) {
  require(n_plants >= 2, Errc::InvalidArgument, "need at least 2 plants");
  LinearMap m;
  m.grid = {kLatMin, kLatMax, kLonMin, kLonMax, 0.25};

  Rng atlas_rng(derive_seed(seed, {0xa71}));
  m.atlas.source = SourceTag::atlas;
  m.atlas.locations = datacube::regular_grid(m.grid);
  std::vector<std::vector<double>> atlas(5);
  for (const auto& loc : m.atlas.locations) {
    const double s = latent_field(loc.lat, loc.lon);
    const double ghi = 4.5 + 2.0 * s + 0.15 * atlas_rng.normal();
    atlas[0].push_back(round4(ghi));
    atlas[1].push_back(round4(1.05 * ghi + 0.1 * atlas_rng.normal()));
    atlas[2].push_back(round4(3.5 + 3.0 * s + 0.6 * atlas_rng.normal()));
    atlas[3].push_back(round4(2.2 - 0.5 * s + 0.1 * atlas_rng.normal()));
    atlas[4].push_back(round4(0.45 * ghi + 0.05 * atlas_rng.normal()));
  }
  for (std::size_t c = 0; c < 5; ++c) m.atlas.add_column(datacube::catalog::atlas_columns()[c], atlas[c]);

  Rng station_rng(derive_seed(seed, {0x57a}));
  m.stations.source = SourceTag::stations;
  std::vector<std::vector<double>> st(12);
  for (int i = 0; i < 30; ++i) {
    auto loc = random_location(station_rng);
    loc.lat = round4(loc.lat);
    loc.lon = round4(loc.lon);
    loc.alt = std::round(station_rng.uniform(50.0, 900.0));
    const double s = latent_field(loc.lat, loc.lon);
    auto noise = [&](double sd) { return sd * station_rng.normal(); };
    const double values[12] = {2200.0 + 600.0 * s + noise(40.0),
                               60.0 - 30.0 * s + noise(5.0),
                               1013.0 - *loc.alt / 8.3 + noise(1.0),
                               31.0 + noise(1.5),
                               80.0 - 20.0 * s + noise(3.0),
                               2.5 + noise(0.6),
                               6.0 - 3.0 * s + noise(0.5),
                               1200.0 - 700.0 * s + noise(80.0),
                               25.0 + noise(1.0),
                               20.0 + noise(3.0),
                               20.0 + noise(1.2),
                               1500.0 + 300.0 * s + noise(100.0)};
    for (std::size_t c = 0; c < 12; ++c) st[c].push_back(round4(values[c]));
    m.stations.locations.push_back(loc);
  }
  for (std::size_t c = 0; c < 12; ++c) m.stations.add_column(datacube::catalog::station_columns()[c], st[c]);

  Rng pvgis_rng(derive_seed(seed, {0x9f9}));
  m.pvgis.source = SourceTag::pvgis;
  std::vector<std::vector<double>> pv(24);
  for (int i = 0; i < 40; ++i) {
    auto loc = random_location(pvgis_rng);
    loc.lat = round4(loc.lat);
    loc.lon = round4(loc.lon);
    const double s = latent_field(loc.lat, loc.lon);
    for (int month = 0; month < 12; ++month) {
      pv[static_cast<std::size_t>(month)].push_back(
          round4(130.0 + 40.0 * s + 15.0 * std::cos(2.0 * M_PI * month / 12.0) + 3.0 * pvgis_rng.normal()));
      pv[static_cast<std::size_t>(12 + month)].push_back(round4(5.0 + std::abs(pvgis_rng.normal())));
    }
    m.pvgis.locations.push_back(loc);
  }
  for (std::size_t c = 0; c < 24; ++c) m.pvgis.add_column(datacube::catalog::pvgis_columns()[c], pv[c]);

  Rng plant_rng(derive_seed(seed, {0x91a}));
  Table sites;
  for (std::size_t i = 0; i < n_plants; ++i) {
    auto loc = random_location(plant_rng);
    sites.locations.push_back({round4(loc.lat), round4(loc.lon), std::nullopt});
  }
  const Table features = datacube::knn_join(datacube::knn_join(sites, m.atlas, 1), m.stations, 1);
  std::vector<double> weights;
  for (std::size_t c = 0; c < features.cols(); ++c) weights.push_back(plant_rng.uniform(-1.0, 1.0));
  std::vector<double> cf(n_plants, 0.0);
  for (std::size_t c = 0; c < features.cols(); ++c) {
    const auto& col = features.columns[c];
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    const double span = *hi > *lo ? *hi - *lo : 1.0;
    for (std::size_t i = 0; i < n_plants; ++i) cf[i] += weights[c] * (col[i] - *lo) / span;
  }
  const auto [lo, hi] = std::minmax_element(cf.begin(), cf.end());
  const double cf_lo = *lo, cf_span = *hi > *lo ? *hi - *lo : 1.0;
  for (auto& v : cf) v = round4(0.15 + 0.15 * (v - cf_lo) / cf_span + 0.002 * plant_rng.normal());
  m.plants.source = SourceTag::plants;
  m.plants.locations = sites.locations;
  m.plants.add_column("capacity_factor", cf);

  m.reference.locations = m.atlas.locations;
  std::vector<double> ref;
  for (const auto& loc : m.reference.locations) ref.push_back(latent_field(loc.lat, loc.lon));
  m.reference.add_column("value", ref);
  return m;
}

OutlierLine outlier_line(std::size_t n, double outlier_fraction, std::uint64_t seed) {
  require(outlier_fraction >= 0.0 && outlier_fraction < 1.0, Errc::InvalidArgument, "outlier fraction outside [0, 1)");
  Rng rng(derive_seed(seed, {0x011e}));
  OutlierLine line;
  const auto outliers = static_cast<std::size_t>(std::floor(outlier_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 10.0 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
    double y = 2.0 * x + 1.0 + 0.1 * rng.normal();
    line.x.push_back(round4(x));
    line.y.push_back(y);
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  for (std::size_t k = 0; k < outliers; ++k) line.y[idx[k]] -= rng.uniform(25.0, 30.0);
  for (auto& y : line.y) y = round4(y);
  return line;
}

VariogramField variogram_field(std::size_t n_samples, std::uint64_t seed) {
  require(n_samples >= 3, Errc::InvalidArgument, "need at least 3 samples");
  Rng rng(derive_seed(seed, {0x7a6}));
  VariogramField f;
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto loc = random_location(rng);
    loc.lat = round4(loc.lat);
    loc.lon = round4(loc.lon);
    f.samples.push_back({loc, round4(latent_field(loc.lat, loc.lon) + 0.05 * rng.normal())});
  }
  for (int k = 1; k <= 12; ++k) {
    const double h = 0.5 * k;
    f.lags.push_back({h, 2.0 * std::pow(h, 1.5), 10});
  }
  return f;
}

std::string table_csv(const Table& table) {
  std::ostringstream out;
  const bool alt = std::any_of(table.locations.begin(), table.locations.end(), [](const Location& l) { return l.alt.has_value(); });
  out << "lat,lon";
  if (alt) out << ",alt";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& loc = table.locations[i];
    out << io::format_number(loc.lat) << ',' << io::format_number(loc.lon);
    if (alt) out << ',' << io::format_number(loc.alt.value_or(0.0));
    for (const auto& col : table.columns) out << ',' << io::format_number(col[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace pvcast::synth
