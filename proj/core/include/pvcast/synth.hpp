#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pvcast/arima.hpp"
#include "pvcast/datacube.hpp"
#include "pvcast/interpolation.hpp"

// Deterministic synthetic inputs with known structure.
namespace pvcast::synth {

/// Daily series y_t = 1 + u_t + 0.3 sin(0.3 t), u_t = 0.6 u_{t-1} + 0.1 e_t,
/// plus seven independent station covariates. Dates start 2019-01-01.
arima::SeriesTable ar_sin(std::size_t n, std::uint64_t seed);

/// Raw source tables over a rectangular region driven by one smooth latent
/// solar field. Plant capacity factors are an exact linear map (plus small
/// noise) of the atlas and station features nearest to each plant, so a
/// cube built with k = 1 at the plant locations reproduces the map.
struct LinearMap {
  datacube::Table atlas;
  datacube::Table stations;
  datacube::Table pvgis;
  datacube::Table plants;
  datacube::Table reference;  // latent field on `grid`, column "value"
  datacube::GridSpec grid;
};

LinearMap linear_map(std::size_t n_plants, std::uint64_t seed);

/// Latent field used by linear_map, in [0, 1] over the region.
double latent_field(double lat, double lon);

/// Points on the line y = 2 x + 1 with `outlier_fraction` of them pulled far
/// below it.
struct OutlierLine {
  std::vector<double> x;
  std::vector<double> y;
};

OutlierLine outlier_line(std::size_t n, double outlier_fraction, std::uint64_t seed);

/// Samples of a smooth field for kriging plus lag points that follow the
/// power variogram 2 h^1.5 exactly.
struct VariogramField {
  std::vector<interpolation::Sample> samples;
  std::vector<interpolation::LagPoint> lags;
};

VariogramField variogram_field(std::size_t n_samples, std::uint64_t seed);

std::string table_csv(const datacube::Table& table);

}  // namespace pvcast::synth
