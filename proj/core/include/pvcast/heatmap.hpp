#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pvcast::heatmap {

/// 8-bit RGB PNG of a row-major grid (row 0 is the top image row). Values
/// are min-max scaled and mapped to the nearest entry of a fixed color ramp;
/// non-finite cells are drawn black. Each cell becomes a `cell_px` square.
std::vector<std::uint8_t> encode_png(std::span<const double> values, std::size_t rows, std::size_t cols,
                                     std::size_t cell_px = 4);

void write_png(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
               std::size_t cols, std::size_t cell_px = 4);

}  // namespace pvcast::heatmap
