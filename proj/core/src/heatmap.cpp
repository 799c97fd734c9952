#include "pvcast/heatmap.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "pvcast/error.hpp"

namespace pvcast::heatmap {

namespace {

// blue -> cyan -> green -> yellow -> red
constexpr std::array<std::array<std::uint8_t, 3>, 9> kRamp{{{{49, 54, 149}},
                                                            {{69, 117, 180}},
                                                            {{116, 173, 209}},
                                                            {{171, 217, 233}},
                                                            {{224, 243, 248}},
                                                            {{254, 224, 144}},
                                                            {{253, 174, 97}},
                                                            {{244, 109, 67}},
                                                            {{215, 48, 39}}}};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5], const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const auto start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png(std::span<const double> values, std::size_t rows, std::size_t cols,
                                     std::size_t cell_px) {
  if (rows == 0 || cols == 0 || values.size() != rows * cols || cell_px == 0)
    fail(Errc::DimensionMismatch, "heatmap needs rows*cols values");

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double width = hi > lo ? hi - lo : 1.0;

  const std::size_t w = cols * cell_px, h = rows * cell_px;
  std::vector<std::uint8_t> raw;
  raw.reserve(h * (1 + 3 * w));
  for (std::size_t y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    const std::size_t r = y / cell_px;
    for (std::size_t x = 0; x < w; ++x) {
      const double v = values[r * cols + x / cell_px];
      std::array<std::uint8_t, 3> rgb{0, 0, 0};
      if (std::isfinite(v)) {
        const double t = (v - lo) / width;
        const auto idx = static_cast<std::size_t>(std::lround(t * static_cast<double>(kRamp.size() - 1)));
        rgb = kRamp[std::min(idx, kRamp.size() - 1)];
      }
      raw.insert(raw.end(), rgb.begin(), rgb.end());
    }
  }

  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    fail(Errc::IoError, "zlib compression failed");
  compressed.resize(compressed_size);

  std::vector<std::uint8_t> png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(w));
  put_u32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit, truecolor, deflate, no filter, no interlace
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", compressed);
  put_chunk(png, "IEND", {});
  return png;
}

void write_png(const std::filesystem::path& path, std::span<const double> values, std::size_t rows, std::size_t cols,
               std::size_t cell_px) {
  const auto png = encode_png(values, rows, cols, cell_px);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
}

}  // namespace pvcast::heatmap
