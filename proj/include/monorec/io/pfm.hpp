#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "monorec/grid.hpp"
#include "monorec/io/error.hpp"

namespace monorec::io {

// PFM: "Pf" (1 channel) or "PF" (3 channels), width height, scale (negative
// means little endian), then float32 rows from the bottom row up.

inline void write_pfm(const std::string& path, const Grid<double>& grid) {
  if (grid.channels() != 1 && grid.channels() != 3) throw IoError(path, "channels", "PFM needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "", "cannot open for writing");
  out << (grid.channels() == 3 ? "PF" : "Pf") << "\n" << grid.width() << " " << grid.height() << "\n-1\n";
  std::vector<float> row(static_cast<std::size_t>(grid.width()) * grid.channels());
  for (int y = grid.height() - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width(); ++x) {
      for (int c = 0; c < grid.channels(); ++c) row[x * grid.channels() + c] = static_cast<float>(grid(x, y, c));
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (float& f : row) {
        auto u = std::bit_cast<std::uint32_t>(f);
        u = __builtin_bswap32(u);
        f = std::bit_cast<float>(u);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError(path, "", "write failed");
}

inline Grid<double> read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "", "cannot open for reading");
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || (magic != "Pf" && magic != "PF")) throw IoError(path, "header", "not a PFM file");
  if (w <= 0 || h <= 0) throw IoError(path, "size", "bad PFM dimensions");
  if (scale == 0.0) throw IoError(path, "scale", "PFM scale must be non-zero");
  in.get();
  const int channels = magic == "PF" ? 3 : 1;
  const bool swap = (scale < 0.0) != (std::endian::native == std::endian::little);
  Grid<double> grid(w, h, channels);
  std::vector<float> row(static_cast<std::size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw IoError(path, "data", "truncated PFM data");
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        float f = row[x * channels + c];
        if (swap) f = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(f)));
        grid(x, y, c) = f;
      }
    }
  }
  return grid;
}

}  // namespace monorec::io
