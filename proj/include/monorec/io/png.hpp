#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "monorec/grid.hpp"
#include "monorec/io/error.hpp"

namespace monorec::io {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

/// Writes `rows` (already packed, big-endian for 16 bit) as a PNG.
inline void write_png_rows(const std::string& path, int width, int height, int bit_depth, int color_type,
                           std::vector<std::vector<png_byte>>& rows) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError(path, "", "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path, "", "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path, "", "libpng write error");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (auto& r : rows) png_write_row(png, r.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// 16-bit gray or RGB PNG from values in [0, 1].
inline void write_png16(const std::string& path, const Image& image) {
  const int ch = image.channels();
  if (ch != 1 && ch != 3) throw IoError(path, "channels", "PNG export needs 1 or 3 channels");
  std::vector<std::vector<png_byte>> rows(image.height(), std::vector<png_byte>(image.width() * ch * 2));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < ch; ++c) {
        const double v = std::clamp(image(x, y, c), 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        rows[y][(x * ch + c) * 2] = static_cast<png_byte>(q >> 8);
        rows[y][(x * ch + c) * 2 + 1] = static_cast<png_byte>(q & 0xff);
      }
    }
  }
  detail::write_png_rows(path, image.width(), image.height(), 16, ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                         rows);
}

/// 8-bit gray PNG of raw byte values (labels, or masks scaled by the caller).
inline void write_png8(const std::string& path, const Grid<std::uint8_t>& grid) {
  std::vector<std::vector<png_byte>> rows(grid.height(), std::vector<png_byte>(grid.width()));
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) rows[y][x] = grid(x, y);
  }
  detail::write_png_rows(path, grid.width(), grid.height(), 8, PNG_COLOR_TYPE_GRAY, rows);
}

/// Binary mask as 0 / 255.
inline void write_mask_png(const std::string& path, const Mask& mask) {
  Grid<std::uint8_t> out(mask.width(), mask.height(), 1, 0);
  for (std::size_t k = 0; k < mask.data().size(); ++k) out.data()[k] = mask.data()[k] ? 255 : 0;
  write_png8(path, out);
}

/// Raw PNG samples: gray or RGB, 8 or 16 bits, alpha dropped, palettes expanded.
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

inline RawPng read_png_raw(const std::string& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError(path, "", "cannot open for reading");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path, "header", "not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path, "", "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path, "data", "corrupt PNG data");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  RawPng out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  out.samples.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  for (int y = 0; y < out.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int i = 0; i < out.width * out.channels; ++i) {
      out.samples[static_cast<std::size_t>(y) * out.width * out.channels + i] =
          out.bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]) : row[i];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

/// Image with values in [0, 1].
inline Image read_png(const std::string& path) {
  const RawPng raw = read_png_raw(path);
  const double max = raw.bit_depth == 16 ? 65535.0 : 255.0;
  Image img(raw.width, raw.height, raw.channels);
  for (std::size_t k = 0; k < raw.samples.size(); ++k) img.data()[k] = raw.samples[k] / max;
  return img;
}

/// Single-channel label map; values are kept as-is.
inline Grid<int> read_label_png(const std::string& path) {
  const RawPng raw = read_png_raw(path);
  if (raw.channels != 1) throw IoError(path, "channels", "label image must be single-channel");
  Grid<int> g(raw.width, raw.height, 1, 0);
  for (std::size_t k = 0; k < raw.samples.size(); ++k) g.data()[k] = raw.samples[k];
  return g;
}

/// Any non-zero sample is set.
inline Mask read_mask_png(const std::string& path) {
  const Grid<int> labels = read_label_png(path);
  Mask m(labels.width(), labels.height(), 1, 0);
  for (std::size_t k = 0; k < labels.data().size(); ++k) m.data()[k] = labels.data()[k] != 0;
  return m;
}

}  // namespace monorec::io
