#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "monorec/costvolume.hpp"
#include "monorec/io/pfm.hpp"
#include "monorec/io/text.hpp"

namespace monorec::io {

// A volume directory holds volume.txt ("d_min d_max M H W kind"), plus
// scores.pfm and counts.pfm with the M layers stacked vertically.

inline void write_volume(const std::string& dir, const CostVolume& v) {
  std::filesystem::create_directories(dir);
  write_text(dir + "/volume.txt", format_number(v.range.d_min) + " " + format_number(v.range.d_max) + " " +
                                      std::to_string(v.steps()) + " " + std::to_string(v.height()) + " " +
                                      std::to_string(v.width()) + " " + to_string(v.kind) + "\n");
  Grid<double> scores(v.width(), v.height() * v.steps());
  Grid<double> counts(v.width(), v.height() * v.steps());
  for (int i = 0; i < v.steps(); ++i) {
    for (int y = 0; y < v.height(); ++y) {
      for (int x = 0; x < v.width(); ++x) {
        scores(x, i * v.height() + y) = v.score(x, y, i);
        counts(x, i * v.height() + y) = v.count(x, y, i);
      }
    }
  }
  write_pfm(dir + "/scores.pfm", scores);
  write_pfm(dir + "/counts.pfm", counts);
}

inline CostVolume read_volume(const std::string& dir) {
  const std::string header = dir + "/volume.txt";
  std::istringstream ss(read_text(header));
  CostVolume v;
  int h = 0, w = 0;
  std::string kind;
  if (!(ss >> v.range.d_min >> v.range.d_max >> v.range.steps >> h >> w >> kind)) {
    throw IoError(header, "header", "expected 'd_min d_max M H W kind'");
  }
  try {
    v.range.validate();
    v.kind = volume_kind_from_string(kind);
  } catch (const std::exception& e) {
    throw IoError(header, "header", e.what());
  }
  const Grid<double> scores = read_pfm(dir + "/scores.pfm");
  const Grid<double> counts = read_pfm(dir + "/counts.pfm");
  if (scores.width() != w || scores.height() != h * v.range.steps || !scores.same_shape(counts)) {
    throw IoError(dir + "/scores.pfm", "size", "layer stack does not match volume.txt");
  }
  v.scores = StepStack<double>(w, h, v.range.steps, 0.0);
  v.valid_counts = StepStack<std::uint16_t>(w, h, v.range.steps, 0);
  for (int i = 0; i < v.range.steps; ++i) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        v.scores.at(x, y, i) = scores(x, i * h + y);
        v.valid_counts.at(x, y, i) = static_cast<std::uint16_t>(counts(x, i * h + y));
      }
    }
  }
  return v;
}

}  // namespace monorec::io
