#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "monorec/depth.hpp"
#include "monorec/io/error.hpp"
#include "monorec/io/pfm.hpp"
#include "monorec/io/png.hpp"

namespace monorec::io {

/// ASCII PLY with x y z and 8-bit color per vertex.
inline void write_ply(const std::string& path, const std::vector<ColoredPoint>& points) {
  detail::FilePtr file(std::fopen(path.c_str(), "w"));
  if (!file) throw IoError(path, "", "cannot open for writing");
  std::FILE* f = file.get();
  std::fprintf(f,
               "ply\nformat ascii 1.0\nelement vertex %zu\nproperty float x\nproperty float y\nproperty float z\n"
               "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
               points.size());
  for (const auto& p : points) {
    std::fprintf(f, "%.9g %.9g %.9g %u %u %u\n", p.xyz.x(), p.xyz.y(), p.xyz.z(), unsigned{p.rgb[0]},
                 unsigned{p.rgb[1]}, unsigned{p.rgb[2]});
  }
  if (std::ferror(f)) throw IoError(path, "", "write failed");
}

}  // namespace monorec::io
