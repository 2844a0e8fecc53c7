#pragma once

// Shared generators and helpers for the unit tests. Generators are plain
// functions over a seeded std::mt19937_64 so every property case replays.

#include <Eigen/Core>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "monorec/geometry.hpp"
#include "monorec/grid.hpp"

namespace testing_support {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline monorec::Image random_image(Rng& rng, int w, int h, int channels = 1, double lo = 0.0, double hi = 1.0) {
  monorec::Image img(w, h, channels);
  for (double& v : img.data()) v = uniform(rng, lo, hi);
  return img;
}

inline Eigen::Vector3d random_vector(Rng& rng, double scale) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

inline monorec::PoseSE3 random_pose(Rng& rng, double angle = 3.0, double translation = 5.0) {
  Eigen::Vector3d axis = random_vector(rng, 1.0);
  if (axis.norm() < 1e-3) axis = Eigen::Vector3d::UnitZ();
  axis = axis.normalized() * uniform(rng, 0.0, angle);
  return monorec::PoseSE3::from_axis_angle(axis, random_vector(rng, translation));
}

inline monorec::CameraIntrinsics random_intrinsics(Rng& rng) {
  const int w = uniform_int(rng, 8, 200);
  const int h = uniform_int(rng, 8, 120);
  return {uniform(rng, 20.0, 500.0), uniform(rng, 20.0, 500.0), uniform(rng, 1.0, w - 1.0),
          uniform(rng, 1.0, h - 1.0), w, h};
}

inline monorec::Frame make_frame(const monorec::Image& image, const monorec::PoseSE3& pose = {}) {
  return {image, {40.0, 40.0, image.width() / 2.0, image.height() / 2.0, image.width(), image.height()}, pose};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("monorec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_support
