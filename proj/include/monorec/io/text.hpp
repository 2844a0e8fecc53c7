#pragma once

#include <Eigen/SVD>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "monorec/config.hpp"
#include "monorec/geometry.hpp"
#include "monorec/losses.hpp"
#include "monorec/io/error.hpp"

namespace monorec::io {

inline std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "", "cannot open for reading");
  return in;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "", "cannot open for writing");
  out << text;
  if (!out) throw IoError(path, "", "write failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in = open_text(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// One world-to-camera pose per line: 3x4 [R | t], row-major.
inline std::string format_poses(const std::vector<PoseSE3>& poses) {
  std::string out;
  for (const auto& p : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out += format_number(p.rotation()(r, c)) + " ";
      out += format_number(p.translation()(r)) + (r < 2 ? " " : "\n");
    }
  }
  return out;
}

/// Rotations are snapped back onto SO(3) to undo 9-digit rounding.
inline std::vector<PoseSE3> parse_poses(const std::string& text, const std::string& path) {
  std::vector<PoseSE3> poses;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (::monorec::detail::trim(line).empty()) continue;
    std::istringstream ss(line);
    double v[12];
    for (double& x : v) {
      if (!(ss >> x)) throw IoError(path, "line " + std::to_string(line_no), "expected 12 numbers per pose");
    }
    std::string extra;
    if (ss >> extra) throw IoError(path, "line " + std::to_string(line_no), "expected 12 numbers per pose");
    Eigen::Matrix3d r;
    Eigen::Vector3d t;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) r(i, j) = v[i * 4 + j];
      t(i) = v[i * 4 + 3];
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d snapped = svd.matrixU() * svd.matrixV().transpose();
    if ((snapped - r).cwiseAbs().maxCoeff() > 1e-6 || snapped.determinant() < 0.0) {
      throw IoError(path, "line " + std::to_string(line_no), "rotation block is not a rotation");
    }
    poses.emplace_back(snapped, t);
  }
  return poses;
}

/// "fx fy cx cy" then "width height".
inline std::string format_intrinsics(const CameraIntrinsics& k) {
  return format_number(k.fx) + " " + format_number(k.fy) + " " + format_number(k.cx) + " " + format_number(k.cy) +
         "\n" + std::to_string(k.width) + " " + std::to_string(k.height) + "\n";
}

inline CameraIntrinsics parse_intrinsics(const std::string& text, const std::string& path) {
  std::istringstream ss(text);
  CameraIntrinsics k;
  if (!(ss >> k.fx >> k.fy >> k.cx >> k.cy)) throw IoError(path, "fx fy cx cy", "expected four numbers");
  if (!(ss >> k.width >> k.height)) throw IoError(path, "width height", "expected two integers");
  if (!k.valid()) throw IoError(path, "intrinsics", "invalid intrinsics");
  return k;
}

/// frame,u,v,inv_depth rows.
inline std::string format_sparse(const std::vector<SparseDepth>& per_frame) {
  std::string out = "frame,u,v,inv_depth\n";
  for (std::size_t f = 0; f < per_frame.size(); ++f) {
    for (const auto& s : per_frame[f].samples) {
      out += std::to_string(f) + "," + std::to_string(s.u) + "," + std::to_string(s.v) + "," +
             format_number(s.inv_depth) + "\n";
    }
  }
  return out;
}

inline std::vector<SparseDepth> parse_sparse(const std::string& text, int frames, const std::string& path) {
  std::vector<SparseDepth> out(frames);
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line_no == 1 || ::monorec::detail::trim(line).empty()) continue;
    for (char& c : line) c = c == ',' ? ' ' : c;
    std::istringstream ss(line);
    int f = 0;
    SparseDepth::Sample s;
    if (!(ss >> f >> s.u >> s.v >> s.inv_depth)) {
      throw IoError(path, "line " + std::to_string(line_no), "expected frame,u,v,inv_depth");
    }
    if (f < 0 || f >= frames) throw IoError(path, "frame", "frame index out of range");
    if (!(s.inv_depth > 0.0)) throw IoError(path, "inv_depth", "inverse depth must be positive");
    out[f].samples.push_back(s);
  }
  return out;
}

/// "id label" per line.
inline std::string format_classes(const std::map<int, std::string>& classes) {
  std::string out;
  for (const auto& [id, label] : classes) out += std::to_string(id) + " " + label + "\n";
  return out;
}

inline std::map<int, std::string> parse_classes(const std::string& text, const std::string& path) {
  std::map<int, std::string> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (::monorec::detail::trim(line).empty()) continue;
    std::istringstream ss(line);
    int id = 0;
    std::string label;
    if (!(ss >> id >> label)) throw IoError(path, "class", "expected 'id label'");
    out[id] = label;
  }
  return out;
}

}  // namespace monorec::io
