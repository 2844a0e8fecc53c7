#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "monorec/config.hpp"
#include "monorec/io/error.hpp"
#include "monorec/io/text.hpp"
#include "monorec/synth.hpp"

namespace monorec::io {

// Line-oriented scene description. Scalar lines are "key values...";
// "camera" takes a 3x4 world-to-camera pose; "object" takes key=value
// tokens with comma-separated vectors.

namespace detail {

inline std::string vec_text(const Eigen::Vector3d& v) {
  using ::monorec::detail::exact_number;
  return exact_number(v.x()) + "," + exact_number(v.y()) + "," + exact_number(v.z());
}

template <int N>
Eigen::Matrix<double, N, 1> parse_vec(const std::string& s, const std::string& path, const std::string& field) {
  const auto items = ::monorec::detail::split_list(s);
  Eigen::Matrix<double, N, 1> v;
  if (static_cast<int>(items.size()) != N) throw IoError(path, field, "expected " + std::to_string(N) + " values");
  for (int i = 0; i < N; ++i) {
    if (!::monorec::detail::parse_number(items[i], v(i))) throw IoError(path, field, "bad number '" + items[i] + "'");
  }
  return v;
}

}  // namespace detail

inline std::string format_scene(const synth::SceneSpec& s) {
  using ::monorec::detail::exact_number;
  std::ostringstream out;
  const auto& k = s.intrinsics;
  out << "seed " << s.seed << "\n"
      << "intrinsics " << exact_number(k.fx) << " " << exact_number(k.fy) << " " << exact_number(k.cx) << " "
      << exact_number(k.cy) << " " << k.width << " " << k.height << "\n"
      << "keyframe " << s.keyframe << "\n"
      << "stereo_baseline " << exact_number(s.stereo_baseline) << "\n"
      << "movable_classes";
  for (const auto& c : s.movable_classes) out << " " << c;
  out << "\ncolor " << (s.color ? 1 : 0) << "\n"
      << "sparse " << s.sparse_count << " " << exact_number(s.sparse_noise) << "\n"
      << "image_noise " << exact_number(s.image_noise) << "\n"
      << "freeze_movers " << (s.freeze_movers ? 1 : 0) << "\n";
  for (const auto& p : s.camera_path) {
    out << "camera";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << " " << exact_number(p.rotation()(r, c));
      out << " " << exact_number(p.translation()(r));
    }
    out << "\n";
  }
  for (const auto& o : s.objects) {
    out << "object name=" << o.name << " label=" << o.label
        << " kind=" << (o.kind == synth::ShapeKind::rect ? "rect" : "box") << " center=" << detail::vec_text(o.center)
        << " axis_u=" << detail::vec_text(o.axis_u) << " axis_v=" << detail::vec_text(o.axis_v)
        << " half=" << detail::vec_text(o.half_extents) << " yaw=" << exact_number(o.yaw)
        << " texture=" << o.texture.id << " wavelength=" << exact_number(o.texture.wavelength.x()) << ","
        << exact_number(o.texture.wavelength.y()) << " albedo=" << detail::vec_text(o.texture.albedo)
        << " contrast=" << exact_number(o.texture.contrast) << " checker=" << exact_number(o.texture.checker)
        << " v_perspective=" << exact_number(o.texture.v_perspective)
        << " velocity=" << detail::vec_text(o.velocity) << "\n";
  }
  return out.str();
}

inline synth::SceneSpec parse_scene(const std::string& text, const std::string& path) {
  using ::monorec::detail::parse_number;
  synth::SceneSpec s;
  s.camera_path.clear();
  s.objects.clear();
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    const std::string where = key + " (line " + std::to_string(line_no) + ")";
    auto need = [&](bool ok) {
      if (!ok) throw IoError(path, where, "cannot parse value");
    };
    if (key == "seed") {
      need(static_cast<bool>(ss >> s.seed));
    } else if (key == "intrinsics") {
      auto& k = s.intrinsics;
      need(static_cast<bool>(ss >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height));
    } else if (key == "keyframe") {
      need(static_cast<bool>(ss >> s.keyframe));
    } else if (key == "stereo_baseline") {
      need(static_cast<bool>(ss >> s.stereo_baseline));
    } else if (key == "movable_classes") {
      s.movable_classes.clear();
      for (std::string c; ss >> c;) s.movable_classes.push_back(c);
    } else if (key == "color") {
      int c = 0;
      need(static_cast<bool>(ss >> c));
      s.color = c != 0;
    } else if (key == "sparse") {
      need(static_cast<bool>(ss >> s.sparse_count >> s.sparse_noise));
    } else if (key == "image_noise") {
      need(static_cast<bool>(ss >> s.image_noise));
    } else if (key == "freeze_movers") {
      int f = 0;
      need(static_cast<bool>(ss >> f));
      s.freeze_movers = f != 0;
    } else if (key == "camera") {
      std::string rest;
      std::getline(ss, rest);
      const auto poses = parse_poses(rest, path + ":" + std::to_string(line_no));
      need(poses.size() == 1);
      s.camera_path.push_back(poses.front());
    } else if (key == "object") {
      synth::SceneObject o;
      for (std::string tok; ss >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError(path, where, "expected key=value, got '" + tok + "'");
        const std::string k = tok.substr(0, eq);
        const std::string v = tok.substr(eq + 1);
        const std::string field = "object." + k + " (line " + std::to_string(line_no) + ")";
        auto num = [&](double& out) {
          if (!parse_number(v, out)) throw IoError(path, field, "bad number '" + v + "'");
        };
        if (k == "name") o.name = v;
        else if (k == "label") o.label = v;
        else if (k == "kind") {
          if (v == "rect") o.kind = synth::ShapeKind::rect;
          else if (v == "box") o.kind = synth::ShapeKind::box;
          else throw IoError(path, field, "kind must be rect or box");
        } else if (k == "center") o.center = detail::parse_vec<3>(v, path, field);
        else if (k == "axis_u") o.axis_u = detail::parse_vec<3>(v, path, field);
        else if (k == "axis_v") o.axis_v = detail::parse_vec<3>(v, path, field);
        else if (k == "half") o.half_extents = detail::parse_vec<3>(v, path, field);
        else if (k == "yaw") num(o.yaw);
        else if (k == "texture") {
          if (!parse_number(v, o.texture.id)) throw IoError(path, field, "bad texture id '" + v + "'");
        } else if (k == "wavelength") o.texture.wavelength = detail::parse_vec<2>(v, path, field);
        else if (k == "albedo") o.texture.albedo = detail::parse_vec<3>(v, path, field);
        else if (k == "contrast") num(o.texture.contrast);
        else if (k == "checker") num(o.texture.checker);
        else if (k == "v_perspective") num(o.texture.v_perspective);
        else if (k == "velocity") o.velocity = detail::parse_vec<3>(v, path, field);
        else throw IoError(path, field, "unknown object field");
      }
      if (o.texture.wavelength.minCoeff() <= 0.0) throw IoError(path, where, "texture wavelength must be positive");
      s.objects.push_back(o);
    } else {
      throw IoError(path, where, "unknown scene key");
    }
  }
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw IoError(path, "scene", e.what());
  }
  return s;
}

}  // namespace monorec::io
