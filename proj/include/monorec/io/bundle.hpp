#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "monorec/io/pfm.hpp"
#include "monorec/io/png.hpp"
#include "monorec/io/text.hpp"
#include "monorec/synth.hpp"

namespace monorec::io {

inline std::string frame_name(const std::string& prefix, int k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d.%s", prefix.c_str(), k, ext);
  return buf;
}

// Layout: bundle.txt, intrinsics.txt, poses.txt, stereo_poses.txt, sparse.csv,
// images/{frame,stereo}_NNNNNN.png, depth/{frame,stereo}_NNNNNN.pfm (GT
// inverse depth), instances/frame_NNNNNN.png + instances/classes.txt,
// moving/frame_NNNNNN.png.

inline void write_bundle(const std::string& dir, const synth::GroundTruthBundle& b) {
  namespace fs = std::filesystem;
  for (const char* sub : {"images", "depth", "instances", "moving"}) fs::create_directories(fs::path(dir) / sub);
  const auto& spec = b.spec;
  std::string meta = "frames " + std::to_string(b.frame_count()) + "\nkeyframe " + std::to_string(spec.keyframe) +
                     "\nstereo_baseline " + format_number(spec.stereo_baseline) + "\nmovable_classes";
  for (const auto& c : spec.movable_classes) meta += " " + c;
  write_text(dir + "/bundle.txt", meta + "\n");
  write_text(dir + "/intrinsics.txt", format_intrinsics(spec.intrinsics));
  std::vector<PoseSE3> poses, stereo_poses;
  for (int k = 0; k < b.frame_count(); ++k) {
    poses.push_back(b.frames[k].pose);
    stereo_poses.push_back(b.stereo[k].pose);
  }
  write_text(dir + "/poses.txt", format_poses(poses));
  write_text(dir + "/stereo_poses.txt", format_poses(stereo_poses));
  write_text(dir + "/sparse.csv", format_sparse(b.sparse));

  std::map<int, std::string> classes;
  for (int k = 0; k < b.frame_count(); ++k) {
    write_png16(dir + "/images/" + frame_name("frame", k, "png"), b.frames[k].image);
    write_png16(dir + "/images/" + frame_name("stereo", k, "png"), b.stereo[k].image);
    write_pfm(dir + "/depth/" + frame_name("frame", k, "pfm"), b.inv_depth[k]);
    write_pfm(dir + "/depth/" + frame_name("stereo", k, "pfm"), b.stereo_inv_depth[k]);
    Grid<std::uint8_t> labels(b.frames[k].image.width(), b.frames[k].image.height(), 1, 0);
    for (const auto& inst : b.instances[k]) {
      if (inst.id <= 0 || inst.id > 255) throw IoError(dir, "instances", "instance id must be in [1, 255]");
      classes[inst.id] = inst.label;
      for (std::size_t p = 0; p < labels.data().size(); ++p) {
        if (inst.pixels.data()[p]) labels.data()[p] = static_cast<std::uint8_t>(inst.id);
      }
    }
    write_png8(dir + "/instances/" + frame_name("frame", k, "png"), labels);
    write_mask_png(dir + "/moving/" + frame_name("frame", k, "png"), b.moving[k]);
  }
  write_text(dir + "/instances/classes.txt", format_classes(classes));
}

/// Everything needed downstream; surface and object ids are not stored.
inline synth::GroundTruthBundle read_bundle(const std::string& dir) {
  synth::GroundTruthBundle b;
  auto& spec = b.spec;
  {
    const std::string path = dir + "/bundle.txt";
    std::istringstream ss(read_text(path));
    std::string key;
    int frames = -1;
    while (ss >> key) {
      if (key == "frames") ss >> frames;
      else if (key == "keyframe") ss >> spec.keyframe;
      else if (key == "stereo_baseline") ss >> spec.stereo_baseline;
      else if (key == "movable_classes") {
        spec.movable_classes.clear();
        std::string rest;
        std::getline(ss, rest);
        std::istringstream items(rest);
        for (std::string c; items >> c;) spec.movable_classes.push_back(c);
      } else {
        throw IoError(path, key, "unknown bundle key");
      }
      if (!ss) throw IoError(path, key, "cannot parse value");
    }
    if (frames < 1) throw IoError(path, "frames", "missing or invalid frame count");
    spec.intrinsics = parse_intrinsics(read_text(dir + "/intrinsics.txt"), dir + "/intrinsics.txt");
    spec.camera_path = parse_poses(read_text(dir + "/poses.txt"), dir + "/poses.txt");
    if (static_cast<int>(spec.camera_path.size()) != frames) {
      throw IoError(dir + "/poses.txt", "poses", "pose count does not match frame count");
    }
  }
  const int n = spec.frame_count();
  const auto stereo_poses = parse_poses(read_text(dir + "/stereo_poses.txt"), dir + "/stereo_poses.txt");
  if (static_cast<int>(stereo_poses.size()) != n) {
    throw IoError(dir + "/stereo_poses.txt", "poses", "pose count does not match frame count");
  }
  b.sparse = parse_sparse(read_text(dir + "/sparse.csv"), n, dir + "/sparse.csv");
  const auto classes = parse_classes(read_text(dir + "/instances/classes.txt"), dir + "/instances/classes.txt");
  auto check_size = [&](const auto& grid, const std::string& path) {
    if (grid.width() != spec.intrinsics.width || grid.height() != spec.intrinsics.height) {
      throw IoError(path, "size", "does not match intrinsics");
    }
  };
  for (int k = 0; k < n; ++k) {
    const std::string img = dir + "/images/" + frame_name("frame", k, "png");
    const std::string simg = dir + "/images/" + frame_name("stereo", k, "png");
    b.frames.push_back({read_png(img), spec.intrinsics, spec.camera_path[k], FrameRole::temporal});
    b.stereo.push_back({read_png(simg), spec.intrinsics, stereo_poses[k], FrameRole::static_stereo});
    check_size(b.frames.back().image, img);
    check_size(b.stereo.back().image, simg);
    const std::string dpath = dir + "/depth/" + frame_name("frame", k, "pfm");
    const std::string sdpath = dir + "/depth/" + frame_name("stereo", k, "pfm");
    b.inv_depth.push_back(read_pfm(dpath));
    b.stereo_inv_depth.push_back(read_pfm(sdpath));
    check_size(b.inv_depth.back(), dpath);
    check_size(b.stereo_inv_depth.back(), sdpath);
    const std::string ipath = dir + "/instances/" + frame_name("frame", k, "png");
    const Grid<int> labels = read_label_png(ipath);
    check_size(labels, ipath);
    std::vector<InstanceMask> instances;
    for (const auto& [id, label] : classes) {
      InstanceMask inst{k, id, label, Mask(labels.width(), labels.height(), 1, 0)};
      for (std::size_t p = 0; p < labels.data().size(); ++p) inst.pixels.data()[p] = labels.data()[p] == id;
      if (inst.area() > 0) instances.push_back(std::move(inst));
    }
    b.instances.push_back(std::move(instances));
    const std::string mpath = dir + "/moving/" + frame_name("frame", k, "png");
    b.moving.push_back(read_mask_png(mpath));
    check_size(b.moving.back(), mpath);
    try {
      b.sparse[k].validate(spec.intrinsics.width, spec.intrinsics.height);
    } catch (const std::exception& e) {
      throw IoError(dir + "/sparse.csv", "frame " + std::to_string(k), e.what());
    }
  }
  return b;
}

}  // namespace monorec::io
