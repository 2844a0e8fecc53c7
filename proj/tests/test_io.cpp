#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <functional>

#include "monorec/costvolume.hpp"
#include "monorec/io/bundle.hpp"
#include "monorec/io/pfm.hpp"
#include "monorec/io/ply.hpp"
#include "monorec/io/png.hpp"
#include "monorec/io/scene_file.hpp"
#include "monorec/io/text.hpp"
#include "monorec/io/volume.hpp"
#include "support.hpp"

using namespace monorec;
namespace ts = testing_support;

namespace {

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const io::IoError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Pfm, RoundTripIsFloatExact) {
  const auto dir = ts::temp_dir("pfm");
  ts::Rng rng(101);
  for (int channels : {1, 3}) {
    Grid<double> g = ts::random_image(rng, 7, 5, channels, -3.0, 3.0);
    for (double& v : g.data()) v = static_cast<float>(v);
    const std::string path = (dir / "g.pfm").string();
    io::write_pfm(path, g);
    EXPECT_EQ(io::read_pfm(path), g);
  }
}

TEST(Pfm, BottomUpRowOrder) {
  const auto dir = ts::temp_dir("pfm_order");
  Grid<double> g(1, 2);
  g(0, 0) = 1.0;
  g(0, 1) = 2.0;
  io::write_pfm((dir / "g.pfm").string(), g);
  const std::string bytes = ts::read_bytes(dir / "g.pfm");
  float first = 0;
  std::memcpy(&first, bytes.data() + bytes.size() - 8, 4);
  EXPECT_EQ(first, 2.0f);  // the bottom row comes first
}

TEST(Pfm, Errors) {
  const auto dir = ts::temp_dir("pfm_err");
  EXPECT_EQ(field_of([&] { io::read_pfm((dir / "none.pfm").string()); }), "");
  std::ofstream((dir / "bad.pfm").string()) << "P6\n1 1\n-1\n";
  EXPECT_EQ(field_of([&] { io::read_pfm((dir / "bad.pfm").string()); }), "header");
  std::ofstream((dir / "short.pfm").string()) << "Pf\n4 4\n-1\nabc";
  EXPECT_EQ(field_of([&] { io::read_pfm((dir / "short.pfm").string()); }), "data");
  EXPECT_EQ(field_of([&] { io::write_pfm((dir / "c2.pfm").string(), Grid<double>(2, 2, 2)); }), "channels");
}

TEST(Png, SixteenBitImageRoundTrip) {
  const auto dir = ts::temp_dir("png16");
  ts::Rng rng(102);
  for (int channels : {1, 3}) {
    const Image img = ts::random_image(rng, 9, 4, channels);
    const std::string path = (dir / "i.png").string();
    io::write_png16(path, img);
    const Image back = io::read_png(path);
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t k = 0; k < img.data().size(); ++k) {
      ASSERT_NEAR(back.data()[k], img.data()[k], 0.5 / 65535.0 + 1e-15);
    }
    io::write_png16(path, back);  // quantized values are a fixed point
    EXPECT_EQ(io::read_png(path), back);
  }
}

TEST(Png, MaskAndLabelRoundTrip) {
  const auto dir = ts::temp_dir("png8");
  ts::Rng rng(103);
  Mask m(11, 6);
  for (auto& v : m.data()) v = ts::uniform(rng, 0, 1) < 0.4;
  io::write_mask_png((dir / "m.png").string(), m);
  EXPECT_EQ(io::read_mask_png((dir / "m.png").string()), m);
  Grid<std::uint8_t> labels(5, 3, 1, 0);
  labels(1, 1) = 7;
  labels(4, 2) = 255;
  io::write_png8((dir / "l.png").string(), labels);
  const Grid<int> back = io::read_label_png((dir / "l.png").string());
  EXPECT_EQ(back(1, 1), 7);
  EXPECT_EQ(back(4, 2), 255);
  EXPECT_EQ(back(0, 0), 0);
  std::ofstream((dir / "x.png").string()) << "not a png";
  EXPECT_EQ(field_of([&] { io::read_png((dir / "x.png").string()); }), "header");
  io::write_png16((dir / "rgb.png").string(), Image(2, 2, 3));
  EXPECT_EQ(field_of([&] { io::read_label_png((dir / "rgb.png").string()); }), "channels");
}

TEST(Ply, HeaderAndVertexLines) {
  const auto dir = ts::temp_dir("ply");
  const std::vector<ColoredPoint> pts{{{1.5, -2.0, 3.25}, {255, 0, 12}}, {{0, 0, 1}, {1, 2, 3}}};
  io::write_ply((dir / "c.ply").string(), pts);
  const std::string text = ts::read_bytes(dir / "c.ply");
  EXPECT_EQ(text.rfind("ply\nformat ascii 1.0\nelement vertex 2\n", 0), 0u);
  EXPECT_NE(text.find("end_header\n1.5 -2 3.25 255 0 12\n0 0 1 1 2 3\n"), std::string::npos);
}

TEST(Text, PosesRoundTripToNineDigitsAndStayOrthonormal) {
  ts::Rng rng(104);
  std::vector<PoseSE3> poses;
  for (int i = 0; i < 50; ++i) poses.push_back(ts::random_pose(rng));
  const auto back = io::parse_poses(io::format_poses(poses), "p.txt");
  ASSERT_EQ(back.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_LT((back[i].rotation() - poses[i].rotation()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((back[i].translation() - poses[i].translation()).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT((back[i].rotation() * back[i].rotation().transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-14);
  }
}

TEST(Text, PoseErrors) {
  EXPECT_EQ(field_of([] { io::parse_poses("1 0 0 0 0 1 0 0 0 0 1\n", "p"); }), "line 1");
  EXPECT_EQ(field_of([] { io::parse_poses("1 0 0 0 0 1 0 0 0 0 1 0 9\n", "p"); }), "line 1");
  EXPECT_EQ(field_of([] { io::parse_poses("\n2 0 0 0 0 1 0 0 0 0 1 0\n", "p"); }), "line 2");
  EXPECT_EQ(field_of([] { io::parse_poses("-1 0 0 0 0 1 0 0 0 0 1 0\n", "p"); }), "line 1");  // reflection
}

TEST(Text, IntrinsicsSparseAndClasses) {
  const CameraIntrinsics k{100.5, 99.25, 64, 16, 128, 64};
  EXPECT_EQ(io::parse_intrinsics(io::format_intrinsics(k), "k"), k);
  EXPECT_EQ(field_of([] { io::parse_intrinsics("1 2 3\n", "k"); }), "fx fy cx cy");
  EXPECT_EQ(field_of([] { io::parse_intrinsics("-1 2 3 4\n10 10\n", "k"); }), "intrinsics");

  std::vector<SparseDepth> sparse(3);
  sparse[0].samples = {{1, 2, 0.25}, {3, 4, 0.125}};
  sparse[2].samples = {{5, 6, 0.5}};
  const auto sparse_back = io::parse_sparse(io::format_sparse(sparse), 3, "s");
  ASSERT_EQ(sparse_back.size(), 3u);
  for (int f = 0; f < 3; ++f) EXPECT_EQ(sparse_back[f].samples, sparse[f].samples);
  EXPECT_EQ(field_of([] { io::parse_sparse("frame,u,v,inv_depth\n5,1,1,0.2\n", 3, "s"); }), "frame");
  EXPECT_EQ(field_of([] { io::parse_sparse("frame,u,v,inv_depth\n0,1,1,-0.2\n", 3, "s"); }), "inv_depth");
  EXPECT_EQ(field_of([] { io::parse_sparse("frame,u,v,inv_depth\n0,1\n", 3, "s"); }), "line 2");

  const std::map<int, std::string> classes{{1, "car"}, {4, "person"}};
  EXPECT_EQ(io::parse_classes(io::format_classes(classes), "c"), classes);
}

TEST(Volume, RoundTrip) {
  const auto dir = ts::temp_dir("volume");
  ts::Rng rng(105);
  const DepthRange r{0.05, 0.5, 6};
  CostVolume v{r, VolumeKind::static_stereo, StepStack<double>(5, 4, 6, 0.0), StepStack<std::uint16_t>(5, 4, 6, 0)};
  for (double& s : v.scores.data) s = static_cast<float>(ts::uniform(rng, -1, 1));
  for (auto& c : v.valid_counts.data) c = static_cast<std::uint16_t>(ts::uniform_int(rng, 0, 2));
  io::write_volume((dir / "v").string(), v);
  const CostVolume back = io::read_volume((dir / "v").string());
  EXPECT_EQ(back.range, r);
  EXPECT_EQ(back.kind, VolumeKind::static_stereo);
  EXPECT_EQ(back.scores.data, v.scores.data);
  EXPECT_EQ(back.valid_counts.data, v.valid_counts.data);
  io::write_text((dir / "v" / "volume.txt").string(), "0.05 0.5 7 4 5 aggregated\n");
  EXPECT_EQ(field_of([&] { io::read_volume((dir / "v").string()); }), "size");
  io::write_text((dir / "v" / "volume.txt").string(), "0.05 0.5 6 4 5 sideways\n");
  EXPECT_EQ(field_of([&] { io::read_volume((dir / "v").string()); }), "header");
}

TEST(Bundle, RoundTripKeepsEverythingDownstreamNeeds) {
  const auto dir = ts::temp_dir("bundle");
  const auto b = synth::render(synth::standard_scene());
  io::write_bundle(dir.string(), b);
  const auto r = io::read_bundle(dir.string());
  ASSERT_EQ(r.frame_count(), b.frame_count());
  EXPECT_EQ(r.keyframe(), b.keyframe());
  EXPECT_EQ(r.spec.intrinsics, b.spec.intrinsics);
  EXPECT_EQ(r.spec.movable_classes, b.spec.movable_classes);
  for (int k = 0; k < b.frame_count(); ++k) {
    EXPECT_LT((r.frames[k].pose.translation() - b.frames[k].pose.translation()).norm(), 1e-8);
    EXPECT_LT((r.stereo[k].pose.translation() - b.stereo[k].pose.translation()).norm(), 1e-8);
    EXPECT_LT((r.frames[k].pose.rotation() - b.frames[k].pose.rotation()).norm(), 1e-8);
    EXPECT_EQ(r.moving[k], b.moving[k]);
    ASSERT_EQ(r.instances[k].size(), b.instances[k].size());
    for (std::size_t i = 0; i < b.instances[k].size(); ++i) {
      EXPECT_EQ(r.instances[k][i].label, b.instances[k][i].label);
      EXPECT_EQ(r.instances[k][i].pixels, b.instances[k][i].pixels);
    }
    for (std::size_t p = 0; p < b.inv_depth[k].data().size(); ++p) {
      ASSERT_EQ(r.inv_depth[k].data()[p], static_cast<float>(b.inv_depth[k].data()[p]));
    }
    for (std::size_t p = 0; p < b.frames[k].image.data().size(); ++p) {
      ASSERT_NEAR(r.frames[k].image.data()[p], b.frames[k].image.data()[p], 0.5 / 65535.0 + 1e-15);
    }
    ASSERT_EQ(r.sparse[k].samples.size(), b.sparse[k].samples.size());
  }
  // Writing what was read reproduces the files byte for byte.
  const auto dir2 = ts::temp_dir("bundle2");
  io::write_bundle(dir2.string(), r);
  for (const char* f : {"poses.txt", "sparse.csv", "images/frame_000002.png", "depth/frame_000002.pfm"}) {
    EXPECT_EQ(ts::read_bytes(dir / f), ts::read_bytes(dir2 / f)) << f;
  }
}

TEST(Bundle, MissingPiecesAreReported) {
  const auto dir = ts::temp_dir("bundle_err");
  io::write_bundle(dir.string(), synth::render(synth::standard_scene()));
  std::filesystem::remove(dir / "depth" / "frame_000003.pfm");
  try {
    io::read_bundle(dir.string());
    FAIL();
  } catch (const io::IoError& e) {
    EXPECT_NE(e.file().find("frame_000003.pfm"), std::string::npos);
  }
  io::write_text((dir / "bundle.txt").string(), "frames 5\ncolour 1\n");
  EXPECT_EQ(field_of([&] { io::read_bundle(dir.string()); }), "colour");
}

TEST(SceneFile, RoundTripRendersIdentically) {
  auto spec = synth::standard_scene(9);
  spec.image_noise = 0.01;
  const auto back = io::parse_scene(io::format_scene(spec), "s.scene");
  EXPECT_EQ(io::format_scene(back), io::format_scene(spec));
  const auto a = synth::render(spec), b = synth::render(back);
  EXPECT_EQ(a.frames[2].image, b.frames[2].image);
  EXPECT_EQ(a.inv_depth[1], b.inv_depth[1]);
}

TEST(SceneFile, Errors) {
  EXPECT_NE(field_of([] { io::parse_scene("keyframe two\n", "s"); }).find("keyframe"), std::string::npos);
  EXPECT_NE(field_of([] { io::parse_scene("object name=a center=1,2\n", "s"); }).find("object.center"),
            std::string::npos);
  EXPECT_NE(field_of([] { io::parse_scene("object name=a oops\n", "s"); }).find("object"), std::string::npos);
}
