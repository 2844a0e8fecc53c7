#include <gtest/gtest.h>

#include <cmath>

#include "monorec/geometry.hpp"
#include "support.hpp"

using namespace monorec;
namespace ts = testing_support;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Intrinsics, Validation) {
  EXPECT_TRUE((CameraIntrinsics{100, 100, 64, 32, 128, 64}.valid()));
  EXPECT_THROW((CameraIntrinsics{0, 100, 64, 32, 128, 64}.validate()), std::invalid_argument);
  EXPECT_THROW((CameraIntrinsics{100, 100, 128, 32, 128, 64}.validate()), std::invalid_argument);
  EXPECT_THROW((CameraIntrinsics{100, 100, 64, 0, 128, 64}.validate()), std::invalid_argument);
}

TEST(Intrinsics, HalvedMatchesAreaDownsampling) {
  // A point projecting to (u, v) at full size lands at ((u - 0.5) / 2, (v - 0.5) / 2)
  // on the 2x2 area-averaged grid.
  const CameraIntrinsics k{100, 80, 64, 16, 128, 64};
  const CameraIntrinsics h = k.halved();
  const Eigen::Vector3d p(0.3, -0.2, 4.0);
  const auto full = project(k, p);
  const auto half = project(h, p);
  EXPECT_NEAR(half.pixel.x(), (full.pixel.x() - 0.5) / 2.0, 1e-12);
  EXPECT_NEAR(half.pixel.y(), (full.pixel.y() - 0.5) / 2.0, 1e-12);
}

TEST(PoseSE3, GroupLawsHoldOnRandomPoses) {
  ts::Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    const PoseSE3 a = ts::random_pose(rng), b = ts::random_pose(rng), c = ts::random_pose(rng);
    ASSERT_TRUE(a.is_valid(1e-9));
    EXPECT_TRUE((a * PoseSE3::identity()).is_approx(a, 1e-12));
    EXPECT_TRUE((PoseSE3::identity() * a).is_approx(a, 1e-12));
    EXPECT_TRUE(((a * b) * c).is_approx(a * (b * c), 1e-9));
    EXPECT_TRUE((a * a.inverse()).is_approx(PoseSE3::identity(), 1e-9));
    EXPECT_TRUE((a * b).inverse().is_approx(b.inverse() * a.inverse(), 1e-9));
    const Eigen::Vector3d p = ts::random_vector(rng, 10.0);
    EXPECT_LT(max_abs(a.inverse() * (a * p) - p), 1e-9);
    EXPECT_LT(max_abs((a * b) * p - a * (b * p)), 1e-9);
  }
}

TEST(PoseSE3, TemplatedApplyMatchesEigenPath) {
  ts::Rng rng(12);
  const PoseSE3 a = ts::random_pose(rng);
  const Eigen::Vector3d p = ts::random_vector(rng, 3.0);
  const auto q = a.apply(std::array<double, 3>{p.x(), p.y(), p.z()});
  const Eigen::Vector3d r = a * p;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(q[i], r(i), 1e-12);
}

TEST(Projection, BackprojectInvertsProjectOnFullGrid) {
  ts::Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraIntrinsics k = ts::random_intrinsics(rng);
    for (int y = 0; y < k.height; ++y) {
      for (int x = 0; x < k.width; ++x) {
        const double inv = ts::uniform(rng, 0.01, 10.0);
        const Eigen::Vector3d p = backproject(k, {x, y}, inv);
        EXPECT_NEAR(p.z(), 1.0 / inv, 1e-9 / inv);
        const auto pr = project(k, p);
        ASSERT_NEAR(pr.pixel.x(), x, 1e-9);
        ASSERT_NEAR(pr.pixel.y(), y, 1e-9);
      }
    }
  }
}

TEST(Projection, Errors) {
  const CameraIntrinsics k{10, 10, 5, 5, 10, 10};
  EXPECT_THROW(project(k, {0, 0, 0}), std::domain_error);
  EXPECT_THROW(project(k, {0, 0, -1}), std::domain_error);
  EXPECT_THROW(backproject(k, {1, 1}, 0.0), std::domain_error);
}

TEST(Bilinear, ExactAtIntegersAndMidpoints) {
  ts::Rng rng(14);
  const Image img = ts::random_image(rng, 6, 5, 2);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      const auto s = bilinear_sample(img, {x, y});
      ASSERT_TRUE(s.valid);
      EXPECT_EQ(s.value[1], img(x, y, 1));
    }
  }
  const auto mid = bilinear_sample(img, {2.5, 3});
  EXPECT_NEAR(mid.value[0], (img(2, 3) + img(3, 3)) / 2, 1e-15);
  EXPECT_FALSE(bilinear_sample(img, {-0.5, 0}).valid);
  EXPECT_FALSE(bilinear_sample(img, {0, 4.5}).valid);
  EXPECT_TRUE(bilinear_sample(img, {5, 4}).valid);
}

TEST(Warp, IdentityPoseIsIdentityMapForAnyDepth) {
  ts::Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const Frame f = ts::make_frame(ts::random_image(rng, 24, 16, 3), ts::random_pose(rng));
    Grid<double> depth(24, 16);
    for (double& d : depth.data()) d = ts::uniform(rng, 0.01, 2.0);
    const auto w = warp_to_keyframe(f, f, depth);
    for (std::size_t k = 0; k < w.valid.data().size(); ++k) ASSERT_EQ(w.valid.data()[k], 1);
    for (std::size_t k = 0; k < w.image.data().size(); ++k) {
      ASSERT_NEAR(w.image.data()[k], f.image.data()[k], 1e-12);
    }
  }
}

TEST(Warp, ShrinkingSourceNeverAddsValidity) {
  ts::Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const Frame key = ts::make_frame(ts::random_image(rng, 20, 14));
    Frame src = ts::make_frame(ts::random_image(rng, 20, 14), ts::random_pose(rng, 0.2, 0.5));
    const double inv = ts::uniform(rng, 0.05, 1.0);
    const auto big = warp_to_keyframe(src, key, inv);
    const int w = ts::uniform_int(rng, 12, 19), h = ts::uniform_int(rng, 9, 13);
    Frame small = src;
    small.image = Image(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) small.image(x, y) = src.image(x, y);
    small.intrinsics.width = w;
    small.intrinsics.height = h;
    const auto cropped = warp_to_keyframe(small, key, inv);
    for (std::size_t k = 0; k < big.valid.data().size(); ++k) {
      ASSERT_LE(cropped.valid.data()[k], big.valid.data()[k]);
    }
  }
}

TEST(Warp, PointsBehindSourceAreInvalid) {
  ts::Rng rng(17);
  const Frame key = ts::make_frame(ts::random_image(rng, 8, 8));
  // Source sits 10 m ahead of the key looking the same way; at depth 1 m every point is behind it.
  const Frame src = ts::make_frame(ts::random_image(rng, 8, 8), PoseSE3({Eigen::Matrix3d::Identity()}, {0, 0, -10}));
  const auto w = warp_to_keyframe(src, key, 1.0);
  for (auto v : w.valid.data()) EXPECT_EQ(v, 0);
}

TEST(Warp, DepthMapShapeMismatchThrows) {
  ts::Rng rng(18);
  const Frame f = ts::make_frame(ts::random_image(rng, 8, 8));
  EXPECT_THROW(warp_to_keyframe(f, f, Grid<double>(7, 8, 1, 0.5)), DimensionError);
}

TEST(Warp, DualDerivativeMatchesFiniteDifference) {
  ts::Rng rng(19);
  Image img(24, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 24; ++x) img(x, y) = 0.5 + 0.3 * std::sin(0.4 * x) * std::cos(0.3 * y);
  const Frame key = ts::make_frame(img);
  const Frame src = ts::make_frame(img, PoseSE3::from_axis_angle({0, 0.02, 0}, {-0.2, 0.05, 0}));
  Grid<Dual> d(24, 16, 1, Dual(0.4));
  d(12, 8).d = 1.0;
  const auto wd = warp_to_keyframe(src, key, d);
  const double h = 1e-6;
  Grid<double> plus(24, 16, 1, 0.4), minus(24, 16, 1, 0.4);
  plus(12, 8) += h;
  minus(12, 8) -= h;
  const double fd = (warp_to_keyframe(src, key, plus).image(12, 8) - warp_to_keyframe(src, key, minus).image(12, 8)) /
                    (2 * h);
  EXPECT_NEAR(wd.image(12, 8).d, fd, 1e-6 * std::max(1.0, std::abs(fd)));
}
