#include <gtest/gtest.h>

#include <algorithm>

#include "monorec/maskgen.hpp"
#include "support.hpp"

using namespace monorec;
namespace ts = testing_support;

namespace {

PixelMetrics metrics_1x1(double m1, double m2, double m3) {
  PixelMetrics m{Grid<double>(1, 1, 1, m1), Grid<double>(1, 1, 1, m2), Grid<double>(1, 1, 1, m3),
                 Mask(1, 1, 1, 1), Mask(1, 1, 1, 1), Mask(1, 1, 1, 1)};
  return m;
}

InstanceMask box(int frame, int id, const std::string& label, int w, int h, int x0, int y0, int x1, int y1) {
  InstanceMask inst{frame, id, label, Mask(w, h, 1, 0)};
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) inst.pixels(x, y) = 1;
  return inst;
}

Mask fill_fraction(const InstanceMask& inst, double fraction) {
  Mask m(inst.pixels.width(), inst.pixels.height(), 1, 0);
  const auto target = static_cast<std::size_t>(fraction * inst.area() + 0.5);
  std::size_t set = 0;
  for (std::size_t k = 0; k < m.data().size() && set < target; ++k) {
    if (inst.pixels.data()[k]) m.data()[k] = 1, ++set;
  }
  return m;
}

}  // namespace

TEST(TwoOfThree, Examples) {
  const MovingThresholds t;
  EXPECT_EQ(classify_moving_pixels(metrics_1x1(0.4, 0.3, 1.0), t)(0, 0), 1);
  EXPECT_EQ(classify_moving_pixels(metrics_1x1(0.4, 0.1, 1.6), t)(0, 0), 1);
  EXPECT_EQ(classify_moving_pixels(metrics_1x1(0.1, 0.3, 1.6), t)(0, 0), 1);
  EXPECT_EQ(classify_moving_pixels(metrics_1x1(0.4, 0.1, 1.0), t)(0, 0), 0);
  EXPECT_EQ(classify_moving_pixels(metrics_1x1(0.3, 0.25, 1.5), t)(0, 0), 0);  // strict comparison
}

TEST(TwoOfThree, InvalidCuesNeverVote) {
  PixelMetrics m = metrics_1x1(0.9, 0.9, 3.0);
  m.stereo_valid(0, 0) = 0;
  m.temporal_valid(0, 0) = 0;
  EXPECT_EQ(classify_moving_pixels(m, {})(0, 0), 0);
}

TEST(TwoOfThree, RaisingThresholdsNeverAddsPixels) {
  ts::Rng rng(51);
  for (int trial = 0; trial < 500; ++trial) {
    PixelMetrics m{ts::random_image(rng, 6, 6), ts::random_image(rng, 6, 6), ts::random_image(rng, 6, 6, 1, 1.0, 3.0),
                   Mask(6, 6, 1, 1), Mask(6, 6, 1, 1), Mask(6, 6, 1, 1)};
    const MovingThresholds lo{ts::uniform(rng, 0.05, 0.9), ts::uniform(rng, 0.05, 0.9), ts::uniform(rng, 1.0, 2.5)};
    MovingThresholds hi = lo;
    hi.stereo_error += ts::uniform(rng, 0, 0.3);
    hi.temporal_error += ts::uniform(rng, 0, 0.3);
    hi.depth_ratio += ts::uniform(rng, 0, 0.5);
    const Mask a = classify_moving_pixels(m, lo), b = classify_moving_pixels(m, hi);
    for (std::size_t k = 0; k < a.data().size(); ++k) ASSERT_LE(b.data()[k], a.data()[k]);
  }
}

TEST(InstanceRule, FractionExamples) {
  EXPECT_TRUE(instance_moving_decision({0.5, 0.5, 0.5}));
  EXPECT_FALSE(instance_moving_decision({0.35, 0.35, 0.35}));
  EXPECT_TRUE(instance_moving_decision({0.41}));
  EXPECT_FALSE(instance_moving_decision({0.4}));
  EXPECT_FALSE(instance_moving_decision({}));
}

TEST(InstanceMatching, GreedyByIouAndSameClass) {
  const int w = 20, h = 10;
  const std::vector<InstanceMask> prev{box(0, 1, "car", w, h, 0, 0, 5, 5), box(0, 2, "car", w, h, 10, 0, 15, 5)};
  const std::vector<InstanceMask> cur{box(1, 1, "car", w, h, 1, 0, 6, 5), box(1, 2, "person", w, h, 10, 0, 15, 5)};
  const auto chains = match_instances(prev, cur, {}, 0.25);
  ASSERT_EQ(chains.size(), 2u);
  EXPECT_EQ(chains[0].previous, std::optional<std::size_t>(0));
  EXPECT_FALSE(chains[1].previous.has_value());  // label differs
  EXPECT_EQ(chains[0].length(), 2u);
}

TEST(InstanceMatching, IouExamples) {
  const int w = 20, h = 10;
  const auto a = box(0, 1, "car", w, h, 0, 0, 4, 4);
  EXPECT_EQ(iou(a.pixels, a.pixels), 1.0);
  EXPECT_EQ(iou(a.pixels, box(0, 2, "car", w, h, 10, 0, 14, 4).pixels), 0.0);
  const auto half = box(1, 1, "car", w, h, 2, 0, 6, 4);
  EXPECT_NEAR(iou(a.pixels, half.pixels), 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(match_instances({a}, {half}, {}, 0.25)[0].previous.has_value());
}

TEST(InstanceMatching, EmptyInstancesAreExcluded) {
  const InstanceMask empty{1, 1, "car", Mask(4, 4, 1, 0)};
  EXPECT_TRUE(match_instances({}, {empty}, {}).empty());
}

TEST(InstanceMatching, LowIouIsUnmatched) {
  const int w = 20, h = 10;
  const std::vector<InstanceMask> prev{box(0, 1, "car", w, h, 0, 0, 4, 4)};
  const std::vector<InstanceMask> cur{box(1, 1, "car", w, h, 3, 0, 7, 4)};
  EXPECT_NEAR(iou(prev[0].pixels, cur[0].pixels), 4.0 / 28.0, 1e-15);
  EXPECT_FALSE(match_instances(prev, cur, {}, 0.25)[0].previous.has_value());
}

TEST(AuxMask, FlagsMovingInstanceAndSparesStatic) {
  const int w = 30, h = 10;
  const auto mover = box(1, 1, "car", w, h, 0, 0, 6, 6);
  const auto parked = box(1, 2, "car", w, h, 20, 0, 26, 6);
  Mask moving = fill_fraction(mover, 0.8);
  const Mask noise = fill_fraction(parked, 0.2);
  for (std::size_t k = 0; k < moving.data().size(); ++k) moving.data()[k] |= noise.data()[k];
  const std::vector<InstanceMask> insts{mover, parked};
  const Mask aux = compose_aux_mask({}, {insts, &moving}, {}, {0.25, 0.4, {"car"}}, w, h);
  EXPECT_EQ(aux, mover.pixels);
}

TEST(AuxMask, ChainAveragesAcrossFrames) {
  const int w = 20, h = 10;
  const auto a = box(0, 1, "car", w, h, 0, 0, 6, 6);
  const auto b = box(1, 1, "car", w, h, 1, 0, 7, 6);
  const auto c = box(2, 1, "car", w, h, 2, 0, 8, 6);
  const Mask ma = fill_fraction(a, 0.9), mb = fill_fraction(b, 0.3), mc = fill_fraction(c, 0.9);
  // mean 0.7 > 0.4 although frame t alone would fail
  const Mask aux = compose_aux_mask({{a}, &ma}, {{b}, &mb}, {{c}, &mc}, {}, w, h);
  EXPECT_EQ(aux, b.pixels);
  const Mask alone = compose_aux_mask({}, {{b}, &mb}, {}, {}, w, h);
  EXPECT_EQ(std::count(alone.data().begin(), alone.data().end(), 1), 0);
}

TEST(AuxMask, ExcludesNonMovableClassesAndStaysInsideInstances) {
  ts::Rng rng(52);
  const int w = 24, h = 12;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<InstanceMask> insts;
    for (int i = 0; i < 3; ++i) {
      const int x0 = 8 * i, y0 = ts::uniform_int(rng, 0, 5);
      insts.push_back(box(1, i + 1, i == 1 ? "tree" : "car", w, h, x0, y0, x0 + ts::uniform_int(rng, 2, 8), y0 + 6));
    }
    Mask moving(w, h);
    for (auto& v : moving.data()) v = ts::uniform(rng, 0, 1) < 0.6;
    const Mask aux = compose_aux_mask({}, {insts, &moving}, {}, {0.25, 0.4, {"car"}}, w, h);
    for (std::size_t k = 0; k < aux.data().size(); ++k) {
      if (!aux.data()[k]) continue;
      ASSERT_TRUE(insts[0].pixels.data()[k] || insts[2].pixels.data()[k]);
    }
  }
}

TEST(PixelMetrics, IdenticalViewsAreStatic) {
  ts::Rng rng(53);
  const Frame f = ts::make_frame(ts::random_image(rng, 12, 10, 3));
  const MaskGenFrames in{f, {f, f}, f};
  const Grid<double> depth(12, 10, 1, 0.3);
  const auto m = pixel_metrics(in, depth, depth);
  for (std::size_t k = 0; k < depth.data().size(); ++k) {
    EXPECT_NEAR(m.stereo_error.data()[k], 0.0, 1e-15);
    EXPECT_NEAR(m.temporal_error.data()[k], 0.0, 1e-15);
    EXPECT_EQ(m.depth_ratio.data()[k], 1.0);
  }
  const Mask moving = classify_moving_pixels(m, {});
  EXPECT_EQ(std::count(moving.data().begin(), moving.data().end(), 1), 0);
}

TEST(PixelMetrics, DepthRatioIsSymmetric) {
  ts::Rng rng(54);
  const Frame f = ts::make_frame(ts::random_image(rng, 6, 6));
  const MaskGenFrames in{f, {f}, f};
  const Grid<double> a(6, 6, 1, 0.2), b(6, 6, 1, 0.5);
  EXPECT_NEAR(pixel_metrics(in, a, b).depth_ratio(3, 3), 2.5, 1e-15);
  EXPECT_NEAR(pixel_metrics(in, b, a).depth_ratio(3, 3), 2.5, 1e-15);
  EXPECT_THROW(pixel_metrics({f, {f}, std::nullopt}, a, b), std::invalid_argument);
}

TEST(MaskHelpers, BinarizeAtThreshold) {
  MovingMask m(3, 1);
  m(0, 0) = 0.49;
  m(1, 0) = 0.5;
  m(2, 0) = 0.9;
  const Mask b = binarize(m);
  EXPECT_EQ(b(0, 0), 0);
  EXPECT_EQ(b(1, 0), 1);
  EXPECT_EQ(to_probability(b)(2, 0), 1.0);
}
