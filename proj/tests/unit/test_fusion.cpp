#include <gtest/gtest.h>

#include <cmath>

#include "kanbev/error.hpp"
#include "kanbev/fusion.hpp"
#include "test_support.hpp"

namespace {

using namespace kanbev;
using namespace kanbev::fusion;

DetectionBox box_at(double x, double y, double w, double l) {
  DetectionBox b;
  b.center = Vec3(x, y, 0);
  b.size = Vec3(w, l, 1);
  return b;
}

TEST(IouBev, KnownOverlaps) {
  EXPECT_DOUBLE_EQ(iou_bev(box_at(0, 0, 2, 2), box_at(0, 0, 2, 2)), 1.0);
  EXPECT_DOUBLE_EQ(iou_bev(box_at(0, 0, 2, 2), box_at(1, 0, 2, 2)), 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(iou_bev(box_at(0, 0, 2, 2), box_at(2, 0, 2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(iou_bev(box_at(0, 0, 4, 4), box_at(0, 0, 1, 1)), 1.0 / 16.0);
  DetectionBox rotated = box_at(0, 0, 2, 2);
  rotated.yaw = 0.7;
  EXPECT_DOUBLE_EQ(iou_bev(rotated, box_at(0, 0, 2, 2)), 1.0);
}

TEST(IouBev, SymmetricAndBounded) {
  SplitMix64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto a = box_at(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.1, 3), rng.uniform(0.1, 3));
    const auto b = box_at(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.1, 3), rng.uniform(0.1, 3));
    const double v = iou_bev(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(v, iou_bev(b, a));
  }
}

TEST(Aggregate, WeightedSum) {
  const std::vector<std::vector<double>> f{{1, 2}, {3, 4}, {-1, 0}};
  const std::vector<double> w{0.5, 2.0, 1.0};
  EXPECT_EQ(aggregate_image_features(f, w), (std::vector<double>{5.5, 9.0}));
  EXPECT_THROW(aggregate_image_features(f, std::vector<double>{1.0}), ValidationError);
}

TEST(FuseBev, ElementwiseSumAndShapeCheck) {
  SplitMix64 rng(2);
  const Tensor a = testkit::random_tensor({2, 3, 4}, rng), b = testkit::random_tensor({2, 3, 4}, rng),
               c = testkit::random_tensor({2, 3, 4}, rng);
  const Tensor s = fuse_bev_features(a, b, c);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i], a[i] + b[i] + c[i]);
  EXPECT_THROW(fuse_bev_features(a, b, Tensor({2, 3, 5})), ValidationError);
}

voxelpool::BevGridConfig grid4() {
  voxelpool::BevGridConfig g;
  g.x_min = 0;
  g.x_max = 4;
  g.y_min = 0;
  g.y_max = 4;
  g.nx = 4;
  g.ny = 4;
  return g;
}

TEST(RadarMatch, AgreesWithAllPairsOracle) {
  SplitMix64 rng(3);
  const auto g = grid4();
  for (int trial = 0; trial < 50; ++trial) {
    Tensor hm({3, 4, 4});
    for (double& v : hm.data()) v = rng.uniform();
    std::vector<DetectionBox> boxes;
    for (int i = 0; i < 6; ++i) {
      auto b = box_at(rng.uniform(-1, 5), rng.uniform(-1, 5), rng.uniform(0.2, 2), rng.uniform(0.2, 2));
      b.velocity = {rng.normal(), rng.normal()};
      boxes.push_back(b);
    }
    const auto got = match_radar_to_heatmap(boxes, hm, g, 0.6, 0.1);
    std::size_t k = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      double best = 0.0;
      int best_cell = -1;
      for (int cell = 0; cell < 16; ++cell) {
        const double score = std::max({hm[cell], hm[16 + cell], hm[32 + cell]});
        if (score < 0.6) continue;
        const double iou = iou_bev(boxes[i], box_at(cell % 4 + 0.5, cell / 4 + 0.5, 1, 1));
        if (iou > best) {
          best = iou;
          best_cell = cell;
        }
      }
      if (best_cell < 0 || best < 0.1) continue;
      ASSERT_LT(k, got.size());
      EXPECT_EQ(got[k].box_index, i);
      EXPECT_EQ(got[k].cell, static_cast<std::size_t>(best_cell));
      EXPECT_EQ(got[k].row, best_cell / 4);
      EXPECT_DOUBLE_EQ(got[k].iou, best);
      EXPECT_EQ(got[k].q[2], boxes[i].velocity[0]);
      ++k;
    }
    EXPECT_EQ(k, got.size());
  }
}

TEST(RadarMatch, TiesGoToLowerCellAndNothingBelowThreshold) {
  const auto g = grid4();
  Tensor hm({1, 4, 4});
  hm[5] = 0.9;
  hm[6] = 0.9;
  const std::vector<DetectionBox> boxes{box_at(2.0, 1.5, 1, 1)};  // straddles cells 5 and 6 equally
  const auto m = match_radar_to_heatmap(boxes, hm, g, 0.5, 0.1);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].cell, 5u);
  EXPECT_TRUE(match_radar_to_heatmap(boxes, hm, g, 0.95, 0.1).empty());
  EXPECT_THROW(match_radar_to_heatmap(boxes, Tensor({1, 3, 4}), g, 0.5, 0.1), ValidationError);
}

TEST(RadarQueryMap, WritesMatchedCellsOnly) {
  const auto g = grid4();
  std::vector<RadarMatch> m(1);
  m[0].cell = 9;
  m[0].q = {1, 2, 3, 4};
  const Tensor q = radar_query_map(m, g);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(q[k * 16 + c], c == 9 ? k + 1.0 : 0.0);
  }
}

TEST(DetectionLoss, HeatmapBceAndBoxL1) {
  Tensor p({1, 1, 2}, std::vector<double>{0.8, 0.0});
  Tensor y({1, 1, 2}, std::vector<double>{1.0, 0.0});
  DetectionBox a = box_at(0, 0, 1, 1), b = box_at(1, -1, 2, 1);
  b.velocity = {0.5, 0};
  const std::vector<std::pair<DetectionBox, DetectionBox>> matched{{a, b}};
  const auto l = detection_loss(p, y, matched);
  const double hm = (-std::log(0.8) - std::log(1.0 - kProbClamp)) / 2.0;
  EXPECT_NEAR(l.heatmap, hm, 1e-15);
  EXPECT_NEAR(l.bbox, (1 + 1 + 1 + 0.5) / 9.0, 1e-15);
  EXPECT_DOUBLE_EQ(l.total, l.heatmap + l.bbox);
  const auto none = detection_loss(p, y, {});
  EXPECT_TRUE(none.no_matched_boxes);
  EXPECT_EQ(none.bbox, 0.0);
  Tensor bad({1, 1, 2}, std::vector<double>{1.5, 0});
  EXPECT_THROW(detection_loss(p, bad, matched), ValidationError);
}

TEST(DepthBce, MatchesLoopOracle) {
  SplitMix64 rng(4);
  const nn::DepthBinSpec bins{2.0, 10.0, 5};
  const Tensor prob = nn::softmax_over_depth(testkit::random_tensor({5, 3, 4}, rng, 2.0));
  DepthMap target(3, 4);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double u = rng.uniform();
      if (u < 0.2) continue;
      target.at(r, c) = u < 0.3 ? 12.0 : rng.uniform(2.0, 10.0);
    }
  }
  double acc = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!target.has(r, c)) continue;
      const double d = target.at(r, c);
      if (d < 2.0 || d > 10.0) continue;
      const int hot = static_cast<int>(std::lround((d - 2.0) / 2.0));
      double px = 0.0;
      for (int l = 0; l < 5; ++l) {
        const double p = std::clamp(prob(static_cast<std::size_t>(l), static_cast<std::size_t>(r), static_cast<std::size_t>(c)),
                                    kProbClamp, 1 - kProbClamp);
        px += l == hot ? -std::log(p) : -std::log(1 - p);
      }
      acc += px / 5.0;
      ++n;
    }
  }
  ASSERT_GT(n, 0u);
  const auto got = depth_bce_loss(prob, target, bins);
  EXPECT_EQ(got.supervised_pixels, n);
  EXPECT_NEAR(got.value, acc / static_cast<double>(n), 1e-13);
}

TEST(DepthBce, EmptyTargetIsAnError) {
  const nn::DepthBinSpec bins{2.0, 10.0, 5};
  EXPECT_THROW(depth_bce_loss(Tensor({5, 2, 2}), DepthMap(2, 2), bins), ValidationError);
  EXPECT_THROW(depth_bce_loss(Tensor({4, 2, 2}), DepthMap(2, 2), bins), ValidationError);
}

}  // namespace
