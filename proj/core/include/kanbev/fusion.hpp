#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "kanbev/geometry.hpp"
#include "kanbev/nnprims.hpp"
#include "kanbev/tensor.hpp"
#include "kanbev/voxelpool.hpp"

namespace kanbev {

// 3-D box in ego coordinates. size = (w, l, h) with w along x and l along y
// when yaw is zero.
struct DetectionBox {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  double yaw = 0.0;
  std::array<double, 2> velocity{0.0, 0.0};
  int class_id = 0;
  double score = 1.0;
  int attribute_id = -1;  // -1: class has no attribute

  void validate() const;
};

}  // namespace kanbev

// Detection-head fusion: image-feature aggregation, BEV cell fusion,
// heatmap-prior radar matching, and the training losses.
namespace kanbev::fusion {

std::vector<double> aggregate_image_features(std::span<const std::vector<double>> features,
                                             std::span<const double> weights);

// f_final(p) = f_bev(p) + f_radar(p) + f_depth(p), all C x ny x nx.
Tensor fuse_bev_features(const Tensor& bev, const Tensor& radar, const Tensor& depth);

// Axis-aligned BEV IoU over the (x, y, w, l) footprints; yaw ignored.
double iou_bev(const DetectionBox& a, const DetectionBox& b);

struct RadarMatch {
  std::size_t box_index = 0;
  int row = 0;
  int col = 0;
  std::size_t cell = 0;  // row * nx + col
  double iou = 0.0;
  std::array<double, 4> q{};  // (x, y, vx, vy) of the radar box
};

// Valid regions are heatmap cells whose best class score reaches
// score_thresh, each with a one-cell footprint. Every radar box takes its
// highest-IoU valid cell (lowest flat index on ties) if IoU >= iou_thresh.
std::vector<RadarMatch> match_radar_to_heatmap(std::span<const DetectionBox> radar_boxes, const Tensor& heatmap,
                                               const voxelpool::BevGridConfig& grid, double score_thresh,
                                               double iou_thresh);

// 4 x ny x nx map with the q rows of matched cells; zero elsewhere.
Tensor radar_query_map(std::span<const RadarMatch> matches, const voxelpool::BevGridConfig& grid);

struct DetectionLoss {
  double total = 0.0;
  double heatmap = 0.0;
  double bbox = 0.0;
  bool no_matched_boxes = false;
};

inline constexpr double kProbClamp = 1e-7;

// Box parameter vector used by the L1 term: x y z w l h yaw vx vy.
std::array<double, 9> box_parameters(const DetectionBox& b);

DetectionLoss detection_loss(const Tensor& heatmap_pred, const Tensor& heatmap_gt,
                             std::span<const std::pair<DetectionBox, DetectionBox>> matched);

struct DepthLoss {
  double value = 0.0;
  std::size_t supervised_pixels = 0;
};

// Mean over supervised pixels of the per-pixel BCE averaged over bins, with
// a one-hot target at the nearest bin. Pixels that are missing or whose
// depth lies outside [d_min, d_max] are not supervised.
DepthLoss depth_bce_loss(const Tensor& prob, const DepthMap& target, const nn::DepthBinSpec& bins);

}  // namespace kanbev::fusion
