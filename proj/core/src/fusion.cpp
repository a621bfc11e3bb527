#include "kanbev/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kanbev/error.hpp"

namespace kanbev {

void DetectionBox::validate() const {
  if (!center.allFinite() || !std::isfinite(yaw) || !std::isfinite(velocity[0]) || !std::isfinite(velocity[1])) {
    throw ValidationError("box: non-finite field");
  }
  if (!(size.minCoeff() > 0.0)) throw ValidationError("box: sizes must be positive");
  if (!(score >= 0.0 && score <= 1.0)) throw ValidationError("box: score must lie in [0, 1]");
}

}  // namespace kanbev

namespace kanbev::fusion {

namespace {

double bce(double p, double y) {
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

}  // namespace

std::vector<double> aggregate_image_features(std::span<const std::vector<double>> features,
                                             std::span<const double> weights) {
  if (features.empty()) throw ValidationError("aggregate_image_features: empty feature list");
  if (features.size() != weights.size()) throw ValidationError("aggregate_image_features: one weight per feature");
  const std::size_t c = features.front().size();
  std::vector<double> out(c, 0.0);
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j].size() != c) throw ValidationError("aggregate_image_features: ragged feature lengths");
    if (!std::isfinite(weights[j])) throw ValidationError("aggregate_image_features: non-finite weight");
    for (std::size_t k = 0; k < c; ++k) out[k] += weights[j] * features[j][k];
  }
  return out;
}

Tensor fuse_bev_features(const Tensor& bev, const Tensor& radar, const Tensor& depth) {
  if (bev.rank() != 3 || radar.shape() != bev.shape() || depth.shape() != bev.shape()) {
    throw ValidationError("fuse_bev_features: shape mismatch " + shape_string(bev.shape()) + ", " +
                          shape_string(radar.shape()) + ", " + shape_string(depth.shape()));
  }
  Tensor out(bev.shape());
  auto dst = out.data();
  const auto a = bev.data(), b = radar.data(), c = depth.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] + b[i] + c[i];
  return out;
}

double iou_bev(const DetectionBox& a, const DetectionBox& b) {
  const double ax0 = a.center.x() - a.size.x() / 2, ax1 = a.center.x() + a.size.x() / 2;
  const double ay0 = a.center.y() - a.size.y() / 2, ay1 = a.center.y() + a.size.y() / 2;
  const double bx0 = b.center.x() - b.size.x() / 2, bx1 = b.center.x() + b.size.x() / 2;
  const double by0 = b.center.y() - b.size.y() / 2, by1 = b.center.y() + b.size.y() / 2;
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  const double uni = a.size.x() * a.size.y() + b.size.x() * b.size.y() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<RadarMatch> match_radar_to_heatmap(std::span<const DetectionBox> radar_boxes, const Tensor& heatmap,
                                               const voxelpool::BevGridConfig& grid, double score_thresh,
                                               double iou_thresh) {
  if (!(score_thresh >= 0.0 && score_thresh <= 1.0) || !(iou_thresh >= 0.0 && iou_thresh <= 1.0)) {
    throw ValidationError("match_radar_to_heatmap: thresholds must lie in [0, 1]");
  }
  if (heatmap.rank() != 3 || heatmap.extent(1) != static_cast<std::size_t>(grid.ny) ||
      heatmap.extent(2) != static_cast<std::size_t>(grid.nx)) {
    throw ValidationError("match_radar_to_heatmap: heatmap shape does not match the BEV grid");
  }
  const std::size_t plane = heatmap.extent(1) * heatmap.extent(2);
  const auto hm = heatmap.data();

  struct Region {
    std::size_t cell;
    DetectionBox box;
  };
  std::vector<Region> regions;
  for (std::size_t cell = 0; cell < plane; ++cell) {
    double best = 0.0;
    for (std::size_t k = 0; k < heatmap.extent(0); ++k) best = std::max(best, hm[k * plane + cell]);
    if (best < score_thresh) continue;
    const int row = static_cast<int>(cell / static_cast<std::size_t>(grid.nx));
    const int col = static_cast<int>(cell % static_cast<std::size_t>(grid.nx));
    const auto [cx, cy] = grid.cell_center(col, row);
    DetectionBox b;
    b.center = Vec3(cx, cy, 0.0);
    b.size = Vec3(grid.dx(), grid.dy(), 1.0);
    regions.push_back({cell, b});
  }

  std::vector<RadarMatch> out;
  for (std::size_t i = 0; i < radar_boxes.size(); ++i) {
    const Region* best = nullptr;
    double best_iou = -1.0;
    for (const auto& r : regions) {
      const double iou = iou_bev(radar_boxes[i], r.box);
      if (iou > best_iou) {  // regions ascend by cell, so ties keep the lower index
        best_iou = iou;
        best = &r;
      }
    }
    if (best == nullptr || best_iou < iou_thresh || best_iou <= 0.0) continue;
    const auto& rb = radar_boxes[i];
    out.push_back({i, static_cast<int>(best->cell / static_cast<std::size_t>(grid.nx)),
                   static_cast<int>(best->cell % static_cast<std::size_t>(grid.nx)), best->cell, best_iou,
                   {rb.center.x(), rb.center.y(), rb.velocity[0], rb.velocity[1]}});
  }
  return out;
}

Tensor radar_query_map(std::span<const RadarMatch> matches, const voxelpool::BevGridConfig& grid) {
  const std::size_t plane = static_cast<std::size_t>(grid.nx) * grid.ny;
  Tensor q({4, static_cast<std::size_t>(grid.ny), static_cast<std::size_t>(grid.nx)});
  auto d = q.data();
  for (const auto& m : matches) {
    for (std::size_t k = 0; k < 4; ++k) d[k * plane + m.cell] = m.q[k];
  }
  return q;
}

std::array<double, 9> box_parameters(const DetectionBox& b) {
  return {b.center.x(), b.center.y(), b.center.z(), b.size.x(), b.size.y(), b.size.z(),
          b.yaw, b.velocity[0], b.velocity[1]};
}

DetectionLoss detection_loss(const Tensor& heatmap_pred, const Tensor& heatmap_gt,
                             std::span<const std::pair<DetectionBox, DetectionBox>> matched) {
  if (heatmap_pred.shape() != heatmap_gt.shape()) {
    throw ValidationError("detection_loss: heatmap shapes differ " + shape_string(heatmap_pred.shape()) +
                          " vs " + shape_string(heatmap_gt.shape()));
  }
  DetectionLoss loss;
  const auto p = heatmap_pred.data();
  const auto y = heatmap_gt.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(y[i] >= 0.0 && y[i] <= 1.0)) throw ValidationError("detection_loss: target heatmap outside [0, 1]");
    acc += bce(p[i], y[i]);
  }
  loss.heatmap = acc / static_cast<double>(p.size());

  if (matched.empty()) {
    loss.no_matched_boxes = true;
  } else {
    double l1 = 0.0;
    for (const auto& [pred, gt] : matched) {
      const auto a = box_parameters(pred);
      const auto b = box_parameters(gt);
      for (std::size_t k = 0; k < a.size(); ++k) l1 += std::abs(a[k] - b[k]);
    }
    loss.bbox = l1 / static_cast<double>(matched.size() * 9);
  }
  loss.total = loss.heatmap + loss.bbox;
  return loss;
}

DepthLoss depth_bce_loss(const Tensor& prob, const DepthMap& target, const nn::DepthBinSpec& bins) {
  bins.validate();
  if (prob.rank() != 3 || prob.extent(0) != bins.count || prob.extent(1) != static_cast<std::size_t>(target.height) ||
      prob.extent(2) != static_cast<std::size_t>(target.width)) {
    throw ValidationError("depth_bce_loss: distribution " + shape_string(prob.shape()) +
                          " does not match target " + std::to_string(target.height) + "x" +
                          std::to_string(target.width) + " with " + std::to_string(bins.count) + " bins");
  }
  const std::size_t plane = static_cast<std::size_t>(target.height) * target.width;
  const auto pd = prob.data();
  DepthLoss out;
  double acc = 0.0;
  for (std::size_t px = 0; px < plane; ++px) {
    const double d = target.values[px];
    if (d == DepthMap::kMissing) continue;
    const int hot = bins.nearest_bin(d);
    if (hot < 0) continue;
    double pixel = 0.0;
    for (std::size_t l = 0; l < bins.count; ++l) {
      pixel += bce(pd[l * plane + px], static_cast<int>(l) == hot ? 1.0 : 0.0);
    }
    acc += pixel / static_cast<double>(bins.count);
    ++out.supervised_pixels;
  }
  if (out.supervised_pixels == 0) throw ValidationError("depth_bce_loss: no supervised pixels");
  out.value = acc / static_cast<double>(out.supervised_pixels);
  return out;
}

}  // namespace kanbev::fusion
