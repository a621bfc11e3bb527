#include "kanbev/pillars.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

#include "kanbev/error.hpp"
#include "kanbev/rng.hpp"

namespace kanbev::pillars {

void RadarPointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (double v : points[i]) {
      if (!std::isfinite(v)) throw ValidationError("radar cloud: non-finite value at point " + std::to_string(i));
    }
  }
}

void PillarGridConfig::validate() const {
  if (rows <= 0 || cols <= 0) throw ValidationError("pillar grid: rows/cols must be positive");
  if (!(dx > 0.0) || !(dy > 0.0)) throw ValidationError("pillar grid: pillar size must be positive");
  if (std::abs(cols * dx - (x_max - x_min)) > 1e-9 || std::abs(rows * dy - (y_max - y_min)) > 1e-9) {
    throw ValidationError("pillar grid: cols*dx and rows*dy must span the x/y ranges exactly");
  }
  if (max_points < 1) throw ValidationError("pillar grid: T must be >= 1");
  if (max_pillars < 1) throw ValidationError("pillar grid: P_max must be >= 1");
}

std::vector<AugmentedPoint> augment_points(std::span<const RadarPoint> pillar_points,
                                           std::array<double, 2> pillar_center) {
  if (pillar_points.empty()) throw ValidationError("augment_points: empty pillar");
  double mean[3] = {0.0, 0.0, 0.0};
  for (const auto& p : pillar_points) {
    for (int k = 0; k < 3; ++k) mean[k] += p[k];
  }
  const double n = static_cast<double>(pillar_points.size());
  for (double& m : mean) m /= n;

  std::vector<AugmentedPoint> out;
  out.reserve(pillar_points.size());
  for (const auto& p : pillar_points) {
    out.push_back({p[0], p[1], p[2], p[3],
                   p[0] - mean[0], p[1] - mean[1], p[2] - mean[2],
                   p[0] - pillar_center[0], p[1] - pillar_center[1]});
  }
  return out;
}

double pillar_center_distance(std::span<const double> augmented_row) {
  if (augmented_row.size() != kAugmentedDim) throw ValidationError("pillar_center_distance: expected a 9-D row");
  return std::hypot(augmented_row[7], augmented_row[8]);
}

PillarTensor build_pillars(const RadarPointCloud& cloud, const PillarGridConfig& cfg,
                           std::uint64_t seed, BuildReport* report) {
  cfg.validate();
  cloud.validate();
  BuildReport local;

  // Bucket point indices per pillar, pillars in first-occurrence order.
  std::unordered_map<std::size_t, std::size_t> slot_of;
  std::vector<PillarCoord> coords;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    if (!(p[0] >= cfg.x_min && p[0] < cfg.x_max && p[1] >= cfg.y_min && p[1] < cfg.y_max)) {
      ++local.out_of_range;
      continue;
    }
    const int cx = std::min(cfg.cols - 1, static_cast<int>(std::floor((p[0] - cfg.x_min) / cfg.dx)));
    const int cy = std::min(cfg.rows - 1, static_cast<int>(std::floor((p[1] - cfg.y_min) / cfg.dy)));
    const PillarCoord c{cx, cy};
    const auto key = scatter_index(c, cfg.cols);
    auto [it, inserted] = slot_of.try_emplace(key, coords.size());
    if (inserted) {
      coords.push_back(c);
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }

  // Keep the P_max most populated pillars; ties favour earlier pillars.
  std::vector<std::size_t> keep(coords.size());
  std::iota(keep.begin(), keep.end(), 0);
  if (keep.size() > cfg.max_pillars) {
    std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
      return members[a].size() > members[b].size();
    });
    local.truncated_pillars = keep.size() - cfg.max_pillars;
    keep.resize(cfg.max_pillars);
    std::sort(keep.begin(), keep.end());
  }

  const std::size_t t = cfg.max_points;
  PillarTensor out;
  out.max_points = t;
  out.features.assign(keep.size() * t * kAugmentedDim, 0.0);
  out.coords.reserve(keep.size());
  out.point_counts.reserve(keep.size());

  std::vector<RadarPoint> chosen;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto& idx = members[keep[k]];
    const auto& coord = coords[keep[k]];
    std::vector<std::size_t> picked = idx;
    if (picked.size() > t) {
      // Per-pillar stream so the result does not depend on processing order.
      SplitMix64 rng(mix_seed(seed, scatter_index(coord, cfg.cols)));
      for (std::size_t j = 0; j < t; ++j) {
        const std::size_t r = j + static_cast<std::size_t>(rng.bounded(picked.size() - j));
        std::swap(picked[j], picked[r]);
      }
      picked.resize(t);
      std::sort(picked.begin(), picked.end());
      ++local.sampled_pillars;
    }
    chosen.clear();
    for (auto i : picked) chosen.push_back(cloud.points[i]);
    const auto rows = augment_points(chosen, cfg.center(coord.x, coord.y));
    double* dst = out.features.data() + k * t * kAugmentedDim;
    for (const auto& row : rows) {
      std::copy(row.begin(), row.end(), dst);
      dst += kAugmentedDim;
    }
    out.coords.push_back(coord);
    out.point_counts.push_back(rows.size());
  }
  if (report) *report = local;
  return out;
}

void VfeWeights::validate() const {
  if (channels == 0) throw ValidationError("vfe: channel count must be positive");
  if (weight.size() != channels * kAugmentedDim || bias.size() != channels) {
    throw ValidationError("vfe: weights must be shaped 9 -> C");
  }
}

VfeWeights VfeWeights::random(std::size_t channels, std::uint64_t seed) {
  VfeWeights w;
  w.channels = channels;
  SplitMix64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kAugmentedDim));
  w.weight.resize(channels * kAugmentedDim);
  for (auto& v : w.weight) v = scale * rng.normal();
  w.bias.resize(channels);
  for (auto& v : w.bias) v = 0.1 * rng.normal();
  return w;
}

PillarFeatures vfe_forward(const PillarTensor& pillars, const VfeWeights& weights) {
  weights.validate();
  const std::size_t c = weights.channels;
  PillarFeatures out{c, std::vector<double>(pillars.size() * c, 0.0)};
  for (std::size_t p = 0; p < pillars.size(); ++p) {
    const std::size_t n = pillars.point_counts[p];
    if (n == 0 || n > pillars.max_points) throw ValidationError("vfe_forward: bad point count in pillar");
    double* dst = out.values.data() + p * c;
    for (std::size_t s = 0; s < n; ++s) {
      const auto row = pillars.row(p, s);
      for (std::size_t o = 0; o < c; ++o) {
        double acc = weights.bias[o];
        const double* w = weights.weight.data() + o * kAugmentedDim;
        for (std::size_t k = 0; k < kAugmentedDim; ++k) acc += w[k] * row[k];
        const double act = std::max(0.0, acc);
        dst[o] = (s == 0) ? act : std::max(dst[o], act);
      }
    }
  }
  return out;
}

Tensor scatter_to_pseudo_image(const PillarFeatures& features, std::span<const PillarCoord> coords,
                               const PillarGridConfig& cfg) {
  if (features.channels == 0) throw ValidationError("scatter: channel count must be positive");
  if (features.size() != coords.size()) throw ValidationError("scatter: feature/coord count mismatch");
  const std::size_t plane = static_cast<std::size_t>(cfg.rows) * cfg.cols;
  Tensor image({features.channels, static_cast<std::size_t>(cfg.rows), static_cast<std::size_t>(cfg.cols)});
  auto dst = image.data();
  for (std::size_t p = 0; p < coords.size(); ++p) {
    const auto& c = coords[p];
    if (c.x < 0 || c.y < 0 || c.x >= cfg.cols || c.y >= cfg.rows) {
      throw ValidationError("scatter: pillar coordinate (" + std::to_string(c.x) + ", " +
                            std::to_string(c.y) + ") outside the grid");
    }
    const auto idx = scatter_index(c, cfg.cols);
    const auto row = features.row(p);
    for (std::size_t ch = 0; ch < features.channels; ++ch) dst[ch * plane + idx] = row[ch];
  }
  return image;
}

PillarFeatures gather_from_pseudo_image(const Tensor& image, std::span<const PillarCoord> coords) {
  if (image.rank() != 3) throw ValidationError("gather: expected a C x H x W image");
  const std::size_t channels = image.extent(0);
  const int rows = static_cast<int>(image.extent(1));
  const int cols = static_cast<int>(image.extent(2));
  const std::size_t plane = image.extent(1) * image.extent(2);
  PillarFeatures out{channels, std::vector<double>(coords.size() * channels)};
  for (std::size_t p = 0; p < coords.size(); ++p) {
    const auto& c = coords[p];
    if (c.x < 0 || c.y < 0 || c.x >= cols || c.y >= rows) throw ValidationError("gather: coordinate outside the grid");
    const auto idx = scatter_index(c, cols);
    for (std::size_t ch = 0; ch < channels; ++ch) out.values[p * channels + ch] = image[ch * plane + idx];
  }
  return out;
}

}  // namespace kanbev::pillars
