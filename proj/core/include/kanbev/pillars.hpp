#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "kanbev/tensor.hpp"

// Radar stream: pillar voxelization, 9-D point augmentation, VFE encoding and
// scatter into a BEV pseudo image.
namespace kanbev::pillars {

// (x, y, z, r): meters and unitless reflectivity.
using RadarPoint = std::array<double, 4>;
using AugmentedPoint = std::array<double, 9>;

inline constexpr std::size_t kAugmentedDim = 9;

struct RadarPointCloud {
  std::vector<RadarPoint> points;
  void validate() const;
};

struct PillarGridConfig {
  double x_min = -51.2, x_max = 51.2;
  double y_min = -51.2, y_max = 51.2;
  double dx = 0.8, dy = 0.8;
  int rows = 128;  // H, along y
  int cols = 128;  // W, along x
  std::size_t max_points = 20;     // T
  std::size_t max_pillars = 12000; // P_max

  void validate() const;
  std::array<double, 2> center(int col, int row) const {
    return {x_min + (col + 0.5) * dx, y_min + (row + 0.5) * dy};
  }
};

struct PillarCoord {
  int x = 0;  // column index
  int y = 0;  // row index
  friend bool operator==(const PillarCoord&, const PillarCoord&) = default;
};

// P pillars, each a T x 9 block; rows past point_counts[p] are zero.
struct PillarTensor {
  std::size_t max_points = 0;
  std::vector<double> features;  // P * T * 9, row-major
  std::vector<PillarCoord> coords;
  std::vector<std::size_t> point_counts;

  std::size_t size() const noexcept { return coords.size(); }
  std::span<const double> row(std::size_t pillar, std::size_t slot) const {
    return std::span<const double>(features).subspan((pillar * max_points + slot) * kAugmentedDim, kAugmentedDim);
  }
};

struct BuildReport {
  std::size_t out_of_range = 0;
  std::size_t truncated_pillars = 0;
  std::size_t sampled_pillars = 0;
};

// Columns: 0-3 raw (x, y, z, r); 4-6 offset from the pillar's point mean;
// 7-8 (x, y) offset from the pillar's geometric center.
std::vector<AugmentedPoint> augment_points(std::span<const RadarPoint> pillar_points,
                                           std::array<double, 2> pillar_center);

// Euclidean 2-D distance to the pillar center carried by columns 7-8.
double pillar_center_distance(std::span<const double> augmented_row);

// Pillars appear in first-occurrence order of the input stream. Overflowing
// pillars keep a seeded uniform sample of T points (in input order).
PillarTensor build_pillars(const RadarPointCloud& cloud, const PillarGridConfig& cfg,
                           std::uint64_t seed, BuildReport* report = nullptr);

// Single affine + rectifier stage mapping 9 -> channels.
struct VfeWeights {
  std::size_t channels = 0;
  std::vector<double> weight;  // channels x 9
  std::vector<double> bias;    // channels

  void validate() const;
  static VfeWeights random(std::size_t channels, std::uint64_t seed);
};

// P x C encoder output; P may be zero.
struct PillarFeatures {
  std::size_t channels = 0;
  std::vector<double> values;  // P * channels

  std::size_t size() const noexcept { return channels ? values.size() / channels : 0; }
  std::span<const double> row(std::size_t p) const {
    return std::span<const double>(values).subspan(p * channels, channels);
  }
  friend bool operator==(const PillarFeatures&, const PillarFeatures&) = default;
};

// Max over real points only; padding rows never participate.
PillarFeatures vfe_forward(const PillarTensor& pillars, const VfeWeights& weights);

inline std::size_t scatter_index(const PillarCoord& c, int cols) {
  return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c.x);
}

// C x H x W with untouched cells exactly zero.
Tensor scatter_to_pseudo_image(const PillarFeatures& features, std::span<const PillarCoord> coords,
                               const PillarGridConfig& cfg);
PillarFeatures gather_from_pseudo_image(const Tensor& image, std::span<const PillarCoord> coords);

}  // namespace kanbev::pillars
