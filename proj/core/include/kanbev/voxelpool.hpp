#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "kanbev/geometry.hpp"
#include "kanbev/tensor.hpp"

// BEV voxel pooling. Three interchangeable accumulators share one cell rule:
// point (x, y) lands in cell (floor((x - x_min) / dx), floor((y - y_min) / dy))
// with half-open ranges, so points on the max edge are dropped.
namespace kanbev::voxelpool {

struct BevGridConfig {
  double x_min = -51.2, x_max = 51.2;
  double y_min = -51.2, y_max = 51.2;
  int nx = 128;
  int ny = 128;

  void validate() const;
  double dx() const { return (x_max - x_min) / nx; }
  double dy() const { return (y_max - y_min) / ny; }
  // Flat cell id (row-major y * nx + x) or -1 when out of range.
  long cell_of(double x, double y) const;
  std::pair<double, double> cell_center(int col, int row) const {
    return {x_min + (col + 0.5) * dx(), y_min + (row + 0.5) * dy()};
  }
};

struct FeaturedPoints {
  std::vector<Vec3> positions;
  std::size_t channels = 0;
  std::vector<double> features;  // M x channels, row-major

  std::size_t size() const noexcept { return positions.size(); }
  void validate() const;
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * channels, channels);
  }
};

struct BevGrid {
  BevGridConfig config;
  Tensor data;  // C x ny x nx
};

struct PoolOptions {
  // Divide each cell by its point count instead of summing.
  bool average = false;
};

struct PoolResult {
  BevGrid grid;
  std::size_t dropped = 0;
};

enum class PoolImpl { kReference, kCumsum, kConcurrent };

PoolImpl parse_pool_impl(std::string_view name);
std::string_view to_string(PoolImpl impl);

// Sequential accumulation in input order.
PoolResult pool_reference(const FeaturedPoints& points, const BevGridConfig& cfg, PoolOptions opts = {});

// Stable sort by cell id, inclusive prefix sum over feature rows, segment
// totals by differencing the prefix at segment boundaries.
PoolResult pool_cumsum(const FeaturedPoints& points, const BevGridConfig& cfg, PoolOptions opts = {});

// Contiguous partitions per worker, lossless atomic adds into a shared grid.
PoolResult pool_concurrent(const FeaturedPoints& points, const BevGridConfig& cfg, int workers,
                           PoolOptions opts = {});

PoolResult pool(PoolImpl impl, const FeaturedPoints& points, const BevGridConfig& cfg, int workers = 1,
                PoolOptions opts = {});

// Seeded uniform points over the grid extent widened by `margin` meters on
// each side (margin > 0 produces out-of-grid points), features N(0, 1).
FeaturedPoints random_points(std::size_t count, std::size_t channels, const BevGridConfig& cfg, std::uint64_t seed,
                             double margin = 0.0);

struct Frame {
  FeaturedPoints points;
  EgoPose pose;
};

// Aligns each frame into `current` with transform_ego, then pools the
// concatenation.
PoolResult pool_aligned_frames(std::span<const Frame> frames, const EgoPose& current, const BevGridConfig& cfg,
                               PoolImpl impl = PoolImpl::kCumsum, int workers = 1, PoolOptions opts = {});

}  // namespace kanbev::voxelpool
