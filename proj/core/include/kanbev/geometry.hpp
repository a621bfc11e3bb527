#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kanbev/nnprims.hpp"

namespace kanbev {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct ImageSize {
  int height = 0;
  int width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Pinhole camera. rotation/translation map ego (sensor) coordinates into the
// camera frame: p_cam = rotation * p + translation. Camera axes: x right,
// y down, z forward.
struct CameraRig {
  Mat3 intrinsics = Mat3::Identity();
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  ImageSize image_size{1, 1};

  // Throws ValidationError on a non upper-triangular / non-positive-diagonal
  // intrinsic matrix, a non-rotation, or an empty image.
  void validate() const;
  // Same camera sampled on a grid `stride` times coarser.
  CameraRig downsampled(int stride) const;
};

// Vehicle pose in a world frame: p_world = rotation * p_ego + translation.
struct EgoPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double timestamp = 0.0;

  void validate() const;
};

// Per-pixel depth in meters; kMissing marks pixels without a return.
// Pixel convention everywhere: (u, v) = (column, row), origin top-left,
// floor binning.
struct DepthMap {
  static constexpr double kMissing = -1.0;

  int height = 0;
  int width = 0;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w, kMissing) {}

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  bool has(int row, int col) const { return at(row, col) != kMissing; }
  std::size_t covered() const;
};

struct Projection {
  // (u*d, v*d, d) per input point.
  std::vector<Vec3> scaled;
  // d > 0; rows with in_front == false never reach rasterization.
  std::vector<bool> in_front;
};

Projection project_points(std::span<const Vec3> points, const CameraRig& rig);

// (u*d, v*d, d) -> (u, v, d).
inline Vec3 to_pixel(const Vec3& scaled) { return {scaled.x() / scaled.z(), scaled.y() / scaled.z(), scaled.z()}; }

struct RasterResult {
  DepthMap map;
  std::size_t out_of_bounds = 0;
  std::size_t behind_camera = 0;
};

// Nearest-surface rasterization: each pixel keeps the minimum depth landing
// in it. Rows with non-positive depth are counted and skipped.
RasterResult rasterize_depth_map(std::span<const Vec3> projected, ImageSize size);

struct FrustumSample {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

struct FrustumGrid {
  int rows = 0;
  int cols = 0;
  nn::DepthBinSpec bins;
  // Ordered (bin, row, col), matching the C_D x H x W depth distribution.
  std::vector<FrustumSample> samples;
};

// Lattice over a feature map of rows x cols cells covering `image`; cell
// (r, c) samples the image pixel at its center.
FrustumGrid make_frustum(ImageSize image, int rows, int cols, const nn::DepthBinSpec& bins);

// Inverse of project_points for each frustum sample; returns ego points.
std::vector<Vec3> unproject_frustum(const CameraRig& rig, const FrustumGrid& frustum);

// Re-expresses points given in the `src` ego frame in the `dst` ego frame.
std::vector<Vec3> transform_ego(std::span<const Vec3> points, const EgoPose& src, const EgoPose& dst);

}  // namespace kanbev
