#include "kanbev/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "kanbev/error.hpp"

namespace kanbev {

namespace {

constexpr double kOrthoTol = 1e-9;

void check_rotation(const Mat3& r, const char* what) {
  if (!r.allFinite()) throw ValidationError(std::string(what) + ": non-finite rotation");
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kOrthoTol || std::abs(r.determinant() - 1.0) > kOrthoTol) {
    throw ValidationError(std::string(what) + ": rotation is not orthonormal with det 1");
  }
}

}  // namespace

void CameraRig::validate() const {
  if (!intrinsics.allFinite() || !translation.allFinite()) {
    throw ValidationError("camera rig: non-finite parameters");
  }
  if (intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0) {
    throw ValidationError("camera rig: intrinsics must be upper-triangular");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(intrinsics(i, i) > 0.0)) throw ValidationError("camera rig: intrinsics diagonal must be positive");
  }
  check_rotation(rotation, "camera rig");
  if (image_size.height <= 0 || image_size.width <= 0) {
    throw ValidationError("camera rig: image size must be positive");
  }
}

CameraRig CameraRig::downsampled(int stride) const {
  if (stride <= 0) throw ValidationError("camera rig: stride must be positive");
  CameraRig out = *this;
  out.intrinsics.row(0) /= stride;
  out.intrinsics.row(1) /= stride;
  out.image_size = {image_size.height / stride, image_size.width / stride};
  return out;
}

void EgoPose::validate() const {
  if (!translation.allFinite()) throw ValidationError("ego pose: non-finite translation");
  check_rotation(rotation, "ego pose");
}

std::size_t DepthMap::covered() const {
  std::size_t n = 0;
  for (double v : values) n += (v != kMissing);
  return n;
}

Projection project_points(std::span<const Vec3> points, const CameraRig& rig) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "project_points: non-finite input at index";
    for (std::size_t k = 0; k < bad.size() && k < 16; ++k) os << ' ' << bad[k];
    if (bad.size() > 16) os << " ... (" << bad.size() << " total)";
    throw ValidationError(os.str());
  }
  const Mat3 full = rig.intrinsics * rig.rotation;
  const Vec3 offset = rig.intrinsics * rig.translation;
  Projection out;
  out.scaled.reserve(points.size());
  out.in_front.reserve(points.size());
  for (const auto& p : points) {
    Vec3 q = full * p + offset;
    out.in_front.push_back(q.z() > 0.0);
    out.scaled.push_back(q);
  }
  return out;
}

RasterResult rasterize_depth_map(std::span<const Vec3> projected, ImageSize size) {
  if (size.height <= 0 || size.width <= 0) throw ValidationError("rasterize_depth_map: empty image");
  RasterResult out{DepthMap(size.height, size.width), 0, 0};
  for (const auto& s : projected) {
    const double d = s.z();
    if (!(d > 0.0)) {
      ++out.behind_camera;
      continue;
    }
    const double u = std::floor(s.x() / d);
    const double v = std::floor(s.y() / d);
    if (!(u >= 0.0 && v >= 0.0 && u < size.width && v < size.height)) {
      ++out.out_of_bounds;
      continue;
    }
    double& cell = out.map.at(static_cast<int>(v), static_cast<int>(u));
    if (cell == DepthMap::kMissing || d < cell) cell = d;
  }
  return out;
}

FrustumGrid make_frustum(ImageSize image, int rows, int cols, const nn::DepthBinSpec& bins) {
  bins.validate();
  if (rows <= 0 || cols <= 0 || image.height <= 0 || image.width <= 0) {
    throw ValidationError("make_frustum: grid and image sizes must be positive");
  }
  FrustumGrid grid{rows, cols, bins, {}};
  grid.samples.reserve(bins.count * static_cast<std::size_t>(rows) * cols);
  const double sx = static_cast<double>(image.width) / cols;
  const double sy = static_cast<double>(image.height) / rows;
  for (std::size_t l = 0; l < bins.count; ++l) {
    const double d = bins.center(l);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        grid.samples.push_back({(c + 0.5) * sx, (r + 0.5) * sy, d});
      }
    }
  }
  return grid;
}

std::vector<Vec3> unproject_frustum(const CameraRig& rig, const FrustumGrid& frustum) {
  rig.validate();
  if (std::abs(rig.intrinsics.determinant()) < 1e-300) {
    throw ValidationError("unproject_frustum: singular intrinsics");
  }
  // p = R^T (K^-1 s - t)
  const Mat3 k_inv = rig.intrinsics.inverse();
  const Mat3 r_t = rig.rotation.transpose();
  std::vector<Vec3> out;
  out.reserve(frustum.samples.size());
  for (const auto& s : frustum.samples) {
    const Vec3 scaled(s.u * s.d, s.v * s.d, s.d);
    out.push_back(r_t * (k_inv * scaled - rig.translation));
  }
  return out;
}

std::vector<Vec3> transform_ego(std::span<const Vec3> points, const EgoPose& src, const EgoPose& dst) {
  src.validate();
  dst.validate();
  if (src.rotation == dst.rotation && src.translation == dst.translation) {
    return {points.begin(), points.end()};
  }
  const Mat3 rot = dst.rotation.transpose() * src.rotation;
  const Vec3 shift = dst.rotation.transpose() * (src.translation - dst.translation);
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(rot * p + shift);
  return out;
}

}  // namespace kanbev
