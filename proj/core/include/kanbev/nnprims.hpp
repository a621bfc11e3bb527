#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kanbev/tensor.hpp"

// Framework-free forward primitives for the depth branch. All functions take
// their inputs by const reference and return fresh tensors.
namespace kanbev::nn {

// Uniformly spaced depth support: bin l sits at d_min + l * step, with the
// first and last bin exactly at d_min and d_max.
struct DepthBinSpec {
  double d_min = 2.0;
  double d_max = 58.0;
  std::size_t count = 112;

  void validate() const;
  double step() const { return (d_max - d_min) / static_cast<double>(count - 1); }
  double center(std::size_t bin) const { return d_min + step() * static_cast<double>(bin); }
  // Nearest bin for a depth inside [d_min, d_max]; -1 outside that range.
  int nearest_bin(double depth) const;
};

double sigmoid(double x);

// Channel softmax over axis 0 of a C_D x H x W tensor, max-subtracted.
Tensor softmax_over_depth(const Tensor& logits);

// out(i, l, j, k) = context(i, j, k) * prob(l, j, k); layout C_C x C_D x H x W.
Tensor lift_outer_product(const Tensor& context, const Tensor& prob);

// out(c, ., .) = gates[c] * features(c, ., .).
Tensor se_excite(const Tensor& features, std::span<const double> gates);

// 1x1 convolution: kernel is C_out x C_in, bias has C_out entries.
Tensor conv_pointwise(const Tensor& input, const Tensor& kernel, std::span<const double> bias);

// Row-major 3x3 taps; tap (a, b) multiplies input at (depth + a - 1, col + b - 1).
using Kernel3x3 = std::array<double, 9>;
inline constexpr Kernel3x3 kIdentityKernel{0, 0, 0, 0, 1, 0, 0, 0, 0};

// Depth refinement on a C_F x C_D x H x W volume: viewed as (C_F*H) x C_D x W
// slices, each convolved over (depth, column) with zero padding.
Tensor depth_refine(const Tensor& volume, const Kernel3x3& kernel);

// The [C_F, C_D, H, W] -> [C_F*H, C_D, W] regrouping used by depth_refine.
// Element (f, d, h, w) moves to (f*H + h, d, w).
Tensor to_depth_slices(const Tensor& volume);
Tensor from_depth_slices(const Tensor& slices, std::size_t channels);

using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

// Central-difference Jacobian, rows = outputs, cols = inputs.
Eigen::MatrixXd finite_diff_jacobian(const VectorFn& f, std::span<const double> x, double h = 1e-6);

}  // namespace kanbev::nn
