#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kanbev/geometry.hpp"
#include "kanbev/tensor.hpp"

namespace kanbev::kan {

// Uniform B-spline basis on [lo, hi], knot vector extended by `degree`
// intervals on each side so that all n_basis = intervals + degree functions
// form a partition of unity over the domain. Inputs are clamped to [lo, hi].
class BSplineBasis {
 public:
  BSplineBasis(int intervals, int degree, double lo = -1.0, double hi = 1.0);

  int degree() const noexcept { return degree_; }
  int intervals() const noexcept { return intervals_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return knots_.size() - static_cast<std::size_t>(degree_) - 1; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  // Fills `weights` (size()) and returns true when x was clamped.
  bool evaluate(double x, std::span<double> weights) const;
  std::vector<double> evaluate(double x) const;
  // Basis values and d/dx; the derivative is zero where x was clamped.
  bool evaluate_with_derivative(double x, std::span<double> weights, std::span<double> slopes) const;

 private:
  // Index i of the knot span [t_i, t_{i+1}) holding x (already clamped).
  std::size_t find_span(double x) const;
  // The degree+1 nonzero functions B_{i-p}..B_i of degree p on span i.
  void nonzero_basis(std::size_t span, double x, int p, std::span<double> out) const;

  int intervals_;
  int degree_;
  double lo_;
  double hi_;
  std::vector<double> knots_;
};

// Smooth rectifier x * sigmoid(x) used on the shortcut branch.
double silu(double x);
double silu_derivative(double x);

// out_j = sum_i [ sum_b coeffs(j, i, b) * B_b(x_i) + shortcut(j, i) * silu(x_i) ]
struct KanLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  BSplineBasis basis{8, 3};
  std::vector<double> spline_coeffs;     // out_dim x in_dim x n_basis
  std::vector<double> shortcut_weights;  // out_dim x in_dim

  KanLayer() = default;
  KanLayer(std::size_t in, std::size_t out, BSplineBasis b);

  void validate() const;
  double& coeff(std::size_t j, std::size_t i, std::size_t b) {
    return spline_coeffs[(j * in_dim + i) * basis.size() + b];
  }
  double coeff(std::size_t j, std::size_t i, std::size_t b) const {
    return spline_coeffs[(j * in_dim + i) * basis.size() + b];
  }

  static KanLayer random(std::size_t in, std::size_t out, const BSplineBasis& basis, std::uint64_t seed);
};

std::vector<double> kan_layer_forward(const KanLayer& layer, std::span<const double> x);
// Analytic d out / d x, out_dim x in_dim.
Eigen::MatrixXd kan_layer_jacobian(const KanLayer& layer, std::span<const double> x);

std::vector<double> kan_stack_forward(std::span<const KanLayer> stack, std::span<const double> x);
Eigen::MatrixXd kan_stack_jacobian(std::span<const KanLayer> stack, std::span<const double> x);

// Divisors applied to each group of the flattened camera parameters.
struct EmbeddingScales {
  double intrinsics = 2000.0;  // pixels
  double rotation = 1.0;
  double translation = 4.0;    // meters
};

inline constexpr std::size_t kCameraParamDim = 27;

// Layout: K (9, row-major), R (9, row-major), t (3), 6 reserved zeros.
struct CameraParamVector {
  std::array<double, kCameraParamDim> values{};
  EmbeddingScales scales;
};

std::array<double, kCameraParamDim> flatten_camera_params(const CameraRig& rig);
CameraParamVector embed_camera_params(const CameraRig& rig, const EmbeddingScales& scales = {});

struct DepthNetConfig {
  std::size_t feature_channels = 512;  // C_F, also the gate width
  std::size_t depth_bins = 112;        // C_D
  std::size_t context_channels = 80;   // C_C
  std::vector<std::size_t> kan_widths{kCameraParamDim, 64, 512};
  int grid_intervals = 8;
  int spline_degree = 3;
  EmbeddingScales scales;

  void validate() const;
};

struct DepthNetParams {
  DepthNetConfig config;
  std::vector<KanLayer> kan;
  Tensor head_kernel;            // (C_D + C_C) x C_F
  std::vector<double> head_bias; // C_D + C_C

  void validate() const;
  static DepthNetParams random(const DepthNetConfig& config, std::uint64_t seed);
};

struct CameraDepthOutput {
  Tensor depth_logits;        // C_D x H x W
  Tensor context;             // C_C x H x W
  std::vector<double> gates;  // C_F, sigmoid of the KAN output
};

struct DepthNetOutputs {
  std::vector<CameraDepthOutput> cameras;
};

std::vector<double> camera_gates(const DepthNetParams& params, const CameraParamVector& embedding);
CameraDepthOutput depthnet_camera(const Tensor& features, const CameraParamVector& embedding,
                                  const DepthNetParams& params);

// One output per camera. When `parallel` is set cameras are evaluated on
// separate threads; outputs are identical either way.
DepthNetOutputs depthnet_forward(std::span<const Tensor> image_features, std::span<const CameraRig> rigs,
                                 const DepthNetParams& params, bool parallel = false);

// Flattened [depth_logits; context] Jacobians of depthnet_camera.
Eigen::MatrixXd depthnet_jacobian_wrt_features(const Tensor& features, const CameraParamVector& embedding,
                                               const DepthNetParams& params);
Eigen::MatrixXd depthnet_jacobian_wrt_embedding(const Tensor& features, const CameraParamVector& embedding,
                                                const DepthNetParams& params);

// Manifest JSON plus one TNSR file per parameter block.
void save_depthnet(const DepthNetParams& params, const std::string& dir);
DepthNetParams load_depthnet(const std::string& dir);

}  // namespace kanbev::kan
