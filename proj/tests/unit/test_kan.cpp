#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "kanbev/error.hpp"
#include "kanbev/kan.hpp"
#include "kanbev/nnprims.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using namespace kanbev;
using namespace kanbev::kan;

using oracle::cox_de_boor;
using oracle::uniform_knots;

TEST(BSpline, PartitionOfUnityForDegreesOneToThree) {
  SplitMix64 rng(1);
  for (int p = 1; p <= 3; ++p) {
    const BSplineBasis basis(8, p);
    EXPECT_EQ(basis.size(), static_cast<std::size_t>(8 + p));
    for (int k = 0; k < 1000; ++k) {
      const auto w = basis.evaluate(rng.uniform(-1.0, 1.0));
      double s = 0.0;
      for (double v : w) {
        EXPECT_GE(v, -1e-15);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    double s = 0.0;
    for (double v : basis.evaluate(1.0)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(BSpline, CubicMatchesCoxDeBoor) {
  SplitMix64 rng(2);
  for (int intervals : {1, 3, 8}) {
    const BSplineBasis basis(intervals, 3, -1.0, 1.0);
    const auto t = uniform_knots(intervals, 3, -1.0, 1.0);
    for (int k = 0; k < 500; ++k) {
      const double x = rng.uniform(-1.0, 1.0);
      const auto w = basis.evaluate(x);
      for (std::size_t i = 0; i < basis.size(); ++i) EXPECT_NEAR(w[i], cox_de_boor(t, i, 3, x), 1e-12);
    }
  }
}

TEST(BSpline, DerivativeMatchesFiniteDifference) {
  SplitMix64 rng(3);
  const BSplineBasis basis(8, 3);
  std::vector<double> w(basis.size()), d(basis.size());
  for (int k = 0; k < 100; ++k) {
    const double x = rng.uniform(-0.99, 0.99);
    basis.evaluate_with_derivative(x, w, d);
    const auto plus = basis.evaluate(x + 1e-6), minus = basis.evaluate(x - 1e-6);
    for (std::size_t i = 0; i < basis.size(); ++i) EXPECT_NEAR(d[i], (plus[i] - minus[i]) / 2e-6, 1e-6);
  }
}

TEST(BSpline, ClampsOutsideDomain) {
  const BSplineBasis basis(4, 2);
  std::vector<double> w(basis.size()), d(basis.size());
  EXPECT_TRUE(basis.evaluate_with_derivative(3.0, w, d));
  EXPECT_EQ(w, basis.evaluate(1.0));
  for (double v : d) EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(basis.evaluate(0.2, w));
  EXPECT_THROW(BSplineBasis(0, 3), ValidationError);
  EXPECT_THROW(BSplineBasis(4, 3, 1.0, 1.0), ValidationError);
  EXPECT_THROW(basis.evaluate(NAN), ValidationError);
}

TEST(KanLayer, ForwardMatchesDefinition) {
  const auto layer = KanLayer::random(3, 2, BSplineBasis(5, 3), 9);
  const std::vector<double> x{0.1, -0.7, 0.45};
  const auto y = kan_layer_forward(layer, x);
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto b = layer.basis.evaluate(x[i]);
      for (std::size_t k = 0; k < b.size(); ++k) s += layer.coeff(j, i, k) * b[k];
      s += layer.shortcut_weights[j * 3 + i] * x[i] / (1.0 + std::exp(-x[i]));
    }
    EXPECT_NEAR(y[j], s, 1e-14);
  }
  EXPECT_THROW(kan_layer_forward(layer, std::vector<double>{0.0}), ValidationError);
}

TEST(KanLayer, LinearInCoefficients) {
  SplitMix64 rng(5);
  auto a = KanLayer::random(4, 3, BSplineBasis(8, 3), 1);
  auto b = KanLayer::random(4, 3, BSplineBasis(8, 3), 2);
  const double alpha = 0.7, beta = -1.3;
  KanLayer mix = a;
  for (std::size_t k = 0; k < mix.spline_coeffs.size(); ++k) {
    mix.spline_coeffs[k] = alpha * a.spline_coeffs[k] + beta * b.spline_coeffs[k];
  }
  for (std::size_t k = 0; k < mix.shortcut_weights.size(); ++k) {
    mix.shortcut_weights[k] = alpha * a.shortcut_weights[k] + beta * b.shortcut_weights[k];
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(-1.5, 1.5);
    const auto ya = kan_layer_forward(a, x), yb = kan_layer_forward(b, x), ym = kan_layer_forward(mix, x);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(ym[j], alpha * ya[j] + beta * yb[j], 1e-12);
  }
}

TEST(KanLayer, JacobianMatchesFiniteDifference) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto layer = KanLayer::random(5, 4, BSplineBasis(8, 3), 100 + trial);
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-0.95, 0.95);
    const auto fd = nn::finite_diff_jacobian([&](std::span<const double> z) { return kan_layer_forward(layer, z); }, x);
    EXPECT_LT(testkit::max_rel_error(kan_layer_jacobian(layer, x), fd), 1e-5);
  }
}

TEST(KanStack, JacobianChainsLayers) {
  SplitMix64 rng(7);
  std::vector<KanLayer> stack{KanLayer::random(6, 8, BSplineBasis(8, 3), 1),
                              KanLayer::random(8, 3, BSplineBasis(8, 3), 2)};
  std::vector<double> x(6);
  for (auto& v : x) v = rng.uniform(-0.9, 0.9);
  const auto fd = nn::finite_diff_jacobian([&](std::span<const double> z) { return kan_stack_forward(stack, z); }, x);
  EXPECT_LT(testkit::max_rel_error(kan_stack_jacobian(stack, x), fd), 1e-5);
}

TEST(CameraEmbedding, LayoutAndScaling) {
  CameraRig rig;
  rig.intrinsics << 560, 0, 352, 0, 560, 128, 0, 0, 1;
  rig.translation = Vec3(0.4, -0.8, 1.2);
  rig.image_size = {256, 704};
  const auto raw = flatten_camera_params(rig);
  EXPECT_EQ(raw[0], 560.0);
  EXPECT_EQ(raw[2], 352.0);
  EXPECT_EQ(raw[9], 1.0);
  EXPECT_EQ(raw[13], 1.0);
  EXPECT_EQ(raw[19], -0.8);
  for (std::size_t i = 21; i < 27; ++i) EXPECT_EQ(raw[i], 0.0);
  const auto e = embed_camera_params(rig);
  EXPECT_DOUBLE_EQ(e.values[0], 560.0 / 2000.0);
  EXPECT_DOUBLE_EQ(e.values[20], 1.2 / 4.0);
}

DepthNetConfig toy_config() {
  DepthNetConfig c;
  c.feature_channels = 6;
  c.depth_bins = 5;
  c.context_channels = 3;
  c.kan_widths = {kCameraParamDim, 7, 6};
  return c;
}

std::vector<double> flat_outputs(const CameraDepthOutput& o) {
  std::vector<double> v(o.depth_logits.values());
  v.insert(v.end(), o.context.values().begin(), o.context.values().end());
  return v;
}

TEST(DepthNet, GatesLieInOpenUnitInterval) {
  SplitMix64 rng(8);
  const auto params = DepthNetParams::random(DepthNetConfig{}, 3);
  for (int k = 0; k < 10; ++k) {
    const auto gates = camera_gates(params, embed_camera_params(testkit::random_rig(rng)));
    ASSERT_EQ(gates.size(), 512u);
    for (double g : gates) {
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(DepthNet, SplitsHeadsIntoDepthAndContext) {
  SplitMix64 rng(9);
  const auto params = DepthNetParams::random(toy_config(), 4);
  const Tensor f = testkit::random_tensor({6, 2, 3}, rng);
  const auto e = embed_camera_params(testkit::random_rig(rng));
  const auto out = depthnet_camera(f, e, params);
  EXPECT_EQ(out.depth_logits.shape(), (Shape{5, 2, 3}));
  EXPECT_EQ(out.context.shape(), (Shape{3, 2, 3}));
  const auto gates = camera_gates(params, e);
  // Oracle: head row o applied to gated features.
  for (std::size_t o = 0; o < 8; ++o) {
    for (std::size_t p = 0; p < 6; ++p) {
      double s = params.head_bias[o];
      for (std::size_t c = 0; c < 6; ++c) s += params.head_kernel(o, c) * gates[c] * f[c * 6 + p];
      const double got = o < 5 ? out.depth_logits[o * 6 + p] : out.context[(o - 5) * 6 + p];
      EXPECT_NEAR(got, s, 1e-13);
    }
  }
}

TEST(DepthNet, JacobiansMatchFiniteDifference) {
  SplitMix64 rng(10);
  const auto params = DepthNetParams::random(toy_config(), 5);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor f = testkit::random_tensor({6, 1, 3}, rng);
    const auto e = embed_camera_params(testkit::random_rig(rng));
    const auto fd_f = nn::finite_diff_jacobian(
        [&](std::span<const double> z) {
          return flat_outputs(depthnet_camera(Tensor(f.shape(), {z.begin(), z.end()}), e, params));
        },
        f.values());
    EXPECT_LT(testkit::max_rel_error(depthnet_jacobian_wrt_features(f, e, params), fd_f), 1e-5);
    const auto fd_e = nn::finite_diff_jacobian(
        [&](std::span<const double> z) {
          CameraParamVector v = e;
          std::copy(z.begin(), z.end(), v.values.begin());
          return flat_outputs(depthnet_camera(f, v, params));
        },
        e.values);
    EXPECT_LT(testkit::max_rel_error(depthnet_jacobian_wrt_embedding(f, e, params), fd_e), 1e-5);
  }
}

TEST(DepthNet, ParallelAndSequentialAreBitIdentical) {
  SplitMix64 rng(11);
  const auto params = DepthNetParams::random(toy_config(), 6);
  std::vector<Tensor> feats;
  std::vector<CameraRig> rigs;
  for (int k = 0; k < 6; ++k) {
    feats.push_back(testkit::random_tensor({6, 2, 2}, rng));
    rigs.push_back(testkit::random_rig(rng));
  }
  const auto a = depthnet_forward(feats, rigs, params, false);
  const auto b = depthnet_forward(feats, rigs, params, true);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(a.cameras[k].depth_logits, b.cameras[k].depth_logits);
    EXPECT_EQ(a.cameras[k].context, b.cameras[k].context);
  }
  // Camera order does not leak across cameras.
  std::vector<Tensor> rf(feats.rbegin(), feats.rend());
  std::vector<CameraRig> rr(rigs.rbegin(), rigs.rend());
  const auto c = depthnet_forward(rf, rr, params, true);
  EXPECT_EQ(c.cameras[0].depth_logits, a.cameras[5].depth_logits);
}

TEST(DepthNet, RejectsBadCameraCounts) {
  const auto params = DepthNetParams::random(toy_config(), 6);
  std::vector<Tensor> none;
  std::vector<CameraRig> no_rigs;
  EXPECT_THROW(depthnet_forward(none, no_rigs, params), ValidationError);
  std::vector<Tensor> seven(7, Tensor({6, 1, 1}));
  std::vector<CameraRig> seven_rigs(7);
  for (auto& r : seven_rigs) r.image_size = {1, 1};
  EXPECT_THROW(depthnet_forward(seven, seven_rigs, params), ValidationError);
}

TEST(DepthNet, SaveLoadRoundTrip) {
  const auto params = DepthNetParams::random(toy_config(), 12);
  const auto dir = (std::filesystem::temp_directory_path() / "kanbev_depthnet_rt").string();
  std::filesystem::remove_all(dir);
  save_depthnet(params, dir);
  const auto back = load_depthnet(dir);
  EXPECT_EQ(back.head_kernel, params.head_kernel);
  EXPECT_EQ(back.head_bias, params.head_bias);
  ASSERT_EQ(back.kan.size(), params.kan.size());
  for (std::size_t l = 0; l < back.kan.size(); ++l) {
    EXPECT_EQ(back.kan[l].spline_coeffs, params.kan[l].spline_coeffs);
    EXPECT_EQ(back.kan[l].shortcut_weights, params.kan[l].shortcut_weights);
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_depthnet(dir), IoError);
}

}  // namespace
