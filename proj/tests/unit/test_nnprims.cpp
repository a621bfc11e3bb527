#include <gtest/gtest.h>

#include <cmath>

#include "kanbev/error.hpp"
#include "kanbev/nnprims.hpp"
#include "test_support.hpp"

namespace {

using namespace kanbev;
using namespace kanbev::nn;
using kanbev::testkit::random_tensor;

TEST(DepthBins, CentersSpanRangeAndNearestBinRounds) {
  const DepthBinSpec bins;  // 2..58 m, 112 bins
  EXPECT_DOUBLE_EQ(bins.center(0), 2.0);
  EXPECT_DOUBLE_EQ(bins.center(111), 58.0);
  EXPECT_EQ(bins.nearest_bin(2.0), 0);
  EXPECT_EQ(bins.nearest_bin(58.0), 111);
  EXPECT_EQ(bins.nearest_bin(2.0 + 0.49 * bins.step()), 0);
  EXPECT_EQ(bins.nearest_bin(2.0 + 0.51 * bins.step()), 1);
  EXPECT_EQ(bins.nearest_bin(1.99), -1);
  EXPECT_EQ(bins.nearest_bin(58.01), -1);
  EXPECT_THROW((DepthBinSpec{5.0, 5.0, 10}.validate()), ValidationError);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
}

TEST(Softmax, MatchesNaiveFormulaAndNormalizes) {
  SplitMix64 rng(1);
  const Tensor logits = random_tensor({7, 3, 4}, rng, 3.0);
  const Tensor p = softmax_over_depth(logits);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      double z = 0.0, sum = 0.0;
      for (std::size_t l = 0; l < 7; ++l) z += std::exp(logits(l, r, c));
      for (std::size_t l = 0; l < 7; ++l) {
        EXPECT_NEAR(p(l, r, c), std::exp(logits(l, r, c)) / z, 1e-15);
        sum += p(l, r, c);
      }
      EXPECT_NEAR(sum, 1.0, 1e-14);
    }
  }
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Tensor logits({3, 1, 1}, std::vector<double>{1000.0, 999.0, -1000.0});
  const Tensor p = softmax_over_depth(logits);
  EXPECT_TRUE(p.all_finite());
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  Tensor bad({2, 1, 1}, std::vector<double>{NAN, 0.0});
  EXPECT_THROW(softmax_over_depth(bad), ValidationError);
}

TEST(Lift, MarginalOverDepthRecoversContext) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t cc = 1 + rng.bounded(6), cd = 2 + rng.bounded(9), h = 1 + rng.bounded(4), w = 1 + rng.bounded(5);
    const Tensor ctx = random_tensor({cc, h, w}, rng);
    const Tensor p = softmax_over_depth(random_tensor({cd, h, w}, rng, 2.0));
    const Tensor out = lift_outer_product(ctx, p);
    ASSERT_EQ(out.shape(), (Shape{cc, cd, h, w}));
    for (std::size_t i = 0; i < cc; ++i) {
      for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t k = 0; k < w; ++k) {
          double s = 0.0;
          for (std::size_t l = 0; l < cd; ++l) {
            EXPECT_EQ(out(i, l, j, k), ctx(i, j, k) * p(l, j, k));
            s += out(i, l, j, k);
          }
          EXPECT_NEAR(s, ctx(i, j, k), 1e-12);
        }
      }
    }
  }
}

TEST(Lift, RejectsMismatchedSpatialShape) {
  EXPECT_THROW(lift_outer_product(Tensor({2, 3, 4}), Tensor({5, 3, 5})), ValidationError);
}

TEST(SeExcite, ScalesEachChannel) {
  SplitMix64 rng(2);
  const Tensor f = random_tensor({3, 2, 2}, rng);
  const std::vector<double> g{0.0, 0.5, 1.0};
  const Tensor out = se_excite(f, g);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out[c * 4 + i], g[c] * f[c * 4 + i]);
  }
  EXPECT_THROW(se_excite(f, std::vector<double>{1.0}), ValidationError);
}

TEST(ConvPointwise, MatchesTripleLoop) {
  SplitMix64 rng(3);
  const Tensor in = random_tensor({5, 3, 4}, rng);
  const Tensor k = random_tensor({6, 5}, rng);
  std::vector<double> bias(6);
  for (auto& b : bias) b = rng.normal();
  const Tensor out = conv_pointwise(in, k, bias);
  for (std::size_t o = 0; o < 6; ++o) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        double s = bias[o];
        for (std::size_t i = 0; i < 5; ++i) s += k(o, i) * in(i, r, c);
        EXPECT_NEAR(out(o, r, c), s, 1e-13);
      }
    }
  }
  EXPECT_THROW(conv_pointwise(in, Tensor({6, 4}), bias), ValidationError);
}

TEST(DepthSlices, RegroupRoundTrips) {
  SplitMix64 rng(4);
  const Tensor v = random_tensor({3, 5, 2, 4}, rng);
  const Tensor s = to_depth_slices(v);
  ASSERT_EQ(s.shape(), (Shape{6, 5, 4}));
  EXPECT_EQ(s(2 * 2 + 1, 3, 2), v(2, 3, 1, 2));
  EXPECT_EQ(from_depth_slices(s, 3), v);
}

TEST(DepthRefine, MatchesDirectConvolutionOverDepthAndColumns) {
  SplitMix64 rng(5);
  const Tensor v = random_tensor({2, 6, 3, 5}, rng);
  Kernel3x3 k;
  for (auto& t : k) t = rng.normal();
  const Tensor out = depth_refine(v, k);
  ASSERT_EQ(out.shape(), v.shape());
  for (std::size_t f = 0; f < 2; ++f) {
    for (int d = 0; d < 6; ++d) {
      for (std::size_t h = 0; h < 3; ++h) {
        for (int w = 0; w < 5; ++w) {
          double s = 0.0;
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              const int dd = d + a - 1, ww = w + b - 1;
              if (dd < 0 || dd >= 6 || ww < 0 || ww >= 5) continue;
              s += k[static_cast<std::size_t>(3 * a + b)] * v(f, dd, h, ww);
            }
          }
          EXPECT_NEAR(out(f, d, h, w), s, 1e-13);
        }
      }
    }
  }
}

TEST(DepthRefine, IdentityKernelIsExactAndShortDepthRejected) {
  SplitMix64 rng(6);
  const Tensor v = random_tensor({2, 4, 2, 3}, rng);
  EXPECT_EQ(depth_refine(v, kIdentityKernel), v);
  EXPECT_THROW(depth_refine(Tensor({1, 2, 2, 2}), kIdentityKernel), ValidationError);
}

TEST(FiniteDiff, RecoversLinearMapAndReportsNonFinite) {
  const VectorFn f = [](std::span<const double> x) {
    return std::vector<double>{2 * x[0] - x[1], 3 * x[1] + 0.5 * x[2]};
  };
  const std::vector<double> x{0.3, -1.0, 2.0};
  const Eigen::MatrixXd j = finite_diff_jacobian(f, x);
  Eigen::MatrixXd want(2, 3);
  want << 2, -1, 0, 0, 3, 0.5;
  EXPECT_LT((j - want).cwiseAbs().maxCoeff(), 1e-8);
  const VectorFn blowup = [](std::span<const double> x) { return std::vector<double>{1.0 / (x[0] - 1e-7)}; };
  EXPECT_THROW(finite_diff_jacobian(blowup, std::vector<double>{0.0}, 1e-7), ValidationError);
}

}  // namespace
