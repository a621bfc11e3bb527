#include "kanbev/nnprims.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kanbev/error.hpp"

namespace kanbev::nn {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ValidationError(std::string(what) + ": expected rank " + std::to_string(rank) +
                          ", got " + shape_string(t.shape()));
  }
}

}  // namespace

void DepthBinSpec::validate() const {
  if (!(d_min > 0.0)) throw ValidationError("depth bins: d_min must be > 0");
  if (!(d_max > d_min)) throw ValidationError("depth bins: d_max must exceed d_min");
  if (count < 2) throw ValidationError("depth bins: need at least 2 bins");
}

int DepthBinSpec::nearest_bin(double depth) const {
  if (!(depth >= d_min && depth <= d_max)) return -1;
  const auto idx = std::lround((depth - d_min) / step());
  return static_cast<int>(std::clamp<long>(idx, 0, static_cast<long>(count) - 1));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor softmax_over_depth(const Tensor& logits) {
  require_rank(logits, 3, "softmax_over_depth");
  if (!logits.all_finite()) throw ValidationError("softmax_over_depth: non-finite logits");
  const std::size_t bins = logits.extent(0);
  const std::size_t plane = logits.extent(1) * logits.extent(2);
  Tensor out(logits.shape());
  const auto in = logits.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < plane; ++p) {
    double peak = in[p];
    for (std::size_t l = 1; l < bins; ++l) peak = std::max(peak, in[l * plane + p]);
    double total = 0.0;
    for (std::size_t l = 0; l < bins; ++l) {
      const double e = std::exp(in[l * plane + p] - peak);
      dst[l * plane + p] = e;
      total += e;
    }
    for (std::size_t l = 0; l < bins; ++l) dst[l * plane + p] /= total;
  }
  return out;
}

Tensor lift_outer_product(const Tensor& context, const Tensor& prob) {
  require_rank(context, 3, "lift_outer_product(context)");
  require_rank(prob, 3, "lift_outer_product(prob)");
  if (context.extent(1) != prob.extent(1) || context.extent(2) != prob.extent(2)) {
    throw ValidationError("lift_outer_product: spatial shape mismatch " +
                          shape_string(context.shape()) + " vs " + shape_string(prob.shape()));
  }
  const std::size_t cc = context.extent(0);
  const std::size_t cd = prob.extent(0);
  const std::size_t plane = context.extent(1) * context.extent(2);
  Tensor out({cc, cd, context.extent(1), context.extent(2)});
  const auto ctx = context.data();
  const auto pd = prob.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < cc; ++i) {
    for (std::size_t l = 0; l < cd; ++l) {
      double* row = dst.data() + (i * cd + l) * plane;
      const double* c = ctx.data() + i * plane;
      const double* p = pd.data() + l * plane;
      for (std::size_t q = 0; q < plane; ++q) row[q] = c[q] * p[q];
    }
  }
  return out;
}

Tensor se_excite(const Tensor& features, std::span<const double> gates) {
  require_rank(features, 3, "se_excite");
  if (gates.size() != features.extent(0)) {
    throw ValidationError("se_excite: " + std::to_string(gates.size()) + " gates for " +
                          std::to_string(features.extent(0)) + " channels");
  }
  const std::size_t plane = features.extent(1) * features.extent(2);
  Tensor out(features.shape());
  const auto in = features.data();
  auto dst = out.data();
  for (std::size_t c = 0; c < gates.size(); ++c) {
    if (!std::isfinite(gates[c])) throw ValidationError("se_excite: non-finite gate");
    for (std::size_t q = 0; q < plane; ++q) dst[c * plane + q] = gates[c] * in[c * plane + q];
  }
  return out;
}

Tensor conv_pointwise(const Tensor& input, const Tensor& kernel, std::span<const double> bias) {
  require_rank(input, 3, "conv_pointwise(input)");
  require_rank(kernel, 2, "conv_pointwise(kernel)");
  const std::size_t c_in = input.extent(0);
  const std::size_t c_out = kernel.extent(0);
  if (kernel.extent(1) != c_in || bias.size() != c_out) {
    throw ValidationError("conv_pointwise: kernel " + shape_string(kernel.shape()) + ", bias " +
                          std::to_string(bias.size()) + " vs input " +
                          shape_string(input.shape()));
  }
  const std::size_t plane = input.extent(1) * input.extent(2);
  Tensor out({c_out, input.extent(1), input.extent(2)});
  const auto in = input.data();
  const auto w = kernel.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < c_out; ++o) {
    double* row = dst.data() + o * plane;
    std::fill(row, row + plane, bias[o]);
    for (std::size_t c = 0; c < c_in; ++c) {
      const double wc = w[o * c_in + c];
      if (wc == 0.0) continue;
      const double* src = in.data() + c * plane;
      for (std::size_t q = 0; q < plane; ++q) row[q] += wc * src[q];
    }
  }
  return out;
}

Tensor to_depth_slices(const Tensor& volume) {
  require_rank(volume, 4, "to_depth_slices");
  const auto cf = volume.extent(0), cd = volume.extent(1), h = volume.extent(2),
             w = volume.extent(3);
  Tensor out({cf * h, cd, w});
  for (std::size_t f = 0; f < cf; ++f)
    for (std::size_t d = 0; d < cd; ++d)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out(f * h + r, d, c) = volume(f, d, r, c);
  return out;
}

Tensor from_depth_slices(const Tensor& slices, std::size_t channels) {
  require_rank(slices, 3, "from_depth_slices");
  if (channels == 0 || slices.extent(0) % channels != 0) {
    throw ValidationError("from_depth_slices: slice count not divisible by channel count");
  }
  const auto h = slices.extent(0) / channels, cd = slices.extent(1), w = slices.extent(2);
  Tensor out({channels, cd, h, w});
  for (std::size_t f = 0; f < channels; ++f)
    for (std::size_t d = 0; d < cd; ++d)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out(f, d, r, c) = slices(f * h + r, d, c);
  return out;
}

Tensor depth_refine(const Tensor& volume, const Kernel3x3& kernel) {
  require_rank(volume, 4, "depth_refine");
  const auto cf = volume.extent(0), cd = volume.extent(1), h = volume.extent(2),
             w = volume.extent(3);
  if (cd < 3) throw ValidationError("depth_refine: need at least 3 depth bins, got " + std::to_string(cd));

  // Works directly in the 4-D layout; slice (f, r) of the regrouped view is
  // the strided set {(f, d, r, c)}.
  Tensor out(volume.shape());
  const auto in = volume.data();
  auto dst = out.data();
  const std::size_t plane = h * w;
  for (std::size_t f = 0; f < cf; ++f) {
    const double* vol = in.data() + f * cd * plane;
    double* res = dst.data() + f * cd * plane;
    for (std::size_t d = 0; d < cd; ++d) {
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          double acc = 0.0;
          for (int a = 0; a < 3; ++a) {
            const long dd = static_cast<long>(d) + a - 1;
            if (dd < 0 || dd >= static_cast<long>(cd)) continue;
            for (int b = 0; b < 3; ++b) {
              const long cc = static_cast<long>(c) + b - 1;
              if (cc < 0 || cc >= static_cast<long>(w)) continue;
              const double tap = kernel[static_cast<std::size_t>(a * 3 + b)];
              if (tap == 0.0) continue;
              acc += tap * vol[static_cast<std::size_t>(dd) * plane + r * w + static_cast<std::size_t>(cc)];
            }
          }
          res[d * plane + r * w + c] = acc;
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd finite_diff_jacobian(const VectorFn& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw ValidationError("finite_diff_jacobian: step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  const auto base = f(probe);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(base.size()), static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const auto plus = f(probe);
    probe[i] = x[i] - h;
    const auto minus = f(probe);
    probe[i] = x[i];
    if (plus.size() != base.size() || minus.size() != base.size()) {
      throw ValidationError("finite_diff_jacobian: output size changed under perturbation");
    }
    for (std::size_t r = 0; r < base.size(); ++r) {
      if (!std::isfinite(plus[r]) || !std::isfinite(minus[r])) {
        throw ValidationError("finite_diff_jacobian: non-finite output " + std::to_string(r) +
                              " when perturbing input " + std::to_string(i));
      }
      jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = (plus[r] - minus[r]) / (2.0 * h);
    }
  }
  return jac;
}

}  // namespace kanbev::nn
