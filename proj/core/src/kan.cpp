#include "kanbev/kan.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "kanbev/error.hpp"
#include "kanbev/nnprims.hpp"
#include "kanbev/rng.hpp"

namespace kanbev::kan {

using json = nlohmann::json;

BSplineBasis::BSplineBasis(int intervals, int degree, double lo, double hi)
    : intervals_(intervals), degree_(degree), lo_(lo), hi_(hi) {
  if (intervals < 1 || degree < 1 || degree > 15 || !(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ValidationError("bspline: degenerate grid (need intervals >= 1, 1 <= degree <= 15, lo < hi)");
  }
  const double h = (hi - lo) / intervals;
  knots_.resize(static_cast<std::size_t>(intervals + 2 * degree + 1));
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    knots_[i] = lo + (static_cast<double>(i) - degree) * h;
  }
  knots_[static_cast<std::size_t>(degree)] = lo;
  knots_[static_cast<std::size_t>(degree + intervals)] = hi;
}

std::size_t BSplineBasis::find_span(double x) const {
  const auto p = static_cast<std::size_t>(degree_);
  const std::size_t last = p + static_cast<std::size_t>(intervals_) - 1;
  if (x >= hi_) return last;
  // First knot strictly greater than x, minus one.
  const auto it = std::upper_bound(knots_.begin() + static_cast<long>(p), knots_.begin() + static_cast<long>(last + 1), x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(it - knots_.begin()) - 1, p, last);
}

void BSplineBasis::nonzero_basis(std::size_t span, double x, int p, std::span<double> out) const {
  // Triangular table from degree 0 up to p (de Boor / Piegl-Tiller).
  std::array<double, 16> left{}, right{};
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[span + 1 - static_cast<std::size_t>(j)];
    right[static_cast<std::size_t>(j)] = knots_[span + static_cast<std::size_t>(j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = out[static_cast<std::size_t>(r)] / denom;
      out[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    out[static_cast<std::size_t>(j)] = saved;
  }
}

bool BSplineBasis::evaluate(double x, std::span<double> weights) const {
  if (weights.size() != size()) throw ValidationError("bspline: weight buffer has wrong size");
  if (!std::isfinite(x)) throw ValidationError("bspline: non-finite input");
  const bool clamped = x < lo_ || x > hi_;
  x = std::clamp(x, lo_, hi_);
  std::fill(weights.begin(), weights.end(), 0.0);
  const std::size_t span = find_span(x);
  std::array<double, 16> local{};
  nonzero_basis(span, x, degree_, local);
  const std::size_t first = span - static_cast<std::size_t>(degree_);
  for (int r = 0; r <= degree_; ++r) weights[first + static_cast<std::size_t>(r)] = local[static_cast<std::size_t>(r)];
  return clamped;
}

std::vector<double> BSplineBasis::evaluate(double x) const {
  std::vector<double> w(size());
  evaluate(x, w);
  return w;
}

bool BSplineBasis::evaluate_with_derivative(double x, std::span<double> weights, std::span<double> slopes) const {
  const bool clamped = evaluate(x, weights);
  if (slopes.size() != size()) throw ValidationError("bspline: slope buffer has wrong size");
  std::fill(slopes.begin(), slopes.end(), 0.0);
  if (clamped) return true;
  // B'_{m,p} = p/(t_{m+p} - t_m) B_{m,p-1} - p/(t_{m+p+1} - t_{m+1}) B_{m+1,p-1}
  const std::size_t span = find_span(x);
  const int p = degree_;
  std::array<double, 16> lower{};
  nonzero_basis(span, x, p - 1, lower);
  const std::size_t lower_first = span - static_cast<std::size_t>(p - 1);
  auto lower_at = [&](std::size_t m) -> double {
    if (m < lower_first || m > span) return 0.0;
    return lower[m - lower_first];
  };
  for (std::size_t m = span - static_cast<std::size_t>(p); m <= span; ++m) {
    const double a = p / (knots_[m + static_cast<std::size_t>(p)] - knots_[m]);
    const double b = p / (knots_[m + static_cast<std::size_t>(p) + 1] - knots_[m + 1]);
    slopes[m] = a * lower_at(m) - b * lower_at(m + 1);
  }
  return false;
}

double silu(double x) { return x * nn::sigmoid(x); }

double silu_derivative(double x) {
  const double s = nn::sigmoid(x);
  return s + x * s * (1.0 - s);
}

KanLayer::KanLayer(std::size_t in, std::size_t out, BSplineBasis b)
    : in_dim(in), out_dim(out), basis(std::move(b)),
      spline_coeffs(out * in * basis.size(), 0.0), shortcut_weights(out * in, 0.0) {}

void KanLayer::validate() const {
  if (in_dim == 0 || out_dim == 0) throw ValidationError("kan layer: dimensions must be positive");
  if (spline_coeffs.size() != out_dim * in_dim * basis.size() || shortcut_weights.size() != out_dim * in_dim) {
    throw ValidationError("kan layer: coefficient tensor shape inconsistent with dimensions");
  }
  for (double v : spline_coeffs) {
    if (!std::isfinite(v)) throw ValidationError("kan layer: non-finite spline coefficient");
  }
  for (double v : shortcut_weights) {
    if (!std::isfinite(v)) throw ValidationError("kan layer: non-finite shortcut weight");
  }
}

KanLayer KanLayer::random(std::size_t in, std::size_t out, const BSplineBasis& basis, std::uint64_t seed) {
  KanLayer layer(in, out, basis);
  SplitMix64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& c : layer.spline_coeffs) c = 0.1 * scale * rng.normal();
  for (auto& w : layer.shortcut_weights) w = scale * rng.normal();
  return layer;
}

std::vector<double> kan_layer_forward(const KanLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in_dim) {
    throw ValidationError("kan_layer_forward: expected " + std::to_string(layer.in_dim) + " inputs, got " +
                          std::to_string(x.size()));
  }
  const std::size_t nb = layer.basis.size();
  std::vector<double> basis(layer.in_dim * nb);
  std::vector<double> shortcut(layer.in_dim);
  for (std::size_t i = 0; i < layer.in_dim; ++i) {
    if (!std::isfinite(x[i])) throw ValidationError("kan_layer_forward: non-finite input");
    layer.basis.evaluate(x[i], std::span<double>(basis).subspan(i * nb, nb));
    shortcut[i] = silu(x[i]);
  }
  std::vector<double> out(layer.out_dim, 0.0);
  for (std::size_t j = 0; j < layer.out_dim; ++j) {
    double acc = 0.0;
    const double* c = layer.spline_coeffs.data() + j * layer.in_dim * nb;
    for (std::size_t k = 0; k < layer.in_dim * nb; ++k) acc += c[k] * basis[k];
    const double* w = layer.shortcut_weights.data() + j * layer.in_dim;
    for (std::size_t i = 0; i < layer.in_dim; ++i) acc += w[i] * shortcut[i];
    out[j] = acc;
  }
  return out;
}

Eigen::MatrixXd kan_layer_jacobian(const KanLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in_dim) throw ValidationError("kan_layer_jacobian: dimension mismatch");
  const std::size_t nb = layer.basis.size();
  std::vector<double> weights(nb), slopes(nb);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(layer.out_dim), static_cast<Eigen::Index>(layer.in_dim));
  for (std::size_t i = 0; i < layer.in_dim; ++i) {
    layer.basis.evaluate_with_derivative(x[i], weights, slopes);
    const double ds = silu_derivative(x[i]);
    for (std::size_t j = 0; j < layer.out_dim; ++j) {
      double acc = layer.shortcut_weights[j * layer.in_dim + i] * ds;
      for (std::size_t b = 0; b < nb; ++b) acc += layer.coeff(j, i, b) * slopes[b];
      jac(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = acc;
    }
  }
  return jac;
}

std::vector<double> kan_stack_forward(std::span<const KanLayer> stack, std::span<const double> x) {
  std::vector<double> h(x.begin(), x.end());
  for (const auto& layer : stack) h = kan_layer_forward(layer, h);
  return h;
}

Eigen::MatrixXd kan_stack_jacobian(std::span<const KanLayer> stack, std::span<const double> x) {
  std::vector<double> h(x.begin(), x.end());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.size()));
  for (const auto& layer : stack) {
    jac = kan_layer_jacobian(layer, h) * jac;
    h = kan_layer_forward(layer, h);
  }
  return jac;
}

std::array<double, kCameraParamDim> flatten_camera_params(const CameraRig& rig) {
  std::array<double, kCameraParamDim> v{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      v[static_cast<std::size_t>(r * 3 + c)] = rig.intrinsics(r, c);
      v[static_cast<std::size_t>(9 + r * 3 + c)] = rig.rotation(r, c);
    }
    v[static_cast<std::size_t>(18 + r)] = rig.translation(r);
  }
  return v;
}

CameraParamVector embed_camera_params(const CameraRig& rig, const EmbeddingScales& scales) {
  rig.validate();
  if (!(scales.intrinsics > 0.0) || !(scales.rotation > 0.0) || !(scales.translation > 0.0)) {
    throw ValidationError("camera embedding: scales must be positive");
  }
  CameraParamVector out{flatten_camera_params(rig), scales};
  for (std::size_t i = 0; i < 9; ++i) out.values[i] /= scales.intrinsics;
  for (std::size_t i = 9; i < 18; ++i) out.values[i] /= scales.rotation;
  for (std::size_t i = 18; i < 21; ++i) out.values[i] /= scales.translation;
  return out;
}

void DepthNetConfig::validate() const {
  if (feature_channels == 0 || depth_bins < 2 || context_channels == 0) {
    throw ValidationError("depthnet config: channel counts must be positive and C_D >= 2");
  }
  if (kan_widths.size() < 2 || kan_widths.front() != kCameraParamDim || kan_widths.back() != feature_channels) {
    throw ValidationError("depthnet config: KAN widths must run from 27 to the feature channel count");
  }
  for (auto w : kan_widths) {
    if (w == 0) throw ValidationError("depthnet config: zero KAN width");
  }
}

void DepthNetParams::validate() const {
  config.validate();
  if (kan.size() + 1 != config.kan_widths.size()) throw ValidationError("depthnet params: KAN depth mismatch");
  for (std::size_t l = 0; l < kan.size(); ++l) {
    kan[l].validate();
    if (kan[l].in_dim != config.kan_widths[l] || kan[l].out_dim != config.kan_widths[l + 1]) {
      throw ValidationError("depthnet params: KAN layer " + std::to_string(l) + " has wrong widths");
    }
  }
  const std::size_t heads = config.depth_bins + config.context_channels;
  if (head_kernel.shape() != Shape{heads, config.feature_channels} || head_bias.size() != heads) {
    throw ValidationError("depthnet params: head must be (C_D + C_C) x C_F");
  }
}

DepthNetParams DepthNetParams::random(const DepthNetConfig& config, std::uint64_t seed) {
  config.validate();
  DepthNetParams p;
  p.config = config;
  const BSplineBasis basis(config.grid_intervals, config.spline_degree);
  for (std::size_t l = 0; l + 1 < config.kan_widths.size(); ++l) {
    p.kan.push_back(KanLayer::random(config.kan_widths[l], config.kan_widths[l + 1], basis, mix_seed(seed, l)));
  }
  const std::size_t heads = config.depth_bins + config.context_channels;
  p.head_kernel = Tensor({heads, config.feature_channels});
  SplitMix64 rng(mix_seed(seed, 1000));
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.feature_channels));
  for (auto& w : p.head_kernel.data()) w = scale * rng.normal();
  p.head_bias.assign(heads, 0.0);
  return p;
}

std::vector<double> camera_gates(const DepthNetParams& params, const CameraParamVector& embedding) {
  auto v = kan_stack_forward(params.kan, embedding.values);
  for (auto& g : v) g = nn::sigmoid(g);
  return v;
}

CameraDepthOutput depthnet_camera(const Tensor& features, const CameraParamVector& embedding,
                                  const DepthNetParams& params) {
  const auto& cfg = params.config;
  if (features.rank() != 3 || features.extent(0) != cfg.feature_channels) {
    throw ValidationError("depthnet: image features must be C_F x H x W with C_F = " +
                          std::to_string(cfg.feature_channels) + ", got " + shape_string(features.shape()));
  }
  CameraDepthOutput out;
  out.gates = camera_gates(params, embedding);
  const Tensor excited = nn::se_excite(features, out.gates);
  const Tensor heads = nn::conv_pointwise(excited, params.head_kernel, params.head_bias);
  const std::size_t plane = features.extent(1) * features.extent(2);
  const auto hv = heads.data();
  const std::size_t cd = cfg.depth_bins;
  out.depth_logits = Tensor({cd, features.extent(1), features.extent(2)},
                            std::vector<double>(hv.begin(), hv.begin() + static_cast<long>(cd * plane)));
  out.context = Tensor({cfg.context_channels, features.extent(1), features.extent(2)},
                       std::vector<double>(hv.begin() + static_cast<long>(cd * plane), hv.end()));
  return out;
}

DepthNetOutputs depthnet_forward(std::span<const Tensor> image_features, std::span<const CameraRig> rigs,
                                 const DepthNetParams& params, bool parallel) {
  if (image_features.empty()) throw ValidationError("depthnet: at least one camera is required");
  if (image_features.size() > 6) throw ValidationError("depthnet: at most 6 cameras are supported");
  if (image_features.size() != rigs.size()) throw ValidationError("depthnet: one rig per camera feature map");
  const auto& first = image_features.front().shape();
  for (const auto& f : image_features) {
    if (f.shape() != first) throw ValidationError("depthnet: all cameras must share one feature shape");
  }
  params.validate();

  DepthNetOutputs out;
  out.cameras.resize(image_features.size());
  auto run = [&](std::size_t i) {
    out.cameras[i] = depthnet_camera(image_features[i], embed_camera_params(rigs[i], params.config.scales), params);
  };
  if (parallel && image_features.size() > 1) {
    std::vector<std::exception_ptr> errors(image_features.size());
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < image_features.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          run(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    workers.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < image_features.size(); ++i) run(i);
  }
  return out;
}

Eigen::MatrixXd depthnet_jacobian_wrt_features(const Tensor& features, const CameraParamVector& embedding,
                                               const DepthNetParams& params) {
  const auto gates = camera_gates(params, embedding);
  const std::size_t cf = params.config.feature_channels;
  const std::size_t heads = params.head_kernel.extent(0);
  const std::size_t plane = features.extent(1) * features.extent(2);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(heads * plane),
                                              static_cast<Eigen::Index>(cf * plane));
  for (std::size_t o = 0; o < heads; ++o) {
    for (std::size_t c = 0; c < cf; ++c) {
      const double w = params.head_kernel(o, c) * gates[c];
      for (std::size_t p = 0; p < plane; ++p) {
        jac(static_cast<Eigen::Index>(o * plane + p), static_cast<Eigen::Index>(c * plane + p)) = w;
      }
    }
  }
  return jac;
}

Eigen::MatrixXd depthnet_jacobian_wrt_embedding(const Tensor& features, const CameraParamVector& embedding,
                                                const DepthNetParams& params) {
  const auto raw = kan_stack_forward(params.kan, embedding.values);
  const Eigen::MatrixXd dv = kan_stack_jacobian(params.kan, embedding.values);
  const std::size_t cf = params.config.feature_channels;
  const std::size_t heads = params.head_kernel.extent(0);
  const std::size_t plane = features.extent(1) * features.extent(2);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(heads), static_cast<Eigen::Index>(cf));
  for (std::size_t o = 0; o < heads; ++o)
    for (std::size_t c = 0; c < cf; ++c) w(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c)) = params.head_kernel(o, c);

  Eigen::MatrixXd jac(static_cast<Eigen::Index>(heads * plane), dv.cols());
  Eigen::VectorXd scale(static_cast<Eigen::Index>(cf));
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < cf; ++c) {
      const double g = nn::sigmoid(raw[c]);
      scale(static_cast<Eigen::Index>(c)) = features[c * plane + p] * g * (1.0 - g);
    }
    const Eigen::MatrixXd block = w * (scale.asDiagonal() * dv);
    for (std::size_t o = 0; o < heads; ++o) jac.row(static_cast<Eigen::Index>(o * plane + p)) = block.row(static_cast<Eigen::Index>(o));
  }
  return jac;
}

namespace {

Tensor vector_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

}  // namespace

void save_depthnet(const DepthNetParams& params, const std::string& dir) {
  params.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create parameter directory " + dir + ": " + ec.message());

  const auto& cfg = params.config;
  json manifest;
  manifest["format"] = "kanbev-depthnet/1";
  manifest["config"] = {{"feature_channels", cfg.feature_channels},
                        {"depth_bins", cfg.depth_bins},
                        {"context_channels", cfg.context_channels},
                        {"kan_widths", cfg.kan_widths},
                        {"embedding_scales",
                         {{"intrinsics", cfg.scales.intrinsics},
                          {"rotation", cfg.scales.rotation},
                          {"translation", cfg.scales.translation}}}};
  manifest["basis"] = {{"intervals", cfg.grid_intervals}, {"degree", cfg.spline_degree}, {"lo", -1.0}, {"hi", 1.0}};
  json blocks = json::array();
  auto add = [&](const std::string& name, const Tensor& t) {
    const std::string file = name + ".tnsr";
    save_tensor((fs::path(dir) / file).string(), t);
    blocks.push_back({{"name", name}, {"file", file}, {"shape", t.shape()}});
  };
  for (std::size_t l = 0; l < params.kan.size(); ++l) {
    const auto& layer = params.kan[l];
    add("kan" + std::to_string(l) + "_spline",
        Tensor({layer.out_dim, layer.in_dim, layer.basis.size()}, layer.spline_coeffs));
    add("kan" + std::to_string(l) + "_shortcut", Tensor({layer.out_dim, layer.in_dim}, layer.shortcut_weights));
  }
  add("head_kernel", params.head_kernel);
  add("head_bias", vector_tensor(params.head_bias));
  manifest["blocks"] = blocks;

  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

DepthNetParams load_depthnet(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw IoError("missing manifest.json in " + dir);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed depthnet manifest: ") + e.what());
  }
  try {
    DepthNetConfig cfg;
    const auto& c = manifest.at("config");
    cfg.feature_channels = c.at("feature_channels").get<std::size_t>();
    cfg.depth_bins = c.at("depth_bins").get<std::size_t>();
    cfg.context_channels = c.at("context_channels").get<std::size_t>();
    cfg.kan_widths = c.at("kan_widths").get<std::vector<std::size_t>>();
    cfg.scales.intrinsics = c.at("embedding_scales").at("intrinsics").get<double>();
    cfg.scales.rotation = c.at("embedding_scales").at("rotation").get<double>();
    cfg.scales.translation = c.at("embedding_scales").at("translation").get<double>();
    const auto& b = manifest.at("basis");
    cfg.grid_intervals = b.at("intervals").get<int>();
    cfg.spline_degree = b.at("degree").get<int>();
    const BSplineBasis basis(cfg.grid_intervals, cfg.spline_degree, b.at("lo").get<double>(), b.at("hi").get<double>());

    std::map<std::string, Tensor> blocks;
    for (const auto& blk : manifest.at("blocks")) {
      blocks[blk.at("name").get<std::string>()] =
          load_tensor((fs::path(dir) / blk.at("file").get<std::string>()).string());
    }
    auto take = [&](const std::string& name) -> Tensor& {
      auto it = blocks.find(name);
      if (it == blocks.end()) throw ValidationError("depthnet manifest lacks block " + name);
      return it->second;
    };

    DepthNetParams p;
    p.config = cfg;
    for (std::size_t l = 0; l + 1 < cfg.kan_widths.size(); ++l) {
      KanLayer layer(cfg.kan_widths[l], cfg.kan_widths[l + 1], basis);
      layer.spline_coeffs = take("kan" + std::to_string(l) + "_spline").values();
      layer.shortcut_weights = take("kan" + std::to_string(l) + "_shortcut").values();
      p.kan.push_back(std::move(layer));
    }
    p.head_kernel = take("head_kernel");
    p.head_bias = take("head_bias").values();
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed depthnet manifest: ") + e.what());
  }
}

}  // namespace kanbev::kan
