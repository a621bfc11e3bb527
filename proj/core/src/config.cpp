#include "kanbev/config.hpp"

#include <set>

#include "json.hpp"
#include "kanbev/error.hpp"
#include "kanbev/io.hpp"

namespace kanbev {

using nlohmann::json;

Modality parse_modality(const std::string& name) {
  if (name == "camera") return Modality::kCamera;
  if (name == "camera+radar") return Modality::kCameraRadar;
  throw ValidationError("unknown modality '" + name + "' (expected camera or camera+radar)");
}

std::string to_string(Modality m) { return m == Modality::kCamera ? "camera" : "camera+radar"; }

void PipelineConfig::validate() const {
  if (geometry.feature_stride < 1) throw ValidationError("config geometry: feature_stride must be positive");
  depth_bins.validate();
  depthnet.validate();
  if (depthnet.depth_bins != depth_bins.count) {
    throw ValidationError("config: depthnet depth bins differ from geometry depth bins");
  }
  if (depth_bins.count < 3) throw ValidationError("config: depth refinement needs at least 3 depth bins");
  pillars.validate();
  bev.validate();
  if (radar.vfe_channels == 0) throw ValidationError("config radar: vfe_channels must be positive");
  if (!(radar.prior_gain >= 0.0) || !(radar.prior_sigma_bins > 0.0)) {
    throw ValidationError("config radar: prior_gain must be >= 0 and prior_sigma_bins > 0");
  }
  if (!(radar.velocity_match_radius > 0.0)) throw ValidationError("config radar: velocity_match_radius must be > 0");
  if (workers < 1) throw ValidationError("config: workers must be >= 1");
  for (double t : {fusion.score_thresh, fusion.iou_thresh, head.score_thresh}) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("config: thresholds must lie in [0, 1]");
  }
  if (head.max_detections == 0) throw ValidationError("config head: max_detections must be positive");
}

namespace {

class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (root.contains(name)) {
      node_ = &root.at(name);
      if (!node_->is_object()) throw ValidationError(std::string("config: section '") + name + "' must be an object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config " + name_ + "." + key + ": wrong type");
    }
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, _] : node_->items()) {
      if (!seen_.contains(key)) throw ValidationError("config " + name_ + ": unknown key '" + key + "'");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections{"geometry", "depthnet", "pillars", "radar", "voxelpool", "fusion", "head", "run"};

}  // namespace

PipelineConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw ValidationError("config: top level must be an object");
  for (const auto& [key, _] : root.items()) {
    if (!kSections.contains(key)) throw ValidationError("config: unknown section '" + key + "'");
  }

  PipelineConfig cfg;
  {
    Section s(root, "geometry");
    s.read("feature_stride", cfg.geometry.feature_stride);
    s.read("depth_min", cfg.depth_bins.d_min);
    s.read("depth_max", cfg.depth_bins.d_max);
    s.read("depth_bins", cfg.depth_bins.count);
    s.finish();
    cfg.depthnet.depth_bins = cfg.depth_bins.count;
  }
  {
    Section s(root, "depthnet");
    s.read("feature_channels", cfg.depthnet.feature_channels);
    s.read("context_channels", cfg.depthnet.context_channels);
    s.read("kan_widths", cfg.depthnet.kan_widths);
    s.read("grid_intervals", cfg.depthnet.grid_intervals);
    s.read("spline_degree", cfg.depthnet.spline_degree);
    s.read("scale_intrinsics", cfg.depthnet.scales.intrinsics);
    s.read("scale_rotation", cfg.depthnet.scales.rotation);
    s.read("scale_translation", cfg.depthnet.scales.translation);
    s.read("refine_kernel", cfg.refine_kernel);
    s.read("param_seed", cfg.param_seed);
    s.finish();
  }
  {
    Section s(root, "pillars");
    auto& p = cfg.pillars;
    s.read("x_min", p.x_min);
    s.read("x_max", p.x_max);
    s.read("y_min", p.y_min);
    s.read("y_max", p.y_max);
    s.read("dx", p.dx);
    s.read("dy", p.dy);
    s.read("rows", p.rows);
    s.read("cols", p.cols);
    s.read("max_points", p.max_points);
    s.read("max_pillars", p.max_pillars);
    s.finish();
  }
  {
    Section s(root, "radar");
    s.read("vfe_channels", cfg.radar.vfe_channels);
    s.read("prior_gain", cfg.radar.prior_gain);
    s.read("prior_sigma_bins", cfg.radar.prior_sigma_bins);
    s.read("supervise_depth", cfg.radar.supervise_depth);
    s.read("velocity_match_radius", cfg.radar.velocity_match_radius);
    s.finish();
  }
  {
    Section s(root, "voxelpool");
    auto& b = cfg.bev;
    s.read("x_min", b.x_min);
    s.read("x_max", b.x_max);
    s.read("y_min", b.y_min);
    s.read("y_max", b.y_max);
    s.read("nx", b.nx);
    s.read("ny", b.ny);
    std::string impl(voxelpool::to_string(cfg.pooling));
    s.read("impl", impl);
    cfg.pooling = voxelpool::parse_pool_impl(impl);
    s.read("workers", cfg.workers);
    s.finish();
  }
  {
    Section s(root, "fusion");
    s.read("score_thresh", cfg.fusion.score_thresh);
    s.read("iou_thresh", cfg.fusion.iou_thresh);
    s.finish();
  }
  {
    Section s(root, "head");
    s.read("score_thresh", cfg.head.score_thresh);
    s.read("max_detections", cfg.head.max_detections);
    s.read("bias", cfg.head.bias);
    s.read("kernel_scale", cfg.head.kernel_scale);
    s.finish();
  }
  {
    Section s(root, "run");
    std::string modality = to_string(cfg.modality);
    s.read("modality", modality);
    cfg.modality = parse_modality(modality);
    s.read("sequential", cfg.sequential);
    s.finish();
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) { return config_from_json(io::read_text(path)); }

std::string config_to_json(const PipelineConfig& cfg) {
  json root;
  root["geometry"] = {{"feature_stride", cfg.geometry.feature_stride},
                      {"depth_min", cfg.depth_bins.d_min},
                      {"depth_max", cfg.depth_bins.d_max},
                      {"depth_bins", cfg.depth_bins.count}};
  root["depthnet"] = {{"feature_channels", cfg.depthnet.feature_channels},
                      {"context_channels", cfg.depthnet.context_channels},
                      {"kan_widths", cfg.depthnet.kan_widths},
                      {"grid_intervals", cfg.depthnet.grid_intervals},
                      {"spline_degree", cfg.depthnet.spline_degree},
                      {"scale_intrinsics", cfg.depthnet.scales.intrinsics},
                      {"scale_rotation", cfg.depthnet.scales.rotation},
                      {"scale_translation", cfg.depthnet.scales.translation},
                      {"refine_kernel", cfg.refine_kernel},
                      {"param_seed", cfg.param_seed}};
  const auto& p = cfg.pillars;
  root["pillars"] = {{"x_min", p.x_min}, {"x_max", p.x_max},   {"y_min", p.y_min},
                     {"y_max", p.y_max}, {"dx", p.dx},         {"dy", p.dy},
                     {"rows", p.rows},   {"cols", p.cols},     {"max_points", p.max_points},
                     {"max_pillars", p.max_pillars}};
  root["radar"] = {{"vfe_channels", cfg.radar.vfe_channels},
                   {"prior_gain", cfg.radar.prior_gain},
                   {"prior_sigma_bins", cfg.radar.prior_sigma_bins},
                   {"supervise_depth", cfg.radar.supervise_depth},
                   {"velocity_match_radius", cfg.radar.velocity_match_radius}};
  const auto& b = cfg.bev;
  root["voxelpool"] = {{"x_min", b.x_min}, {"x_max", b.x_max}, {"y_min", b.y_min}, {"y_max", b.y_max},
                       {"nx", b.nx},       {"ny", b.ny},       {"impl", std::string(voxelpool::to_string(cfg.pooling))},
                       {"workers", cfg.workers}};
  root["fusion"] = {{"score_thresh", cfg.fusion.score_thresh}, {"iou_thresh", cfg.fusion.iou_thresh}};
  root["head"] = {{"score_thresh", cfg.head.score_thresh},
                  {"max_detections", cfg.head.max_detections},
                  {"bias", cfg.head.bias},
                  {"kernel_scale", cfg.head.kernel_scale}};
  root["run"] = {{"modality", to_string(cfg.modality)}, {"sequential", cfg.sequential}};
  return root.dump(2) + "\n";
}

}  // namespace kanbev
