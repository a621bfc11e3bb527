#include "kanbev/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <type_traits>

#include "json.hpp"
#include "kanbev/error.hpp"
#include "kanbev/kan.hpp"
#include "kanbev/nnprims.hpp"
#include "kanbev/rng.hpp"
#include "kanbev/voxelpool.hpp"

namespace kanbev {

using nlohmann::json;

namespace {

enum ParamStream : std::uint64_t { kVfe = 11, kRadarProj = 12, kDepthProj = 13, kHead = 14, kPillarSample = 15 };

class StageRunner {
 public:
  explicit StageRunner(RunReport& report) : report_(report) {}

  template <typename F>
  auto operator()(const char* name, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto record = [&] {
      report_.timings.emplace_back(name,
                                   std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    };
    try {
      if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
        fn();
        record();
      } else {
        auto out = fn();
        record();
        return out;
      }
    } catch (const StageError&) {
      throw;
    } catch (const ValidationError& e) {
      throw StageError(name, e.what());
    }
  }

 private:
  RunReport& report_;
};

std::uint64_t combine(std::uint64_t seed, std::uint64_t v) {
  return seed ^ (v + 0x9E3779B97F4A7C15ULL + (seed << 6) + (seed >> 2));
}

std::uint64_t tensors_checksum(std::span<const Tensor> ts) {
  std::uint64_t h = 0;
  for (const auto& t : ts) h = combine(h, tensor_checksum(t));
  return h;
}

std::uint64_t maps_checksum(std::span<const DepthMap> maps) {
  std::uint64_t h = 0;
  for (const auto& m : maps) h = combine(h, bytes_checksum(m.values));
  return h;
}

Tensor random_kernel(std::size_t out, std::size_t in, double scale, std::uint64_t seed) {
  Tensor k({out, in});
  SplitMix64 rng(seed);
  for (double& v : k.data()) v = scale * rng.normal();
  return k;
}

std::vector<Vec3> xyz_of(const pillars::RadarPointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.emplace_back(p[0], p[1], p[2]);
  return out;
}

DepthMap rasterize_cloud(std::span<const Vec3> points, const CameraRig& rig) {
  const auto proj = project_points(points, rig);
  return rasterize_depth_map(proj.scaled, rig.image_size).map;
}

bool in_bin_range(double d, const nn::DepthBinSpec& bins) { return d != DepthMap::kMissing && bins.nearest_bin(d) >= 0; }

void check_scene(const Scene& scene, const PipelineConfig& cfg) {
  if (scene.rigs.empty()) throw ValidationError("scene has no cameras");
  if (scene.features.size() != scene.rigs.size()) throw ValidationError("one feature map per camera required");
  if (scene.radar.empty() || scene.poses.size() != scene.radar.size()) {
    throw ValidationError("one radar sweep per ego pose required");
  }
  const ImageSize fs = scene.feature_size();
  for (std::size_t k = 0; k < scene.features.size(); ++k) {
    const auto& f = scene.features[k];
    if (f.rank() != 3 || f.extent(0) != cfg.depthnet.feature_channels ||
        f.extent(1) != static_cast<std::size_t>(fs.height) || f.extent(2) != static_cast<std::size_t>(fs.width)) {
      throw ValidationError("camera " + std::to_string(k) + " features " + shape_string(f.shape()) + " do not match " +
                            std::to_string(cfg.depthnet.feature_channels) + " channels at " +
                            std::to_string(fs.height) + "x" + std::to_string(fs.width));
    }
  }
  if (scene.spec.feature_stride != cfg.geometry.feature_stride) {
    throw ValidationError("scene feature stride differs from config geometry.feature_stride");
  }
}

// Per-cell centroids of a cloud: channels (sum x, sum y, sum z, count).
voxelpool::PoolResult centroid_grid(std::span<const Vec3> points, const PipelineConfig& cfg, int workers) {
  voxelpool::FeaturedPoints fp;
  fp.channels = 4;
  fp.positions.assign(points.begin(), points.end());
  fp.features.reserve(points.size() * 4);
  for (const auto& p : points) fp.features.insert(fp.features.end(), {p.x(), p.y(), p.z(), 1.0});
  return voxelpool::pool(cfg.pooling, fp, cfg.bev, workers);
}

struct Centroid {
  std::size_t cell;
  Vec3 pos;
};

std::vector<Centroid> centroids_of(const Tensor& grid) {
  const std::size_t plane = grid.extent(1) * grid.extent(2);
  const auto d = grid.data();
  std::vector<Centroid> out;
  for (std::size_t cell = 0; cell < plane; ++cell) {
    const double n = d[3 * plane + cell];
    if (n > 0.5) out.push_back({cell, Vec3(d[cell] / n, d[plane + cell] / n, d[2 * plane + cell] / n)});
  }
  return out;
}

// One box per occupied radar cell; velocity from the nearest centroid of the
// previous sweep after ego-motion alignment.
std::vector<DetectionBox> radar_boxes(const Scene& scene, const PipelineConfig& cfg, int workers) {
  const auto now = centroids_of(centroid_grid(xyz_of(scene.current_radar()), cfg, workers).grid.data);
  std::vector<Centroid> prev;
  double dt = 0.0;
  if (scene.radar.size() >= 2) {
    const std::size_t k = scene.radar.size() - 2;
    const auto aligned = transform_ego(xyz_of(scene.radar[k]), scene.poses[k], scene.current_pose());
    prev = centroids_of(centroid_grid(aligned, cfg, workers).grid.data);
    dt = scene.current_pose().timestamp - scene.poses[k].timestamp;
  }
  std::vector<DetectionBox> out;
  for (const auto& c : now) {
    DetectionBox b;
    b.center = c.pos;
    b.size = Vec3(cfg.bev.dx(), cfg.bev.dy(), 1.0);
    const Centroid* best = nullptr;
    double best_d = cfg.radar.velocity_match_radius;
    for (const auto& p : prev) {
      const double d = std::hypot(c.pos.x() - p.pos.x(), c.pos.y() - p.pos.y());
      if (d <= best_d) {
        best_d = d;
        best = &p;
      }
    }
    if (best != nullptr && dt > 0.0) {
      b.velocity = {(c.pos.x() - best->pos.x()) / dt, (c.pos.y() - best->pos.y()) / dt};
    }
    out.push_back(b);
  }
  return out;
}

int attribute_for(const metrics::ClassInfo& info, int class_id, double speed) {
  if (!info.traits.attribute) return -1;
  const bool moving = speed > 0.5;
  if (class_id <= 4) return moving ? 0 : 1;  // vehicle.moving / vehicle.parked
  return moving ? 0 : 1;                     // pedestrian.moving|standing, cycle.with|without_rider
}

}  // namespace

std::string hex_checksum(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

DepthTargets depth_targets(const Scene& scene, const PipelineConfig& cfg) {
  const auto lidar = xyz_of(scene.lidar);
  const auto radar = xyz_of(scene.current_radar());
  std::vector<Vec3> both(lidar);
  both.insert(both.end(), radar.begin(), radar.end());
  DepthTargets t;
  for (const auto& full : scene.rigs) {
    const CameraRig rig = full.downsampled(cfg.geometry.feature_stride);
    t.lidar.push_back(rasterize_cloud(lidar, rig));
    t.radar.push_back(rasterize_cloud(radar, rig));
    t.combined.push_back(cfg.radar.supervise_depth ? rasterize_cloud(both, rig) : t.lidar.back());
  }
  return t;
}

void add_radar_depth_prior(Tensor& logits, const DepthMap& radar, const nn::DepthBinSpec& bins, double gain,
                           double sigma_bins) {
  const std::size_t plane = static_cast<std::size_t>(radar.height) * radar.width;
  if (logits.rank() != 3 || logits.extent(0) != bins.count || logits.extent(1) * logits.extent(2) != plane) {
    throw ValidationError("radar depth prior: logits " + shape_string(logits.shape()) + " do not match the radar map");
  }
  auto d = logits.data();
  for (std::size_t px = 0; px < plane; ++px) {
    const double depth = radar.values[px];
    if (!in_bin_range(depth, bins)) continue;
    const double b = (depth - bins.d_min) / bins.step();
    for (std::size_t l = 0; l < bins.count; ++l) {
      const double z = (static_cast<double>(l) - b) / sigma_bins;
      d[l * plane + px] += gain * std::exp(-0.5 * z * z);
    }
  }
}

namespace {

fusion::DepthLoss pooled_depth_loss(std::span<const Tensor> probs, std::span<const DepthMap> targets,
                                    const nn::DepthBinSpec& bins) {
  fusion::DepthLoss total;
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const auto& t = targets[k];
    if (std::none_of(t.values.begin(), t.values.end(), [&](double d) { return in_bin_range(d, bins); })) continue;
    const auto l = fusion::depth_bce_loss(probs[k], t, bins);
    acc += l.value * static_cast<double>(l.supervised_pixels);
    total.supervised_pixels += l.supervised_pixels;
  }
  if (total.supervised_pixels > 0) total.value = acc / static_cast<double>(total.supervised_pixels);
  return total;
}

}  // namespace

DepthComparison compare_depth_supervision(const Scene& scene, const PipelineConfig& cfg) {
  cfg.validate();
  check_scene(scene, cfg);
  const auto targets = depth_targets(scene, cfg);
  DepthComparison out;
  for (std::size_t k = 0; k < targets.lidar.size(); ++k) {
    for (std::size_t px = 0; px < targets.lidar[k].values.size(); ++px) {
      if (in_bin_range(targets.lidar[k].values[px], cfg.depth_bins)) continue;
      ++out.lidar_missing;
      out.radar_fill += in_bin_range(targets.radar[k].values[px], cfg.depth_bins);
    }
  }
  out.coverage = out.lidar_missing ? static_cast<double>(out.radar_fill) / static_cast<double>(out.lidar_missing) : 0.0;

  const auto params = kan::DepthNetParams::random(cfg.depthnet, cfg.param_seed);
  const auto net = kan::depthnet_forward(scene.features, scene.rigs, params, !cfg.sequential);
  std::vector<Tensor> cam, fused;
  for (std::size_t k = 0; k < net.cameras.size(); ++k) {
    cam.push_back(nn::softmax_over_depth(net.cameras[k].depth_logits));
    Tensor logits = net.cameras[k].depth_logits;
    add_radar_depth_prior(logits, targets.radar[k], cfg.depth_bins, cfg.radar.prior_gain, cfg.radar.prior_sigma_bins);
    fused.push_back(nn::softmax_over_depth(logits));
  }
  out.camera = pooled_depth_loss(cam, targets.combined, cfg.depth_bins);
  out.camera_radar = pooled_depth_loss(fused, targets.combined, cfg.depth_bins);
  return out;
}

std::vector<Peak> extract_peaks(const Tensor& heatmap, double score_thresh, std::size_t max_peaks) {
  if (heatmap.rank() != 3) throw ValidationError("extract_peaks: expected a classes x ny x nx heatmap");
  const int ny = static_cast<int>(heatmap.extent(1)), nx = static_cast<int>(heatmap.extent(2));
  std::vector<Peak> peaks;
  for (std::size_t k = 0; k < heatmap.extent(0); ++k) {
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < nx; ++c) {
        const double v = heatmap(k, r, c);
        if (!(v >= score_thresh)) continue;
        bool peak = true;
        for (int dr = -1; dr <= 1 && peak; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if ((dr == 0 && dc == 0) || rr < 0 || cc < 0 || rr >= ny || cc >= nx) continue;
            const double n = heatmap(k, rr, cc);
            // Plateaus keep their first cell in scan order.
            const bool earlier = dr < 0 || (dr == 0 && dc < 0);
            if (n > v || (earlier && n == v)) {
              peak = false;
              break;
            }
          }
        }
        if (peak) peaks.push_back({static_cast<int>(k), static_cast<std::size_t>(r) * nx + c, v});
      }
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (peaks.size() > max_peaks) peaks.resize(max_peaks);
  return peaks;
}

RunResult run_pipeline(const Scene& scene, const PipelineConfig& cfg) {
  RunResult result;
  RunReport& rep = result.report;
  rep.token = scene.token;
  rep.modality = cfg.modality;
  StageRunner stage(rep);
  const bool radar_on = cfg.modality == Modality::kCameraRadar;
  const int workers = cfg.sequential ? 1 : cfg.workers;
  const auto& bev = cfg.bev;
  const std::size_t plane = static_cast<std::size_t>(bev.nx) * bev.ny;
  const std::size_t cc = cfg.depthnet.context_channels;

  stage("validate", [&] {
    cfg.validate();
    check_scene(scene, cfg);
    if (cfg.pillars.rows != bev.ny || cfg.pillars.cols != bev.nx || cfg.pillars.x_min != bev.x_min ||
        cfg.pillars.y_min != bev.y_min || cfg.pillars.x_max != bev.x_max || cfg.pillars.y_max != bev.y_max) {
      throw ValidationError("pillar grid and BEV grid must coincide");
    }
  });
  rep.checksums["backbone"] = hex_checksum(tensors_checksum(scene.features));

  const auto targets = stage("depth_gt", [&] { return depth_targets(scene, cfg); });
  rep.checksums["depth_gt"] = hex_checksum(maps_checksum(targets.combined));
  {
    std::size_t missing = 0, fill = 0;
    for (std::size_t k = 0; k < targets.lidar.size(); ++k) {
      for (std::size_t px = 0; px < targets.lidar[k].values.size(); ++px) {
        if (in_bin_range(targets.lidar[k].values[px], cfg.depth_bins)) continue;
        ++missing;
        fill += in_bin_range(targets.radar[k].values[px], cfg.depth_bins);
      }
    }
    rep.radar_fill = missing ? static_cast<double>(fill) / static_cast<double>(missing) : 0.0;
  }

  Tensor f_radar({cc, static_cast<std::size_t>(bev.ny), static_cast<std::size_t>(bev.nx)});
  if (radar_on) {
    f_radar = stage("pillars", [&] {
      const auto& cloud = scene.current_radar();
      rep.radar_points = cloud.points.size();
      const auto pt = pillars::build_pillars(cloud, cfg.pillars, mix_seed(cfg.param_seed, kPillarSample),
                                             &rep.pillar_build);
      rep.radar_pillars = pt.size();
      const auto w = pillars::VfeWeights::random(cfg.radar.vfe_channels, mix_seed(cfg.param_seed, kVfe));
      const auto feats = pillars::vfe_forward(pt, w);
      const Tensor pseudo = pillars::scatter_to_pseudo_image(feats, pt.coords, cfg.pillars);
      rep.checksums["radar_pseudo_image"] = hex_checksum(tensor_checksum(pseudo));
      const Tensor k = random_kernel(cc, cfg.radar.vfe_channels,
                                     1.0 / std::sqrt(static_cast<double>(cfg.radar.vfe_channels)),
                                     mix_seed(cfg.param_seed, kRadarProj));
      return nn::conv_pointwise(pseudo, k, std::vector<double>(cc, 0.0));
    });
    rep.checksums["radar_bev"] = hex_checksum(tensor_checksum(f_radar));
  }

  const auto params = stage("depthnet_params", [&] { return kan::DepthNetParams::random(cfg.depthnet, cfg.param_seed); });
  const auto net = stage("depthnet", [&] { return kan::depthnet_forward(scene.features, scene.rigs, params, !cfg.sequential); });
  {
    std::vector<Tensor> logits;
    for (const auto& c : net.cameras) logits.push_back(c.depth_logits);
    rep.checksums["depthnet_logits"] = hex_checksum(tensors_checksum(logits));
  }

  const auto probs = stage("depth_distribution", [&] {
    std::vector<Tensor> out;
    for (std::size_t k = 0; k < net.cameras.size(); ++k) {
      Tensor logits = net.cameras[k].depth_logits;
      if (radar_on) {
        add_radar_depth_prior(logits, targets.radar[k], cfg.depth_bins, cfg.radar.prior_gain,
                              cfg.radar.prior_sigma_bins);
      }
      out.push_back(nn::softmax_over_depth(logits));
    }
    return out;
  });
  rep.checksums["depth_prob"] = hex_checksum(tensors_checksum(probs));
  rep.depth_loss = stage("depth_loss", [&] { return pooled_depth_loss(probs, targets.combined, cfg.depth_bins); });

  // Lift, refine, unproject and pool camera by camera; the last pooled
  // channel carries the depth probability mass.
  Tensor pooled({cc + 1, static_cast<std::size_t>(bev.ny), static_cast<std::size_t>(bev.nx)});
  stage("lift_and_pool", [&] {
    std::uint64_t lift_hash = 0;
    for (std::size_t k = 0; k < net.cameras.size(); ++k) {
      const Tensor lifted = nn::depth_refine(nn::lift_outer_product(net.cameras[k].context, probs[k]),
                                             cfg.refine_kernel);
      lift_hash = combine(lift_hash, tensor_checksum(lifted));
      const std::size_t h = lifted.extent(2), w = lifted.extent(3), nd = lifted.extent(1);
      const std::size_t fplane = h * w;
      const auto frustum = make_frustum(scene.rigs[k].image_size, static_cast<int>(h), static_cast<int>(w),
                                        cfg.depth_bins);
      voxelpool::FeaturedPoints fp;
      fp.channels = cc + 1;
      fp.positions = unproject_frustum(scene.rigs[k], frustum);
      fp.features.resize(fp.positions.size() * fp.channels);
      const auto src = lifted.data();
      const auto pr = probs[k].data();
      for (std::size_t i = 0; i < fp.positions.size(); ++i) {  // i = l * H * W + pixel
        double* row = fp.features.data() + i * fp.channels;
        for (std::size_t ch = 0; ch < cc; ++ch) row[ch] = src[ch * nd * fplane + i];
        row[cc] = pr[i];
      }
      const auto res = voxelpool::pool(cfg.pooling, fp, bev, workers);
      rep.pool_dropped += res.dropped;
      auto dst = pooled.data();
      const auto add = res.grid.data.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += add[j];
    }
    rep.checksums["lift"] = hex_checksum(lift_hash);
  });
  rep.checksums["bev_pooled"] = hex_checksum(tensor_checksum(pooled));

  const auto fused = stage("fusion", [&] {
    Tensor f_bev({cc, static_cast<std::size_t>(bev.ny), static_cast<std::size_t>(bev.nx)});
    std::copy_n(pooled.data().begin(), cc * plane, f_bev.data().begin());
    Tensor mass({1, static_cast<std::size_t>(bev.ny), static_cast<std::size_t>(bev.nx)});
    std::copy_n(pooled.data().begin() + static_cast<std::ptrdiff_t>(cc * plane), plane, mass.data().begin());
    const Tensor f_depth =
        nn::conv_pointwise(mass, random_kernel(cc, 1, 1.0, mix_seed(cfg.param_seed, kDepthProj)),
                           std::vector<double>(cc, 0.0));
    return fusion::fuse_bev_features(f_bev, f_radar, f_depth);
  });
  rep.checksums["fused"] = hex_checksum(tensor_checksum(fused));

  const auto& classes = metrics::detection_classes();
  const std::size_t n_cls = classes.size();
  const auto heatmap = stage("head", [&] {
    const Tensor k = random_kernel(n_cls, cc, cfg.head.kernel_scale / std::sqrt(static_cast<double>(cc)),
                                   mix_seed(cfg.param_seed, kHead));
    Tensor hm = nn::conv_pointwise(fused, k, std::vector<double>(n_cls, cfg.head.bias));
    for (double& v : hm.data()) v = nn::sigmoid(v);
    return hm;
  });
  rep.checksums["heatmap"] = hex_checksum(tensor_checksum(heatmap));

  std::vector<fusion::RadarMatch> matches;
  if (radar_on) {
    matches = stage("radar_match", [&] {
      const auto boxes = radar_boxes(scene, cfg, workers);
      rep.radar_boxes = boxes.size();
      return fusion::match_radar_to_heatmap(boxes, heatmap, bev, cfg.fusion.score_thresh, cfg.fusion.iou_thresh);
    });
  }
  rep.radar_matches = matches.size();

  auto& preds = result.predictions[scene.token];
  stage("decode", [&] {
    const Tensor q = fusion::radar_query_map(matches, bev);
    std::vector<bool> queried(plane, false);
    for (const auto& m : matches) queried[m.cell] = true;
    for (const auto& p : extract_peaks(heatmap, cfg.head.score_thresh, cfg.head.max_detections)) {
      const auto& info = classes[static_cast<std::size_t>(p.class_id)];
      const int row = static_cast<int>(p.cell / static_cast<std::size_t>(bev.nx));
      const int col = static_cast<int>(p.cell % static_cast<std::size_t>(bev.nx));
      auto [x, y] = bev.cell_center(col, row);
      DetectionBox b;
      b.class_id = p.class_id;
      b.score = p.score;
      b.size = info.typical_size;
      if (queried[p.cell]) {
        x = q(0, row, col);
        y = q(1, row, col);
        if (info.traits.velocity) b.velocity = {q(2, row, col), q(3, row, col)};
      }
      b.center = Vec3(x, y, info.typical_size.z() / 2);
      b.attribute_id = attribute_for(info, p.class_id, std::hypot(b.velocity[0], b.velocity[1]));
      preds.push_back(b);
    }
  });
  rep.detections = preds.size();

  std::vector<metrics::EvalBox> eval_preds, eval_gts;
  for (const auto& b : preds) eval_preds.push_back({b, 0});
  for (const auto& b : scene.objects) eval_gts.push_back({b, 0});

  rep.detection_loss = stage("detection_loss", [&] {
    Tensor target(heatmap.shape());
    for (const auto& g : scene.objects) {
      const long cell = bev.cell_of(g.center.x(), g.center.y());
      if (cell >= 0) target[static_cast<std::size_t>(g.class_id) * plane + static_cast<std::size_t>(cell)] = 1.0;
    }
    std::vector<std::pair<DetectionBox, DetectionBox>> pairs;
    for (std::size_t c = 0; c < n_cls; ++c) {
      std::vector<metrics::EvalBox> pc, gc;
      for (const auto& e : eval_preds) {
        if (e.box.class_id == static_cast<int>(c)) pc.push_back(e);
      }
      for (const auto& e : eval_gts) {
        if (e.box.class_id == static_cast<int>(c)) gc.push_back(e);
      }
      const auto m = metrics::match_center_distance(pc, gc, metrics::kTpThreshold);
      for (auto [pi, gi] : m.pairs()) pairs.emplace_back(pc[pi].box, gc[gi].box);
    }
    return fusion::detection_loss(heatmap, target, pairs);
  });

  rep.summary = stage("evaluate", [&] { return metrics::evaluate(eval_preds, eval_gts, workers); });
  return result;
}

std::string report_to_json(const RunReport& r) {
  json root;
  root["token"] = r.token;
  root["modality"] = to_string(r.modality);
  root["checksums"] = r.checksums;
  root["radar"] = {{"points", r.radar_points},
                   {"pillars", r.radar_pillars},
                   {"out_of_range", r.pillar_build.out_of_range},
                   {"truncated_pillars", r.pillar_build.truncated_pillars},
                   {"sampled_pillars", r.pillar_build.sampled_pillars},
                   {"boxes", r.radar_boxes},
                   {"matches", r.radar_matches},
                   {"lidar_missing_fill", r.radar_fill}};
  root["pool_dropped"] = r.pool_dropped;
  root["losses"] = {{"depth_bce", r.depth_loss.value},
                    {"depth_supervised_pixels", r.depth_loss.supervised_pixels},
                    {"detection_total", r.detection_loss.total},
                    {"detection_heatmap", r.detection_loss.heatmap},
                    {"detection_bbox", r.detection_loss.bbox},
                    {"no_matched_boxes", r.detection_loss.no_matched_boxes}};
  root["detections"] = r.detections;
  root["summary"] = json::parse(io::summary_to_json(r.summary));
  json timings = json::object();
  for (const auto& [name, s] : r.timings) timings[name] = s;
  root["timings"] = timings;
  return root.dump(2) + "\n";
}

}  // namespace kanbev
