#pragma once

#include <cstdint>
#include <string>

#include "kanbev/kan.hpp"
#include "kanbev/nnprims.hpp"
#include "kanbev/pillars.hpp"
#include "kanbev/voxelpool.hpp"

namespace kanbev {

enum class Modality { kCamera, kCameraRadar };

Modality parse_modality(const std::string& name);
std::string to_string(Modality m);

struct GeometrySection {
  int feature_stride = 16;
};

struct RadarSection {
  std::size_t vfe_channels = 64;
  // Depth prior added to the camera logits at pixels hit by a radar return.
  double prior_gain = 4.0;
  double prior_sigma_bins = 1.5;
  // Radar returns also supervise depth alongside lidar.
  bool supervise_depth = true;
  // Radar boxes pair with a previous-frame centroid within this radius.
  double velocity_match_radius = 2.0;
};

struct FusionSection {
  double score_thresh = 0.25;
  double iou_thresh = 0.1;
};

struct HeadSection {
  double score_thresh = 0.25;
  std::size_t max_detections = 200;
  double bias = -2.19;
  double kernel_scale = 0.05;
};

// Stage-keyed configuration; each member maps to one JSON section of the
// same name.
struct PipelineConfig {
  GeometrySection geometry;
  kan::DepthNetConfig depthnet;
  nn::DepthBinSpec depth_bins;
  nn::Kernel3x3 refine_kernel{0.0, 0.0, 0.0, 0.25, 0.5, 0.25, 0.0, 0.0, 0.0};
  pillars::PillarGridConfig pillars;
  RadarSection radar;
  voxelpool::BevGridConfig bev;
  voxelpool::PoolImpl pooling = voxelpool::PoolImpl::kCumsum;
  int workers = 1;
  FusionSection fusion;
  HeadSection head;
  Modality modality = Modality::kCameraRadar;
  bool sequential = false;
  std::uint64_t param_seed = 7;

  void validate() const;
};

PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& cfg);

}  // namespace kanbev
