#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kanbev/config.hpp"
#include "kanbev/fusion.hpp"
#include "kanbev/io.hpp"
#include "kanbev/metrics.hpp"
#include "kanbev/pillars.hpp"
#include "kanbev/scene.hpp"

// End-to-end pass: pillars -> depthnet -> lift -> voxel pooling -> fusion ->
// peak-decoding head -> evaluation.
namespace kanbev {

struct RunReport {
  std::string token;
  Modality modality = Modality::kCameraRadar;
  std::map<std::string, std::string> checksums;  // stage -> 16 hex digits

  std::size_t radar_points = 0;
  pillars::BuildReport pillar_build;
  std::size_t radar_pillars = 0;
  std::size_t radar_boxes = 0;
  std::size_t radar_matches = 0;
  std::size_t pool_dropped = 0;
  double radar_fill = 0.0;  // share of lidar-missing pixels carrying a radar depth

  fusion::DepthLoss depth_loss;
  fusion::DetectionLoss detection_loss;
  std::size_t detections = 0;
  metrics::EvalSummary summary;
  std::vector<std::pair<std::string, double>> timings;
};

struct RunResult {
  RunReport report;
  io::BoxesByToken predictions;
};

RunResult run_pipeline(const Scene& scene, const PipelineConfig& cfg);

std::string report_to_json(const RunReport& report);

// Per-camera depth targets at feature resolution.
struct DepthTargets {
  std::vector<DepthMap> lidar;
  std::vector<DepthMap> radar;
  std::vector<DepthMap> combined;  // per-pixel nearest of both sensors
};

DepthTargets depth_targets(const Scene& scene, const PipelineConfig& cfg);

// Adds gain * exp(-(l - b)^2 / (2 sigma^2)) to bin l of every pixel with a
// radar depth, b being the fractional bin of that depth.
void add_radar_depth_prior(Tensor& logits, const DepthMap& radar, const nn::DepthBinSpec& bins, double gain,
                           double sigma_bins);

// Depth BCE of both modalities against the same combined target.
struct DepthComparison {
  std::size_t lidar_missing = 0;  // pixels without an in-range lidar depth
  std::size_t radar_fill = 0;     // of those, pixels with an in-range radar depth
  double coverage = 0.0;
  fusion::DepthLoss camera;
  fusion::DepthLoss camera_radar;
};

DepthComparison compare_depth_supervision(const Scene& scene, const PipelineConfig& cfg);

// Local maxima over each class plane (3x3 neighbourhood) scoring at least
// `score_thresh`, in descending score order, truncated to `max_peaks`.
struct Peak {
  int class_id = 0;
  std::size_t cell = 0;
  double score = 0.0;
};
std::vector<Peak> extract_peaks(const Tensor& heatmap, double score_thresh, std::size_t max_peaks);

std::string hex_checksum(std::uint64_t v);

}  // namespace kanbev
