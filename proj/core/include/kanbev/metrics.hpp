#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kanbev/fusion.hpp"

// nuScenes-style detection evaluation: center-distance matching, AP over four
// distance thresholds, true-positive errors and the ND score.
namespace kanbev::metrics {

inline constexpr std::array<double, 4> kDistanceThresholds{0.5, 1.0, 2.0, 4.0};
inline constexpr double kTpThreshold = 2.0;
inline constexpr std::size_t kRecallSamples = 101;

// A box tagged with the sample (frame) it belongs to; matching never crosses
// samples.
struct EvalBox {
  DetectionBox box;
  int sample = 0;
};

struct MatchResult {
  std::size_t num_gt = 0;
  std::vector<std::size_t> order;    // prediction indices, descending score
  std::vector<long> matched_gt;      // per rank: gt index or -1
  std::vector<bool> gt_matched;      // per gt

  std::size_t matched() const;
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;  // (pred, gt)
};

// Greedy: predictions in descending score order (input order on ties) each
// take the nearest unmatched gt of the same sample within `threshold` meters
// of BEV center distance, lower gt index on ties.
MatchResult match_center_distance(std::span<const EvalBox> preds, std::span<const EvalBox> gts, double threshold);

// 101-point interpolated area under the precision/recall curve. Absent when
// there are no ground truths or no true positives.
std::optional<double> average_precision(const MatchResult& match);

// Mean over all four thresholds with absent entries counted as 0; absent when
// all four are absent.
std::optional<double> class_mean_ap(const std::array<std::optional<double>, 4>& ap);

enum TpMetric : std::size_t { kTranslation = 0, kScale, kOrientation, kVelocity, kAttribute };
inline constexpr std::array<const char*, 5> kTpNames{"mATE", "mASE", "mAOE", "mAVE", "mAAE"};

struct ClassTraits {
  bool orientation = true;
  bool velocity = true;
  bool attribute = true;
};

using TpErrors = std::array<std::optional<double>, 5>;

// Yaw difference folded into [0, pi].
double yaw_difference(double a, double b);
// 1 - IoU of two boxes sharing center and orientation.
double scale_error(const Vec3& a, const Vec3& b);

// Pairs are (prediction, ground truth).
TpErrors tp_errors(std::span<const std::pair<DetectionBox, DetectionBox>> matched, const ClassTraits& traits);

struct ClassEval {
  std::string name;
  std::array<std::optional<double>, 4> ap;
  std::optional<double> mean_ap;
  TpErrors tp;
};

struct EvalSummary {
  std::vector<ClassEval> classes;
  double mean_ap = 0.0;
  std::array<double, 5> mean_tp{1.0, 1.0, 1.0, 1.0, 1.0};
  double nds = 0.0;
  double eval_seconds = 0.0;
};

// mAP over classes with a mean AP; each mTP over classes where present. An
// mTP absent from every class is reported as 1 (the worst value NDS counts).
EvalSummary aggregate_summary(std::span<const ClassEval> per_class);

// (5 mAP + sum(1 - min(1, mTP))) / 10
double compose_nds(double mean_ap, const std::array<double, 5>& mean_tp);

struct ClassInfo {
  std::string name;
  ClassTraits traits;
  std::vector<std::string> attributes;
  Vec3 typical_size = Vec3::Ones();
};

// The ten evaluated nuScenes detection classes, in table order.
const std::vector<ClassInfo>& detection_classes();
int class_index(const std::string& name);
int attribute_index(const ClassInfo& info, const std::string& name);

// Full evaluation over all classes; per-class work is independent and runs on
// `workers` threads.
EvalSummary evaluate(std::span<const EvalBox> preds, std::span<const EvalBox> gts, int workers = 1);

// Plain-text table with one header row and one value row.
std::string render_summary_table(const EvalSummary& s, const std::string& label = "ours");

}  // namespace kanbev::metrics
