#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kanbev/fusion.hpp"
#include "kanbev/geometry.hpp"
#include "kanbev/metrics.hpp"
#include "kanbev/pillars.hpp"

namespace kanbev::io {

// PC4D: "PC4D", u32 point count, 8 reserved zero bytes, then count x 4
// little-endian f32 (x, y, z, r).
void write_pc4d(std::ostream& out, const pillars::RadarPointCloud& cloud);
pillars::RadarPointCloud read_pc4d(std::istream& in);
void save_pc4d(const std::string& path, const pillars::RadarPointCloud& cloud);
pillars::RadarPointCloud load_pc4d(const std::string& path);

// CSV with an "x,y,z,r" header row.
pillars::RadarPointCloud read_csv_cloud(std::istream& in);
pillars::RadarPointCloud load_point_cloud(const std::string& path);  // by extension

// Detection boxes keyed by sample token, in the nuScenes-like layout:
// {"results": {token: [{translation, size, yaw, velocity, detection_name,
// detection_score, attribute_name}, ...]}}. Ground truth omits the score.
using BoxesByToken = std::map<std::string, std::vector<DetectionBox>>;

std::string boxes_to_json(const BoxesByToken& boxes, bool with_scores);
BoxesByToken boxes_from_json(const std::string& text, bool require_scores);
void save_boxes(const std::string& path, const BoxesByToken& boxes, bool with_scores);
BoxesByToken load_boxes(const std::string& path, bool require_scores);

// Flattens token-keyed boxes into evaluation input; predictions naming a
// token absent from `gts` raise ValidationError.
void to_eval_boxes(const BoxesByToken& preds, const BoxesByToken& gts, std::vector<metrics::EvalBox>& pred_out,
                   std::vector<metrics::EvalBox>& gt_out);

std::string summary_to_json(const metrics::EvalSummary& s, int indent = 2);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace kanbev::io
