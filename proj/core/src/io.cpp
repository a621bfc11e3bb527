#include "kanbev/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string_view>
#include <sstream>

#include "json.hpp"
#include "kanbev/binary_io.hpp"
#include "kanbev/error.hpp"

namespace kanbev::io {

using nlohmann::json;

namespace {

constexpr char kPc4dMagic[4] = {'P', 'C', '4', 'D'};

double require_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError(where + ": missing numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

template <std::size_t N>
std::array<double, N> require_array(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != N) {
    throw ValidationError(where + ": field '" + key + "' must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j.at(key)[i].is_number()) throw ValidationError(where + ": non-numeric entry in '" + key + "'");
    out[i] = j.at(key)[i].get<double>();
  }
  return out;
}

json box_to_json(const DetectionBox& b, bool with_score) {
  const auto& info = metrics::detection_classes().at(static_cast<std::size_t>(b.class_id));
  json j;
  j["translation"] = {b.center.x(), b.center.y(), b.center.z()};
  j["size"] = {b.size.x(), b.size.y(), b.size.z()};
  j["yaw"] = b.yaw;
  j["velocity"] = {b.velocity[0], b.velocity[1]};
  j["detection_name"] = info.name;
  if (with_score) j["detection_score"] = b.score;
  j["attribute_name"] = b.attribute_id >= 0 ? info.attributes.at(static_cast<std::size_t>(b.attribute_id)) : "";
  return j;
}

DetectionBox box_from_json(const json& j, bool require_score, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": box entry is not an object");
  DetectionBox b;
  const auto t = require_array<3>(j, "translation", where);
  const auto s = require_array<3>(j, "size", where);
  const auto v = require_array<2>(j, "velocity", where);
  b.center = Vec3(t[0], t[1], t[2]);
  b.size = Vec3(s[0], s[1], s[2]);
  b.velocity = {v[0], v[1]};
  b.yaw = require_number(j, "yaw", where);
  if (!j.contains("detection_name") || !j.at("detection_name").is_string()) {
    throw ValidationError(where + ": missing detection_name");
  }
  const std::string name = j.at("detection_name").get<std::string>();
  b.class_id = metrics::class_index(name);
  if (b.class_id < 0) throw ValidationError(where + ": unknown detection_name '" + name + "'");
  if (require_score) {
    b.score = require_number(j, "detection_score", where);
  } else if (j.contains("detection_score")) {
    b.score = require_number(j, "detection_score", where);
  }
  const std::string attr = j.value("attribute_name", std::string{});
  if (!attr.empty()) {
    const auto& info = metrics::detection_classes()[static_cast<std::size_t>(b.class_id)];
    b.attribute_id = metrics::attribute_index(info, attr);
    if (b.attribute_id < 0) throw ValidationError(where + ": attribute '" + attr + "' not valid for " + name);
  }
  b.validate();
  return b;
}

}  // namespace

void write_pc4d(std::ostream& out, const pillars::RadarPointCloud& cloud) {
  out.write(kPc4dMagic, 4);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cloud.points.size()));
  binio::put_le<std::uint64_t>(out, 0);
  for (const auto& p : cloud.points) {
    for (double v : p) binio::put_f32(out, static_cast<float>(v));
  }
  if (!out) throw IoError("write_pc4d: stream write failed");
}

pillars::RadarPointCloud read_pc4d(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw IoError("read_pc4d: truncated header");
  if (std::string_view(magic, 4) != std::string_view(kPc4dMagic, 4)) throw IoError("read_pc4d: bad magic");
  const auto count = binio::get_le<std::uint32_t>(in);
  binio::get_le<std::uint64_t>(in);
  pillars::RadarPointCloud cloud;
  cloud.points.resize(count);
  for (auto& p : cloud.points) {
    for (double& v : p) v = binio::get_f32(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("read_pc4d: trailing bytes after declared points");
  return cloud;
}

void save_pc4d(const std::string& path, const pillars::RadarPointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_pc4d(out, cloud);
}

pillars::RadarPointCloud load_pc4d(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_pc4d(in);
}

pillars::RadarPointCloud read_csv_cloud(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv cloud: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,z,r") throw IoError("csv cloud: expected header 'x,y,z,r', got '" + line + "'");
  pillars::RadarPointCloud cloud;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    pillars::RadarPoint p{};
    char sep = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      if (!(row >> p[k])) throw IoError("csv cloud: malformed value on line " + std::to_string(lineno));
      if (k < 3 && (!(row >> sep) || sep != ',')) {
        throw IoError("csv cloud: expected ',' on line " + std::to_string(lineno));
      }
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

pillars::RadarPointCloud load_point_cloud(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".csv") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_csv_cloud(in);
  }
  return load_pc4d(path);
}

std::string boxes_to_json(const BoxesByToken& boxes, bool with_scores) {
  json results = json::object();
  for (const auto& [token, list] : boxes) {
    json arr = json::array();
    for (const auto& b : list) arr.push_back(box_to_json(b, with_scores));
    results[token] = std::move(arr);
  }
  json root;
  root["results"] = std::move(results);
  return root.dump(1) + "\n";
}

BoxesByToken boxes_from_json(const std::string& text, bool require_scores) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("boxes json: ") + e.what());
  }
  if (!root.is_object() || !root.contains("results") || !root.at("results").is_object()) {
    throw ValidationError("boxes json: expected an object with a 'results' map");
  }
  BoxesByToken out;
  for (const auto& [token, arr] : root.at("results").items()) {
    if (!arr.is_array()) throw ValidationError("boxes json: results['" + token + "'] is not a list");
    auto& list = out[token];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      list.push_back(box_from_json(arr[i], require_scores, "boxes json '" + token + "'[" + std::to_string(i) + "]"));
    }
  }
  return out;
}

void save_boxes(const std::string& path, const BoxesByToken& boxes, bool with_scores) {
  write_text(path, boxes_to_json(boxes, with_scores));
}

BoxesByToken load_boxes(const std::string& path, bool require_scores) {
  return boxes_from_json(read_text(path), require_scores);
}

void to_eval_boxes(const BoxesByToken& preds, const BoxesByToken& gts, std::vector<metrics::EvalBox>& pred_out,
                   std::vector<metrics::EvalBox>& gt_out) {
  std::map<std::string, int> sample;
  for (const auto& [token, list] : gts) {
    const int id = static_cast<int>(sample.size());
    sample[token] = id;
    for (const auto& b : list) gt_out.push_back({b, id});
  }
  for (const auto& [token, list] : preds) {
    auto it = sample.find(token);
    if (it == sample.end()) throw ValidationError("predictions name sample '" + token + "' absent from ground truth");
    for (const auto& b : list) pred_out.push_back({b, it->second});
  }
}

std::string summary_to_json(const metrics::EvalSummary& s, int indent) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json classes = json::array();
  for (const auto& c : s.classes) {
    json jc;
    jc["name"] = c.name;
    json ap = json::object();
    for (std::size_t t = 0; t < c.ap.size(); ++t) {
      std::ostringstream key;
      key << metrics::kDistanceThresholds[t];
      ap[key.str()] = opt(c.ap[t]);
    }
    jc["ap"] = ap;
    jc["mean_ap"] = opt(c.mean_ap);
    json tp = json::object();
    for (std::size_t k = 0; k < 5; ++k) tp[metrics::kTpNames[k]] = opt(c.tp[k]);
    jc["tp"] = tp;
    classes.push_back(jc);
  }
  json root;
  root["classes"] = classes;
  root["mAP"] = s.mean_ap;
  json mtp = json::object();
  for (std::size_t k = 0; k < 5; ++k) mtp[metrics::kTpNames[k]] = s.mean_tp[k];
  root["mTP"] = mtp;
  root["NDS"] = s.nds;
  root["eval_seconds"] = s.eval_seconds;
  return root.dump(indent) + "\n";
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace kanbev::io
