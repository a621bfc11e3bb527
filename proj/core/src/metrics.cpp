#include "kanbev/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "kanbev/error.hpp"

namespace kanbev::metrics {

std::size_t MatchResult::matched() const {
  return static_cast<std::size_t>(std::count_if(matched_gt.begin(), matched_gt.end(), [](long g) { return g >= 0; }));
}

std::vector<std::pair<std::size_t, std::size_t>> MatchResult::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (matched_gt[r] >= 0) out.emplace_back(order[r], static_cast<std::size_t>(matched_gt[r]));
  }
  return out;
}

MatchResult match_center_distance(std::span<const EvalBox> preds, std::span<const EvalBox> gts, double threshold) {
  MatchResult out;
  out.num_gt = gts.size();
  out.gt_matched.assign(gts.size(), false);
  out.order.resize(preds.size());
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].box.score > preds[b].box.score; });

  std::map<int, std::vector<std::size_t>> by_sample;
  for (std::size_t g = 0; g < gts.size(); ++g) by_sample[gts[g].sample].push_back(g);

  out.matched_gt.assign(preds.size(), -1);
  for (std::size_t r = 0; r < out.order.size(); ++r) {
    const auto& p = preds[out.order[r]];
    auto it = by_sample.find(p.sample);
    if (it == by_sample.end()) continue;
    long best = -1;
    double best_dist = threshold;
    for (std::size_t g : it->second) {  // ascending gt index
      if (out.gt_matched[g]) continue;
      const double dist = std::hypot(p.box.center.x() - gts[g].box.center.x(), p.box.center.y() - gts[g].box.center.y());
      if (dist <= threshold && (best < 0 || dist < best_dist)) {
        best = static_cast<long>(g);
        best_dist = dist;
      }
    }
    if (best >= 0) {
      out.matched_gt[r] = best;
      out.gt_matched[static_cast<std::size_t>(best)] = true;
    }
  }
  return out;
}

std::optional<double> average_precision(const MatchResult& match) {
  if (match.num_gt == 0 || match.matched() == 0) return std::nullopt;
  const std::size_t n = match.order.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t r = 0; r < n; ++r) {
    tp += match.matched_gt[r] >= 0;
    precision[r] = static_cast<double>(tp) / static_cast<double>(r + 1);
    recall[r] = static_cast<double>(tp) / static_cast<double>(match.num_gt);
  }
  // Running max from the tail gives the interpolated precision envelope.
  for (std::size_t r = n; r-- > 1;) precision[r - 1] = std::max(precision[r - 1], precision[r]);

  double area = 0.0;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < kRecallSamples; ++k) {
    const double level = static_cast<double>(k) / static_cast<double>(kRecallSamples - 1);
    while (cursor < n && recall[cursor] < level) ++cursor;
    if (cursor < n) area += precision[cursor];
  }
  return area / static_cast<double>(kRecallSamples);
}

std::optional<double> class_mean_ap(const std::array<std::optional<double>, 4>& ap) {
  if (std::none_of(ap.begin(), ap.end(), [](const auto& v) { return v.has_value(); })) return std::nullopt;
  double sum = 0.0;
  for (const auto& v : ap) sum += v.value_or(0.0);
  return sum / static_cast<double>(ap.size());
}

double yaw_difference(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  if (d > std::numbers::pi) d = 2.0 * std::numbers::pi - d;
  return d;
}

double scale_error(const Vec3& a, const Vec3& b) {
  const Vec3 m = a.cwiseMin(b);
  const double inter = m.prod();
  const double uni = a.prod() + b.prod() - inter;
  return 1.0 - inter / uni;
}

TpErrors tp_errors(std::span<const std::pair<DetectionBox, DetectionBox>> matched, const ClassTraits& traits) {
  TpErrors out;
  if (matched.empty()) return out;
  double trans = 0, scale = 0, orient = 0, vel = 0, attr = 0;
  for (const auto& [p, g] : matched) {
    trans += std::hypot(p.center.x() - g.center.x(), p.center.y() - g.center.y());
    scale += scale_error(p.size, g.size);
    orient += yaw_difference(p.yaw, g.yaw);
    vel += std::hypot(p.velocity[0] - g.velocity[0], p.velocity[1] - g.velocity[1]);
    attr += (p.attribute_id == g.attribute_id) ? 0.0 : 1.0;
  }
  const double n = static_cast<double>(matched.size());
  out[kTranslation] = trans / n;
  out[kScale] = scale / n;
  if (traits.orientation) out[kOrientation] = orient / n;
  if (traits.velocity) out[kVelocity] = vel / n;
  if (traits.attribute) out[kAttribute] = attr / n;
  return out;
}

double compose_nds(double mean_ap, const std::array<double, 5>& mean_tp) {
  double tp_score = 0.0;
  for (double v : mean_tp) tp_score += 1.0 - std::min(1.0, v);
  return (5.0 * mean_ap + tp_score) / 10.0;
}

EvalSummary aggregate_summary(std::span<const ClassEval> per_class) {
  EvalSummary s;
  s.classes.assign(per_class.begin(), per_class.end());
  double ap_sum = 0.0;
  std::size_t ap_n = 0;
  std::array<double, 5> tp_sum{};
  std::array<std::size_t, 5> tp_n{};
  for (const auto& c : per_class) {
    if (c.mean_ap) {
      ap_sum += *c.mean_ap;
      ++ap_n;
    }
    for (std::size_t k = 0; k < 5; ++k) {
      if (c.tp[k]) {
        tp_sum[k] += *c.tp[k];
        ++tp_n[k];
      }
    }
  }
  s.mean_ap = ap_n ? ap_sum / static_cast<double>(ap_n) : 0.0;
  for (std::size_t k = 0; k < 5; ++k) s.mean_tp[k] = tp_n[k] ? tp_sum[k] / static_cast<double>(tp_n[k]) : 1.0;
  s.nds = compose_nds(s.mean_ap, s.mean_tp);
  return s;
}

const std::vector<ClassInfo>& detection_classes() {
  static const std::vector<ClassInfo> classes = [] {
    const std::vector<std::string> vehicle{"vehicle.moving", "vehicle.parked", "vehicle.stopped"};
    const std::vector<std::string> cycle{"cycle.with_rider", "cycle.without_rider"};
    const std::vector<std::string> person{"pedestrian.moving", "pedestrian.standing", "pedestrian.sitting_lying_down"};
    return std::vector<ClassInfo>{
        {"car", {}, vehicle, Vec3(1.95, 4.6, 1.7)},
        {"truck", {}, vehicle, Vec3(2.5, 6.9, 2.8)},
        {"bus", {}, vehicle, Vec3(2.9, 11.0, 3.5)},
        {"trailer", {}, vehicle, Vec3(2.9, 12.3, 3.9)},
        {"construction_vehicle", {}, vehicle, Vec3(2.8, 6.4, 3.2)},
        {"pedestrian", {}, person, Vec3(0.7, 0.7, 1.8)},
        {"motorcycle", {}, cycle, Vec3(0.8, 2.1, 1.5)},
        {"bicycle", {}, cycle, Vec3(0.6, 1.7, 1.3)},
        {"traffic_cone", {false, false, false}, {}, Vec3(0.4, 0.4, 1.1)},
        {"barrier", {true, false, false}, {}, Vec3(2.5, 0.5, 1.0)},
    };
  }();
  return classes;
}

int class_index(const std::string& name) {
  const auto& cls = detection_classes();
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (cls[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int attribute_index(const ClassInfo& info, const std::string& name) {
  for (std::size_t i = 0; i < info.attributes.size(); ++i) {
    if (info.attributes[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

ClassEval evaluate_class(std::span<const EvalBox> preds, std::span<const EvalBox> gts, const ClassInfo& info) {
  ClassEval ce;
  ce.name = info.name;
  for (std::size_t t = 0; t < kDistanceThresholds.size(); ++t) {
    ce.ap[t] = average_precision(match_center_distance(preds, gts, kDistanceThresholds[t]));
  }
  ce.mean_ap = class_mean_ap(ce.ap);
  const auto match = match_center_distance(preds, gts, kTpThreshold);
  std::vector<std::pair<DetectionBox, DetectionBox>> pairs;
  for (auto [p, g] : match.pairs()) pairs.emplace_back(preds[p].box, gts[g].box);
  ce.tp = tp_errors(pairs, info.traits);
  return ce;
}

}  // namespace

EvalSummary evaluate(std::span<const EvalBox> preds, std::span<const EvalBox> gts, int workers) {
  const auto start = std::chrono::steady_clock::now();
  const auto& classes = detection_classes();
  std::vector<std::vector<EvalBox>> p_by(classes.size()), g_by(classes.size());
  for (const auto& p : preds) {
    if (p.box.class_id < 0 || static_cast<std::size_t>(p.box.class_id) >= classes.size()) {
      throw ValidationError("evaluate: prediction with unknown class id " + std::to_string(p.box.class_id));
    }
    p_by[static_cast<std::size_t>(p.box.class_id)].push_back(p);
  }
  for (const auto& g : gts) {
    if (g.box.class_id < 0 || static_cast<std::size_t>(g.box.class_id) >= classes.size()) {
      throw ValidationError("evaluate: ground truth with unknown class id " + std::to_string(g.box.class_id));
    }
    g_by[static_cast<std::size_t>(g.box.class_id)].push_back(g);
  }

  std::vector<ClassEval> per_class(classes.size());
  auto run = [&](std::size_t c) { per_class[c] = evaluate_class(p_by[c], g_by[c], classes[c]); };
  if (workers > 1) {
    std::vector<std::jthread> pool;
    const std::size_t w = static_cast<std::size_t>(workers);
    for (std::size_t k = 0; k < w; ++k) {
      pool.emplace_back([&, k] {
        for (std::size_t c = k; c < classes.size(); c += w) run(c);
      });
    }
  } else {
    for (std::size_t c = 0; c < classes.size(); ++c) run(c);
  }
  auto summary = aggregate_summary(per_class);
  summary.eval_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

std::string render_summary_table(const EvalSummary& s, const std::string& label) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "Method";
  for (const char* n : kTpNames) os << std::setw(9) << n;
  os << std::setw(9) << "mAP" << std::setw(9) << "NDS" << "Eval Time\n";
  os << std::setw(12) << label << std::fixed << std::setprecision(4);
  for (double v : s.mean_tp) os << std::setw(9) << v;
  os << std::setw(9) << s.mean_ap << std::setw(9) << s.nds << std::setprecision(2) << s.eval_seconds << " s\n";
  return os.str();
}

}  // namespace kanbev::metrics
