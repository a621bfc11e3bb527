#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kanbev/metrics.hpp"

// Published per-class and aggregate detection numbers for the camera+radar
// KAN model ("ours") and the BEVDepth baseline, and the arithmetic that
// recomputes every derivable aggregate cell from its row inputs.
namespace kanbev::tables {

// Half a unit in the last reported digit of a 3-decimal cell.
inline constexpr double kTableTolerance = 5e-4;

struct ReportedMethod {
  std::string name;
  // Per class, in detection_classes() order.
  std::array<std::array<std::optional<double>, 4>, 10> ap;  // 0.5 / 1 / 2 / 4 m
  std::array<double, 10> class_mean_ap;
  std::array<metrics::TpErrors, 10> tp;
  // Aggregate row: mATE, mASE, mAOE, mAVE, mAAE, then mAP and NDS.
  std::array<double, 5> mean_tp;
  double mean_ap;
  double nds;
};

const ReportedMethod& reported_ours();
const ReportedMethod& reported_bevdepth();

struct CellCheck {
  std::string name;
  double reported = 0.0;
  double recomputed = 0.0;
  bool ok = false;
};

struct TableCheckReport {
  std::vector<CellCheck> cells;
  double seconds = 0.0;

  std::size_t failures() const;
  bool all_ok() const { return failures() == 0; }
};

TableCheckReport check_tables();
std::string render_report(const TableCheckReport& report);

}  // namespace kanbev::tables
