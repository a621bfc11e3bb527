#include "kanbev/tables.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace kanbev::tables {

namespace {

constexpr std::optional<double> kNaN = std::nullopt;

using Ap = std::array<std::optional<double>, 4>;
using Tp = metrics::TpErrors;

}  // namespace

const ReportedMethod& reported_ours() {
  static const ReportedMethod m{
      "KAN-RCBEVDepth",
      {Ap{0.320, 0.622, 0.761, 0.809}, Ap{0.059, 0.239, 0.462, 0.575}, Ap{0.098, 0.373, 0.659, 0.730},
       Ap{kNaN, 0.063, 0.316, 0.444}, Ap{kNaN, 0.036, 0.197, 0.289}, Ap{0.167, 0.309, 0.402, 0.462},
       Ap{0.148, 0.411, 0.518, 0.549}, Ap{0.170, 0.370, 0.449, 0.477}, Ap{0.314, 0.469, 0.554, 0.621},
       Ap{0.239, 0.544, 0.646, 0.693}},
      {0.628, 0.334, 0.465, 0.206, 0.131, 0.335, 0.406, 0.366, 0.490, 0.531},
      {Tp{0.393, 0.169, 0.176, 0.438, 0.215}, Tp{0.630, 0.220, 0.193, 0.371, 0.215},
       Tp{0.602, 0.202, 0.133, 0.652, 0.221}, Tp{0.903, 0.242, 0.588, 0.275, 0.158},
       Tp{0.955, 0.507, 1.262, 0.122, 0.407}, Tp{0.652, 0.293, 0.901, 0.586, 0.263},
       Tp{0.522, 0.253, 0.865, 0.718, 0.212}, Tp{0.447, 0.267, 0.944, 0.234, 0.011},
       Tp{0.475, 0.348, kNaN, kNaN, kNaN}, Tp{0.465, 0.280, 0.184, kNaN, kNaN}},
      {0.6044, 0.2780, 0.5830, 0.4244, 0.2129},
      0.3891,
      0.4845};
  return m;
}

const ReportedMethod& reported_bevdepth() {
  static const ReportedMethod m{
      "BEVDepth",
      {Ap{0.152, 0.405, 0.641, 0.734}, Ap{0.015, 0.129, 0.352, 0.509}, Ap{0.024, 0.224, 0.509, 0.684},
       Ap{kNaN, 0.033, 0.198, 0.386}, Ap{kNaN, 0.005, 0.106, 0.187}, Ap{0.113, 0.236, 0.331, 0.394},
       Ap{0.069, 0.281, 0.422, 0.509}, Ap{0.106, 0.278, 0.400, 0.437}, Ap{0.252, 0.413, 0.507, 0.580},
       Ap{0.201, 0.504, 0.628, 0.687}},
      {0.483, 0.252, 0.360, 0.154, 0.074, 0.268, 0.320, 0.305, 0.438, 0.505},
      {Tp{0.553, 0.171, 0.247, 0.631, 0.233}, Tp{0.751, 0.227, 0.291, 0.580, 0.227},
       Tp{0.734, 0.226, 0.218, 1.224, 0.263}, Tp{0.967, 0.234, 0.621, 0.545, 0.166},
       Tp{0.999, 0.509, 1.251, 0.123, 0.361}, Tp{0.762, 0.302, 1.015, 0.599, 0.305},
       Tp{0.640, 0.273, 0.866, 0.747, 0.197}, Tp{0.558, 0.272, 0.934, 0.286, 0.007},
       Tp{0.535, 0.353, kNaN, kNaN, kNaN}, Tp{0.514, 0.288, 0.237, kNaN, kNaN}},
      {0.7014, 0.2855, 0.6310, 0.5919, 0.2199},
      0.3160,
      0.4150};
  return m;
}

std::size_t TableCheckReport::failures() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += !c.ok;
  return n;
}

namespace {

void add(std::vector<CellCheck>& out, std::string name, double reported, double recomputed) {
  // 1e-12 absorbs binary representation of exact half-unit differences.
  const bool ok = std::abs(reported - recomputed) <= kTableTolerance + 1e-12;
  out.push_back({std::move(name), reported, recomputed, ok});
}

void check_method(const ReportedMethod& m, std::vector<CellCheck>& out) {
  const auto& classes = metrics::detection_classes();

  // Per-class mean over the four thresholds, NaN counted as 0.
  for (std::size_t c = 0; c < classes.size(); ++c) {
    add(out, m.name + " / " + classes[c].name + " / mAP", m.class_mean_ap[c], *metrics::class_mean_ap(m.ap[c]));
  }

  // Global mAP from the reported per-class cells, TP means from the error rows.
  std::vector<metrics::ClassEval> rows(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    rows[c].name = classes[c].name;
    rows[c].ap = m.ap[c];
    rows[c].mean_ap = m.class_mean_ap[c];
    rows[c].tp = m.tp[c];
  }
  const auto summary = metrics::aggregate_summary(rows);
  add(out, m.name + " / mAP", m.mean_ap, summary.mean_ap);
  for (std::size_t k = 0; k < 5; ++k) {
    add(out, m.name + " / " + metrics::kTpNames[k], m.mean_tp[k], summary.mean_tp[k]);
  }

  // NDS from the aggregate row's own inputs.
  add(out, m.name + " / NDS", m.nds, metrics::compose_nds(m.mean_ap, m.mean_tp));
}

}  // namespace

TableCheckReport check_tables() {
  const auto start = std::chrono::steady_clock::now();
  TableCheckReport report;
  check_method(reported_ours(), report.cells);
  check_method(reported_bevdepth(), report.cells);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string render_report(const TableCheckReport& report) {
  std::ostringstream os;
  os << std::fixed;
  for (const auto& c : report.cells) {
    os << (c.ok ? "PASS  " : "FAIL  ") << std::left << std::setw(48) << c.name << std::setprecision(4)
       << " reported " << c.reported << "  recomputed " << std::setprecision(5) << c.recomputed
       << "  |diff| " << std::setprecision(5) << std::abs(c.reported - c.recomputed) << '\n';
  }
  os << report.cells.size() - report.failures() << "/" << report.cells.size() << " cells within "
     << kTableTolerance << '\n';
  return os.str();
}

}  // namespace kanbev::tables
