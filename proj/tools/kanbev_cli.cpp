#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kanbev/config.hpp"
#include "kanbev/error.hpp"
#include "kanbev/io.hpp"
#include "kanbev/metrics.hpp"
#include "kanbev/pipeline.hpp"
#include "kanbev/scene.hpp"
#include "kanbev/tables.hpp"
#include "kanbev/voxelpool.hpp"

namespace {

using namespace kanbev;

struct RunArgs {
  std::string scene_dir;
  std::string out_dir = "run_out";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string pooling;
  std::optional<int> workers;
  std::string modality;
  bool sequential = false;
};

PipelineConfig resolve_config(const RunArgs& a) {
  PipelineConfig cfg = a.config_path.empty() ? PipelineConfig{} : load_config(a.config_path);
  if (a.seed) cfg.param_seed = *a.seed;
  if (!a.pooling.empty()) cfg.pooling = voxelpool::parse_pool_impl(a.pooling);
  if (a.workers) cfg.workers = *a.workers;
  if (!a.modality.empty()) cfg.modality = parse_modality(a.modality);
  if (a.sequential) cfg.sequential = true;
  cfg.validate();
  return cfg;
}

int cmd_gen(const std::string& out, const SceneSpec& spec) {
  const Scene scene = generate_scene(spec);
  write_scene(scene, out);
  std::cout << "wrote " << scene.token << " to " << out << ": " << scene.objects.size() << " objects, "
            << scene.lidar.points.size() << " lidar points, " << scene.current_radar().points.size()
            << " radar points in the current sweep\n";
  return 0;
}

int cmd_run(const RunArgs& a) {
  const PipelineConfig cfg = resolve_config(a);
  const Scene scene = read_scene(a.scene_dir);
  const RunResult res = run_pipeline(scene, cfg);
  std::error_code ec;
  std::filesystem::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
  const auto dir = std::filesystem::path(a.out_dir);
  io::save_boxes((dir / "predictions.json").string(), res.predictions, true);
  io::write_text((dir / "report.json").string(), report_to_json(res.report));
  io::write_text((dir / "config.json").string(), config_to_json(cfg));
  std::cout << "modality " << to_string(cfg.modality) << ", pooling " << voxelpool::to_string(cfg.pooling) << ", "
            << res.report.detections << " detections, " << res.report.radar_matches << " radar matches\n"
            << "depth BCE " << res.report.depth_loss.value << " over " << res.report.depth_loss.supervised_pixels
            << " pixels, detection loss " << res.report.detection_loss.total << "\n"
            << metrics::render_summary_table(res.report.summary);
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& out_path, int workers) {
  const auto preds = io::load_boxes(pred_path, true);
  const auto gts = io::load_boxes(gt_path, false);
  std::vector<metrics::EvalBox> p, g;
  io::to_eval_boxes(preds, gts, p, g);
  const auto summary = metrics::evaluate(p, g, workers);
  std::cout << metrics::render_summary_table(summary);
  if (!out_path.empty()) io::write_text(out_path, io::summary_to_json(summary));
  return 0;
}

int cmd_check_tables() {
  const auto report = tables::check_tables();
  std::cout << tables::render_report(report);
  return report.all_ok() ? 0 : 1;
}

int cmd_bench(std::size_t points, std::size_t channels, int workers, int repeats, std::uint64_t seed) {
  if (points == 0 || channels == 0 || workers < 1 || repeats < 1) {
    throw ValidationError("bench: points, channels, workers and repeats must be positive");
  }
  const voxelpool::BevGridConfig grid;
  const auto fp = voxelpool::random_points(points, channels, grid, seed);
  std::cout << "impl,M,C,nx,ny,workers,seconds\n";
  for (auto impl : {voxelpool::PoolImpl::kReference, voxelpool::PoolImpl::kCumsum, voxelpool::PoolImpl::kConcurrent}) {
    const int w = impl == voxelpool::PoolImpl::kConcurrent ? workers : 1;
    double best = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const auto res = voxelpool::pool(impl, fp, grid, w);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (r == 0 || s < best) best = s;
      if (res.grid.data.empty()) throw ValidationError("bench: empty grid");
    }
    std::cout << voxelpool::to_string(impl) << ',' << points << ',' << channels << ',' << grid.nx << ',' << grid.ny
              << ',' << w << ',' << best << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kanbev: camera-radar BEV depth pipeline on synthetic scenes"};
  app.require_subcommand(1);

  std::string gen_out = "scene";
  SceneSpec spec;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic scene bundle");
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Scene seed")->capture_default_str();
  gen->add_option("--cameras", spec.num_cameras, "Number of cameras (1-6)")->capture_default_str();
  gen->add_option("--objects", spec.num_objects, "Number of objects")->capture_default_str();
  gen->add_option("--frames", spec.num_frames, "Radar sweeps, the last one current")->capture_default_str();
  gen->add_option("--lidar-ground-points", spec.lidar_ground_points, "Expected lidar ground returns")
      ->capture_default_str();
  gen->add_option("--radar-clutter-points", spec.radar_clutter_points, "Expected radar clutter returns")
      ->capture_default_str();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the pipeline on a scene bundle");
  run->add_option("--scene", run_args.scene_dir, "Scene bundle directory")->required();
  run->add_option("--out", run_args.out_dir, "Directory for predictions.json and report.json")->capture_default_str();
  run->add_option("--config", run_args.config_path, "Pipeline config JSON");
  run->add_option("--seed", run_args.seed, "Parameter seed");
  run->add_option("--pooling", run_args.pooling, "reference | cumsum | concurrent");
  run->add_option("--workers", run_args.workers, "Worker threads for concurrent stages");
  run->add_option("--modality", run_args.modality, "camera | camera+radar");
  run->add_flag("--sequential", run_args.sequential, "Single-threaded, fully deterministic execution");

  std::string pred_path, gt_path, eval_out;
  int eval_workers = 1;
  auto* eval = app.add_subcommand("eval", "Evaluate a predictions file against ground truth");
  eval->add_option("--pred", pred_path, "Predictions JSON")->required();
  eval->add_option("--gt", gt_path, "Ground-truth JSON")->required();
  eval->add_option("--out", eval_out, "Write the summary JSON here");
  eval->add_option("--workers", eval_workers, "Per-class worker threads")->capture_default_str();

  auto* check = app.add_subcommand("check-tables", "Recompute the reported table aggregates");

  std::size_t bench_points = 1'000'000, bench_channels = 64;
  int bench_workers = 8, bench_repeats = 3;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench", "Time the pooling implementations (CSV)");
  bench->add_option("--points", bench_points, "Number of points M")->capture_default_str();
  bench->add_option("--channels", bench_channels, "Feature channels C")->capture_default_str();
  bench->add_option("--workers", bench_workers, "Workers for the concurrent implementation")->capture_default_str();
  bench->add_option("--repeats", bench_repeats, "Best-of repeats")->capture_default_str();
  bench->add_option("--seed", bench_seed, "Point seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(gen_out, spec);
    if (*run) return cmd_run(run_args);
    if (*eval) return cmd_eval(pred_path, gt_path, eval_out, eval_workers);
    if (*check) return cmd_check_tables();
    if (*bench) return cmd_bench(bench_points, bench_channels, bench_workers, bench_repeats, bench_seed);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
