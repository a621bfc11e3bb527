#include "kanbev/voxelpool.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "kanbev/error.hpp"
#include "kanbev/rng.hpp"

namespace kanbev::voxelpool {

void BevGridConfig::validate() const {
  if (nx < 1 || ny < 1) throw ValidationError("bev grid: nx and ny must be >= 1");
  if (!(x_max > x_min) || !(y_max > y_min)) throw ValidationError("bev grid: empty x or y range");
}

long BevGridConfig::cell_of(double x, double y) const {
  if (!(x >= x_min && x < x_max && y >= y_min && y < y_max)) return -1;
  const long cx = std::min<long>(nx - 1, static_cast<long>(std::floor((x - x_min) / dx())));
  const long cy = std::min<long>(ny - 1, static_cast<long>(std::floor((y - y_min) / dy())));
  return cy * nx + cx;
}

void FeaturedPoints::validate() const {
  if (channels == 0) throw ValidationError("featured points: channel count must be positive");
  if (features.size() != positions.size() * channels) {
    throw ValidationError("featured points: feature rows do not match position count");
  }
  for (const auto& p : positions) {
    if (!p.allFinite()) throw ValidationError("featured points: non-finite position");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw ValidationError("featured points: non-finite feature");
  }
}

PoolImpl parse_pool_impl(std::string_view name) {
  if (name == "reference") return PoolImpl::kReference;
  if (name == "cumsum") return PoolImpl::kCumsum;
  if (name == "concurrent") return PoolImpl::kConcurrent;
  throw ValidationError("unknown pooling implementation '" + std::string(name) + "'");
}

std::string_view to_string(PoolImpl impl) {
  switch (impl) {
    case PoolImpl::kReference: return "reference";
    case PoolImpl::kCumsum: return "cumsum";
    case PoolImpl::kConcurrent: return "concurrent";
  }
  return "unknown";
}

namespace {

BevGrid empty_grid(const BevGridConfig& cfg, std::size_t channels) {
  return {cfg, Tensor({channels, static_cast<std::size_t>(cfg.ny), static_cast<std::size_t>(cfg.nx)})};
}

void apply_average(BevGrid& grid, const std::vector<std::size_t>& counts) {
  const std::size_t plane = counts.size();
  auto d = grid.data.data();
  const std::size_t channels = grid.data.extent(0);
  for (std::size_t cell = 0; cell < plane; ++cell) {
    if (counts[cell] <= 1) continue;
    const double inv = 1.0 / static_cast<double>(counts[cell]);
    for (std::size_t c = 0; c < channels; ++c) d[c * plane + cell] *= inv;
  }
}

std::vector<long> assign_cells(const FeaturedPoints& points, const BevGridConfig& cfg, std::size_t& dropped) {
  std::vector<long> cells(points.size());
  dropped = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cells[i] = cfg.cell_of(points.positions[i].x(), points.positions[i].y());
    dropped += (cells[i] < 0);
  }
  return cells;
}

}  // namespace

PoolResult pool_reference(const FeaturedPoints& points, const BevGridConfig& cfg, PoolOptions opts) {
  cfg.validate();
  points.validate();
  PoolResult out{empty_grid(cfg, points.channels), 0};
  const std::size_t plane = static_cast<std::size_t>(cfg.nx) * cfg.ny;
  std::vector<std::size_t> counts(plane, 0);
  auto grid = out.grid.data.data();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const long cell = cfg.cell_of(points.positions[i].x(), points.positions[i].y());
    if (cell < 0) {
      ++out.dropped;
      continue;
    }
    const auto row = points.row(i);
    for (std::size_t c = 0; c < points.channels; ++c) grid[c * plane + static_cast<std::size_t>(cell)] += row[c];
    ++counts[static_cast<std::size_t>(cell)];
  }
  if (opts.average) apply_average(out.grid, counts);
  return out;
}

PoolResult pool_cumsum(const FeaturedPoints& points, const BevGridConfig& cfg, PoolOptions opts) {
  cfg.validate();
  points.validate();
  PoolResult out{empty_grid(cfg, points.channels), 0};
  const std::size_t plane = static_cast<std::size_t>(cfg.nx) * cfg.ny;
  const std::vector<long> cells = assign_cells(points, cfg, out.dropped);

  std::vector<std::size_t> order;
  order.reserve(points.size() - out.dropped);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (cells[i] >= 0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cells[a] < cells[b]; });

  const std::size_t ch = points.channels;
  const std::size_t n = order.size();
  // prefix row k holds the inclusive sum of sorted rows 0..k.
  std::vector<double> prefix(n * ch);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = points.row(order[k]);
    double* dst = prefix.data() + k * ch;
    if (k == 0) {
      std::copy(row.begin(), row.end(), dst);
    } else {
      const double* prev = dst - ch;
      for (std::size_t c = 0; c < ch; ++c) dst[c] = prev[c] + row[c];
    }
  }

  std::vector<std::size_t> counts(plane, 0);
  auto grid = out.grid.data.data();
  std::size_t start = 0;
  while (start < n) {
    const long cell = cells[order[start]];
    std::size_t end = start;
    while (end + 1 < n && cells[order[end + 1]] == cell) ++end;
    const double* last = prefix.data() + end * ch;
    const double* before = start ? prefix.data() + (start - 1) * ch : nullptr;
    for (std::size_t c = 0; c < ch; ++c) {
      grid[c * plane + static_cast<std::size_t>(cell)] = before ? last[c] - before[c] : last[c];
    }
    counts[static_cast<std::size_t>(cell)] = end - start + 1;
    start = end + 1;
  }
  if (opts.average) apply_average(out.grid, counts);
  return out;
}

PoolResult pool_concurrent(const FeaturedPoints& points, const BevGridConfig& cfg, int workers, PoolOptions opts) {
  if (workers < 1) throw ValidationError("pool_concurrent: workers must be >= 1");
  cfg.validate();
  points.validate();
  PoolResult out{empty_grid(cfg, points.channels), 0};
  const std::size_t plane = static_cast<std::size_t>(cfg.nx) * cfg.ny;
  const std::vector<long> cells = assign_cells(points, cfg, out.dropped);
  std::vector<std::size_t> counts(plane, 0);
  double* grid = out.grid.data.data().data();
  const std::size_t ch = points.channels;
  const std::size_t n = points.size();

  auto accumulate = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (cells[i] < 0) continue;
      const auto row = points.row(i);
      for (std::size_t c = 0; c < ch; ++c) {
        std::atomic_ref<double>(grid[c * plane + static_cast<std::size_t>(cells[i])]).fetch_add(row[c], std::memory_order_relaxed);
      }
    }
  };

  const auto w = static_cast<std::size_t>(workers);
  if (w == 1) {
    accumulate(0, n);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t k = 0; k < w; ++k) {
      const std::size_t begin = n * k / w;
      const std::size_t end = n * (k + 1) / w;
      pool.emplace_back(accumulate, begin, end);
    }
  }
  if (opts.average) {
    for (long c : cells) {
      if (c >= 0) ++counts[static_cast<std::size_t>(c)];
    }
    apply_average(out.grid, counts);
  }
  return out;
}

PoolResult pool(PoolImpl impl, const FeaturedPoints& points, const BevGridConfig& cfg, int workers, PoolOptions opts) {
  switch (impl) {
    case PoolImpl::kReference: return pool_reference(points, cfg, opts);
    case PoolImpl::kCumsum: return pool_cumsum(points, cfg, opts);
    case PoolImpl::kConcurrent: return pool_concurrent(points, cfg, workers, opts);
  }
  throw ValidationError("pool: unknown implementation");
}

FeaturedPoints random_points(std::size_t count, std::size_t channels, const BevGridConfig& cfg, std::uint64_t seed,
                             double margin) {
  SplitMix64 rng(seed);
  FeaturedPoints fp;
  fp.channels = channels;
  fp.positions.reserve(count);
  fp.features.reserve(count * channels);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = rng.uniform(cfg.x_min - margin, cfg.x_max + margin);
    const double y = rng.uniform(cfg.y_min - margin, cfg.y_max + margin);
    fp.positions.emplace_back(x, y, rng.uniform(-1.0, 3.0));
    for (std::size_t c = 0; c < channels; ++c) fp.features.push_back(rng.normal());
  }
  return fp;
}

PoolResult pool_aligned_frames(std::span<const Frame> frames, const EgoPose& current, const BevGridConfig& cfg,
                               PoolImpl impl, int workers, PoolOptions opts) {
  if (frames.empty()) throw ValidationError("pool_aligned_frames: need at least one frame");
  FeaturedPoints merged;
  merged.channels = frames.front().points.channels;
  for (const auto& f : frames) {
    if (f.points.channels != merged.channels) throw ValidationError("pool_aligned_frames: channel mismatch across frames");
    const auto aligned = transform_ego(f.points.positions, f.pose, current);
    merged.positions.insert(merged.positions.end(), aligned.begin(), aligned.end());
    merged.features.insert(merged.features.end(), f.points.features.begin(), f.points.features.end());
  }
  return pool(impl, merged, cfg, workers, opts);
}

}  // namespace kanbev::voxelpool
