#pragma once

// Regeneration times, backtracking times and i.i.d. regeneration blocks.
//
// A time j >= 1 is a regeneration time in direction u when
//   <X_i,u> < <X_j,u> <= <X_k,u>   for all i < j < k.
// On a finite path the "for all k" half can only be checked up to the end of
// the path, so times within `confirm_horizon` steps of the end are left
// unconfirmed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "rwre/core.hpp"
#include "rwre/engine/estimator.hpp"
#include "rwre/engine/parallel.hpp"
#include "rwre/engine/rng.hpp"
#include "rwre/environment.hpp"
#include "rwre/walk.hpp"

namespace rwre {

struct RegenerationRecord {
  Vec direction;
  std::vector<std::size_t> confirmed_times;
  std::size_t confirm_horizon = 0;
};

struct RegenBlock {
  Site displacement{};
  std::int64_t duration = 0;
  std::vector<std::uint8_t> steps;

  friend bool operator==(const RegenBlock&, const RegenBlock&) = default;
};

/// First i with <X_i,u> < <X_0,u>, or nullopt if the path never backtracks.
[[nodiscard]] inline std::optional<std::size_t> backtrack_time(const PathRecord& path, const Vec& u) {
  const auto lv = path.levels(u);
  for (std::size_t i = 0; i < lv.size(); ++i)
    if (lv[i] < lv[0]) return i;
  return std::nullopt;
}

/// Streaming detector: prefix maxima and suffix minima of the level sequence.
[[nodiscard]] inline RegenerationRecord detect_regenerations(const PathRecord& path, const Vec& u,
                                                             std::size_t confirm_horizon) {
  if (confirm_horizon < 1) throw InsufficientSamples("confirm_horizon must be >= 1");
  RegenerationRecord rec{u, {}, confirm_horizon};
  const auto lv = path.levels(u);
  const std::size_t n = path.length();
  if (n < confirm_horizon + 1) return rec;

  std::vector<double> suffix_min(n + 2, std::numeric_limits<double>::infinity());
  for (std::size_t k = n + 1; k-- > 1;) suffix_min[k] = std::min(lv[k], suffix_min[k + 1]);

  double prefix_max = lv[0];
  const std::size_t last = n - confirm_horizon;
  for (std::size_t j = 1; j <= last; ++j) {
    if (lv[j] > prefix_max && lv[j] <= suffix_min[j + 1]) rec.confirmed_times.push_back(j);
    prefix_max = std::max(prefix_max, lv[j]);
  }
  return rec;
}

/// Blocks between consecutive confirmed regeneration times. The segment
/// before the first regeneration has a different law and is dropped.
[[nodiscard]] inline std::vector<RegenBlock> extract_blocks(const PathRecord& path,
                                                            const RegenerationRecord& record) {
  const auto& t = record.confirmed_times;
  if (t.size() < 2) throw TooFewRegenerations("need at least two confirmed regeneration times");
  std::vector<RegenBlock> out;
  out.reserve(t.size() - 1);
  const auto& steps = path.steps();
  for (std::size_t m = 0; m + 1 < t.size(); ++m) {
    RegenBlock b;
    b.duration = static_cast<std::int64_t>(t[m + 1] - t[m]);
    b.steps.assign(steps.begin() + static_cast<std::ptrdiff_t>(t[m]),
                   steps.begin() + static_cast<std::ptrdiff_t>(t[m + 1]));
    for (auto z : b.steps) b.displacement = moved(b.displacement, z);
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Block sampling

struct SimConfig {
  Vec direction;                       // empty = e_1
  std::size_t confirm_horizon = 0;     // 0 = 10 * ceil(1/delta) * d
  std::size_t trajectory_length = 0;   // 0 = sized from the horizon
  std::size_t trajectories_per_task = 8;
  bool allow_nestling = false;
};

[[nodiscard]] inline std::size_t default_confirm_horizon(const EnvironmentModel& m) {
  return 10 * static_cast<std::size_t>(std::ceil(1.0 / m.delta)) * static_cast<std::size_t>(m.dimension);
}

struct BlockDiagnostics {
  std::size_t trajectories = 0;
  std::size_t total_steps = 0;
  std::size_t blocks = 0;
  std::size_t discarded_steps = 0;  // before tau_1 plus the unconfirmed tail
  std::int64_t max_duration = 0;
  double mean_duration = 0.0;
  std::size_t confirm_horizon = 0;
  std::size_t trajectory_length = 0;

  [[nodiscard]] double discarded_fraction() const noexcept {
    return total_steps == 0 ? 0.0 : static_cast<double>(discarded_steps) / static_cast<double>(total_steps);
  }
};

struct BlockSampleResult {
  std::vector<RegenBlock> blocks;
  BlockDiagnostics diagnostics;
};

/// Samples `count` blocks from long trajectories, one fresh environment per
/// trajectory. Trajectories are grouped into tasks with their own substreams
/// and merged in task order, so the result does not depend on thread count.
template <class Kernel>
[[nodiscard]] BlockSampleResult sample_blocks(const EnvironmentModel& model, const Kernel& kernel,
                                              std::size_t count, SimConfig cfg, Rng& rng) {
  if (count < 1) throw InsufficientSamples("block count must be >= 1");
  if (!cfg.allow_nestling && classify_nestling(model).is_nestling())
    throw NestlingWithoutOverride(
        "nestling model: regeneration times lack exponential moments; set the override to proceed");
  if (cfg.direction.empty()) cfg.direction = unit_vector(model.dimension, 0);
  if (cfg.confirm_horizon == 0) cfg.confirm_horizon = default_confirm_horizon(model);
  if (cfg.trajectory_length == 0) cfg.trajectory_length = std::max<std::size_t>(20 * cfg.confirm_horizon, 4000);

  auto shared = std::make_shared<const EnvironmentModel>(model);
  const std::uint64_t master = rng();

  struct TaskOut {
    std::vector<RegenBlock> blocks;
    BlockDiagnostics diag;
  };
  auto task = [&](std::size_t id) {
    TaskOut out;
    Rng r = substream(master, id);
    for (std::size_t t = 0; t < cfg.trajectories_per_task; ++t) {
      EnvironmentRealization env(shared, r());
      const PathRecord path = simulate_path(env, kernel, cfg.trajectory_length, r);
      const auto rec = detect_regenerations(path, cfg.direction, cfg.confirm_horizon);
      ++out.diag.trajectories;
      out.diag.total_steps += path.length();
      if (rec.confirmed_times.size() < 2) {
        out.diag.discarded_steps += path.length();
        continue;
      }
      auto blocks = extract_blocks(path, rec);
      out.diag.discarded_steps +=
          rec.confirmed_times.front() + (path.length() - rec.confirmed_times.back());
      for (auto& b : blocks) out.blocks.push_back(std::move(b));
    }
    return out;
  };

  BlockSampleResult result;
  result.diagnostics.confirm_horizon = cfg.confirm_horizon;
  result.diagnostics.trajectory_length = cfg.trajectory_length;
  std::size_t next_task = 0;
  std::size_t rounds_without_progress = 0;
  while (result.blocks.size() < count) {
    const std::size_t have = result.blocks.size();
    // Size the next round from the yield so far; ids stay sequential so the
    // outcome is schedule independent.
    std::size_t tasks = 4;
    if (have > 0 && next_task > 0) {
      const double per_task = static_cast<double>(have) / static_cast<double>(next_task);
      tasks = static_cast<std::size_t>(std::ceil(static_cast<double>(count - have) / per_task)) + 1;
    }
    const std::size_t first = next_task;
    next_task += tasks;
    result = run_parallel<BlockSampleResult>(
        tasks, [&](std::size_t i) { return task(first + i); },
        [](BlockSampleResult acc, TaskOut t) {
          for (auto& b : t.blocks) acc.blocks.push_back(std::move(b));
          acc.diagnostics.trajectories += t.diag.trajectories;
          acc.diagnostics.total_steps += t.diag.total_steps;
          acc.diagnostics.discarded_steps += t.diag.discarded_steps;
          return acc;
        },
        std::move(result));
    rounds_without_progress = result.blocks.size() == have ? rounds_without_progress + 1 : 0;
    if (rounds_without_progress >= 8)
      throw TooFewRegenerations("trajectories yield no confirmed regenerations; increase trajectory_length");
  }
  result.blocks.resize(count);

  auto& d = result.diagnostics;
  d.blocks = result.blocks.size();
  double total_t = 0.0;
  for (const auto& b : result.blocks) {
    d.max_duration = std::max(d.max_duration, b.duration);
    total_t += static_cast<double>(b.duration);
  }
  d.mean_duration = total_t / static_cast<double>(d.blocks);
  return result;
}

[[nodiscard]] inline BlockSampleResult sample_blocks(const EnvironmentModel& model, std::size_t count,
                                                     SimConfig cfg, Rng& rng) {
  return sample_blocks(model, base_kernel(), count, std::move(cfg), rng);
}

// ---------------------------------------------------------------------------
// Tail diagnostics

struct TailReport {
  double decay_rate = 0.0;        // fitted -d/dt log P(T > t); +inf for a point mass
  double head_rate = 0.0;         // same fit on the first half of the support
  double tail_rate = 0.0;         // ... and on the second half
  bool subexponential = false;    // tail_rate < 0.5 * head_rate
  std::size_t samples = 0;
  std::int64_t max_duration = 0;
};

namespace detail {

inline double fit_decay(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return -(n * sxy - sx * sy) / den;
}

}  // namespace detail

/// Least-squares fit of log P(T > t) over t where at least `min_count`
/// samples survive; the subexponential flag compares the tail half of the
/// support against the head half.
[[nodiscard]] inline TailReport tau_tail_diagnostic(std::span<const RegenBlock> blocks,
                                                    std::size_t min_count = 10) {
  if (blocks.size() < 1000) throw InsufficientSamples("tail diagnostic needs >= 1000 blocks");
  TailReport rep;
  rep.samples = blocks.size();
  std::vector<std::int64_t> t;
  t.reserve(blocks.size());
  for (const auto& b : blocks) t.push_back(b.duration);
  std::sort(t.begin(), t.end());
  rep.max_duration = t.back();
  if (t.front() == t.back()) {
    rep.decay_rate = rep.head_rate = rep.tail_rate = std::numeric_limits<double>::infinity();
    return rep;
  }

  std::vector<std::pair<double, double>> pts;
  const double n = static_cast<double>(t.size());
  for (std::int64_t s = t.front(); s <= t.back(); ++s) {
    const auto survivors =
        static_cast<std::size_t>(t.end() - std::upper_bound(t.begin(), t.end(), s));
    if (survivors < min_count) break;
    pts.emplace_back(static_cast<double>(s), std::log(static_cast<double>(survivors) / n));
  }
  rep.decay_rate = detail::fit_decay(pts);
  const std::size_t half = pts.size() / 2;
  if (half >= 2) {
    rep.head_rate = detail::fit_decay({pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(half)});
    rep.tail_rate = detail::fit_decay({pts.begin() + static_cast<std::ptrdiff_t>(half), pts.end()});
    rep.subexponential = rep.tail_rate < 0.5 * rep.head_rate;
  } else {
    rep.head_rate = rep.tail_rate = rep.decay_rate;
  }
  return rep;
}

/// CSV with columns T, S_1..S_d.
inline void write_blocks_csv(std::ostream& os, std::span<const RegenBlock> blocks, int dim) {
  os << "T";
  for (int i = 1; i <= dim; ++i) os << ",S_" << i;
  os << '\n';
  for (const auto& b : blocks) {
    os << b.duration;
    for (int i = 0; i < dim; ++i) os << ',' << b.displacement[static_cast<std::size_t>(i)];
    os << '\n';
  }
}

}  // namespace rwre
