#pragma once

// Monte Carlo construction of the harmonic function h(theta, .):
//
//   h_n(omega) = E^omega_o[ exp{<theta,X_{H_n}> - lambda H_n} ; H_n is a regeneration time ]
//   g_n(omega) = same, additionally on {beta = infinity}
//   hbar_n     = (1/(n-1)) sum_{i=2..n} h_i
//
// with H_n the first time the e_1-level reaches n. "H_n is a regeneration
// time" is checked as: after H_n the walk never drops below level n during
// the observed future (at least `confirm_horizon` further steps). The strict
// record half of the regeneration condition holds automatically at H_n.

#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "rwre/core.hpp"
#include "rwre/engine/estimator.hpp"
#include "rwre/engine/rng.hpp"
#include "rwre/environment.hpp"

namespace rwre {

struct HarmonicParams {
  int n_max = 16;
  std::size_t walks = 200;
  std::size_t confirm_horizon = 50;
  std::size_t step_cap = 0;  // 0 = 400 * n_max + confirm_horizon
  std::uint64_t master_seed = 0;
  bool independent_levels = false;  // fresh `walks` walks for every level

  [[nodiscard]] std::size_t effective_cap() const noexcept {
    return step_cap ? step_cap : 400 * static_cast<std::size_t>(n_max) + confirm_horizon;
  }
};

namespace detail {

/// Runs one base walk from `site` up to level n_max (+ confirm horizon) and
/// reports, for each level i in [1, n_max], the h- and g-contributions.
class LevelWalker {
 public:
  struct Contribution {
    double h = 0.0;
    double g = 0.0;
  };

  /// Returns false when the step cap was hit before level n_max.
  bool run(const EnvironmentRealization& env, const Site& site, const Vec& theta, double lambda, int n_max,
           std::size_t horizon, std::size_t cap, Rng& rng) {
    levels_.clear();
    hit_time_.assign(static_cast<std::size_t>(n_max) + 1, 0);
    hit_tilt_.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    hit_min_.assign(static_cast<std::size_t>(n_max) + 1, 0);
    out_.assign(static_cast<std::size_t>(n_max) + 1, Contribution{});

    Site x = site;
    std::int64_t level = 0, running_min = 0;
    double tilt = 0.0;
    std::size_t t = 0;
    levels_.push_back(0);
    int reached = 0;
    bool exhausted = false;
    while (reached < n_max) {
      if (t >= cap) {
        exhausted = true;
        break;
      }
      const int z = env.site_kernel(x).sample(rng.uniform());
      x = moved(x, z);
      tilt += dot_step(theta, z);
      level += (z == 0) ? 1 : (z == 1 ? -1 : 0);
      running_min = std::min(running_min, level);
      ++t;
      levels_.push_back(level);
      if (level > reached) {
        reached = static_cast<int>(level);
        const auto i = static_cast<std::size_t>(reached);
        hit_time_[i] = t;
        hit_tilt_[i] = tilt;
        hit_min_[i] = running_min;
      }
    }
    const std::size_t post_end = std::min(cap + horizon, t + horizon);
    while (t < post_end) {
      const int z = env.site_kernel(x).sample(rng.uniform());
      x = moved(x, z);
      level += (z == 0) ? 1 : (z == 1 ? -1 : 0);
      ++t;
      levels_.push_back(level);
    }

    // Suffix minima of the level sequence.
    suffix_.resize(levels_.size() + 1);
    suffix_.back() = std::numeric_limits<std::int64_t>::max();
    for (std::size_t k = levels_.size(); k-- > 0;) suffix_[k] = std::min(levels_[k], suffix_[k + 1]);

    for (int i = 1; i <= reached; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const std::size_t h = hit_time_[ii];
      if (suffix_[h + 1] < i) continue;
      const double w = std::exp(hit_tilt_[ii] - lambda * static_cast<double>(h));
      out_[ii].h = w;
      if (hit_min_[ii] >= 0) out_[ii].g = w;
    }
    return !exhausted;
  }

  [[nodiscard]] const Contribution& at(int level) const { return out_[static_cast<std::size_t>(level)]; }

 private:
  std::vector<std::int64_t> levels_;
  std::vector<std::int64_t> suffix_;
  std::vector<std::size_t> hit_time_;
  std::vector<double> hit_tilt_;
  std::vector<std::int64_t> hit_min_;
  std::vector<Contribution> out_;
};

}  // namespace detail

struct LevelEstimate {
  double h = 0.0;
  double h_se = 0.0;
  double g = 0.0;
  double g_se = 0.0;
  std::size_t exhausted = 0;  // walks that hit the step cap (counted as 0)
};

/// h_n and g_n from the same inner walks, so g <= h holds pathwise.
[[nodiscard]] inline LevelEstimate estimate_hg_n(const EnvironmentRealization& env, const Site& site,
                                                 const Vec& theta, double lambda, int n, std::size_t walks,
                                                 std::size_t confirm_horizon, Rng& rng, std::size_t step_cap = 0) {
  if (n < 1) throw InsufficientSamples("level n must be >= 1");
  if (walks < 1) throw InsufficientSamples("need at least one walk");
  const std::size_t cap = step_cap ? step_cap : 400 * static_cast<std::size_t>(n) + confirm_horizon;
  detail::LevelWalker walker;
  EstimatorSummary hs, gs;
  LevelEstimate out;
  for (std::size_t w = 0; w < walks; ++w) {
    if (!walker.run(env, site, theta, lambda, n, confirm_horizon, cap, rng)) ++out.exhausted;
    hs.add(walker.at(n).h);
    gs.add(walker.at(n).g);
  }
  out.h = hs.mean();
  out.h_se = hs.std_error();
  out.g = gs.mean();
  out.g_se = gs.std_error();
  return out;
}

[[nodiscard]] inline MeanWithError estimate_h_n(const EnvironmentRealization& env, const Site& site,
                                                const Vec& theta, double lambda, int n, std::size_t walks,
                                                std::size_t confirm_horizon, Rng& rng) {
  const auto e = estimate_hg_n(env, site, theta, lambda, n, walks, confirm_horizon, rng);
  return {e.h, e.h_se};
}

[[nodiscard]] inline MeanWithError estimate_g_n(const EnvironmentRealization& env, const Site& site,
                                                const Vec& theta, double lambda, int n, std::size_t walks,
                                                std::size_t confirm_horizon, Rng& rng) {
  const auto e = estimate_hg_n(env, site, theta, lambda, n, walks, confirm_horizon, rng);
  return {e.g, e.g_se};
}

struct HarmonicEntry {
  Site site{};
  double h = 0.0;
  double h_se = 0.0;
  double g = 0.0;
  double g_se = 0.0;
  int n_max = 0;
  std::size_t walks = 0;
  std::size_t exhausted = 0;

  [[nodiscard]] bool positive() const noexcept { return h > 0.0; }
};

/// Cesaro average (1/(n_max-1)) sum_{i=2..n_max} h_i. By default each inner
/// walk contributes to every level; with `independent_levels` every level i
/// gets its own `walks` walks, run only to level i.
[[nodiscard]] inline HarmonicEntry cesaro_h(const EnvironmentRealization& env, const Site& site, const Vec& theta,
                                            double lambda, int n_max, std::size_t walks,
                                            std::size_t confirm_horizon, Rng& rng, std::size_t step_cap = 0,
                                            bool independent_levels = false) {
  if (n_max < 2) throw InsufficientSamples("n_max must be >= 2");
  if (walks < 1) throw InsufficientSamples("need at least one walk");
  HarmonicEntry e;
  e.site = site;
  e.n_max = n_max;
  e.walks = walks;
  const double norm = 1.0 / static_cast<double>(n_max - 1);
  if (independent_levels) {
    // Levels are independent, so the variances add.
    double var = 0.0, var_g = 0.0;
    for (int i = 2; i <= n_max; ++i) {
      const auto l = estimate_hg_n(env, site, theta, lambda, i, walks, confirm_horizon, rng, step_cap);
      e.h += norm * l.h;
      e.g += norm * l.g;
      var += norm * norm * l.h_se * l.h_se;
      var_g += norm * norm * l.g_se * l.g_se;
      e.exhausted += l.exhausted;
    }
    e.h_se = std::sqrt(var);
    e.g_se = std::sqrt(var_g);
    return e;
  }
  const std::size_t cap = step_cap ? step_cap : 400 * static_cast<std::size_t>(n_max) + confirm_horizon;
  detail::LevelWalker walker;
  EstimatorSummary hs, gs;
  for (std::size_t w = 0; w < walks; ++w) {
    if (!walker.run(env, site, theta, lambda, n_max, confirm_horizon, cap, rng)) ++e.exhausted;
    double ch = 0.0, cg = 0.0;
    for (int i = 2; i <= n_max; ++i) {
      ch += walker.at(i).h;
      cg += walker.at(i).g;
    }
    hs.add(ch * norm);
    gs.add(cg * norm);
  }
  e.h = hs.mean();
  e.h_se = hs.std_error();
  e.g = gs.mean();
  e.g_se = gs.std_error();
  return e;
}

struct HarmonicResidual {
  double residual = 0.0;    // h(x) - sum_z pi_x(z) e^{<theta,z>-lambda} h(x+z)
  double normalized = 0.0;  // residual / h(x)
  double se = 0.0;          // propagated from the independent site estimates
};

/// `neighbor_h[z]` is h at site + z for each step index z.
[[nodiscard]] inline HarmonicResidual harmonic_residual(const EnvironmentRealization& env, const Site& site,
                                                        const HarmonicEntry& at_site,
                                                        std::span<const HarmonicEntry> neighbor_h, const Vec& theta,
                                                        double lambda) {
  const int steps = 2 * env.dimension();
  if (static_cast<int>(neighbor_h.size()) != steps) throw MissingNeighbor("need h at all 2d neighbors");
  for (int z = 0; z < steps; ++z)
    if (neighbor_h[static_cast<std::size_t>(z)].site != moved(site, z))
      throw MissingNeighbor("neighbor estimate for step " + Step::from_index(z).name() + " is for another site");
  const auto& p = env.site_kernel(site);
  double s = 0.0, var = at_site.h_se * at_site.h_se;
  for (int z = 0; z < steps; ++z) {
    const double c = p[z] * std::exp(dot_step(theta, z) - lambda);
    s += c * neighbor_h[static_cast<std::size_t>(z)].h;
    var += c * c * neighbor_h[static_cast<std::size_t>(z)].h_se * neighbor_h[static_cast<std::size_t>(z)].h_se;
  }
  HarmonicResidual r;
  r.residual = at_site.h - s;
  r.normalized = r.residual / at_site.h;
  r.se = std::sqrt(var);
  return r;
}

// ---------------------------------------------------------------------------

/// Lazily estimated h over a fixed realization, cached per site. Each site
/// uses its own substream keyed by its absolute coordinates, so results do
/// not depend on query order and agree with queries through shifted views.
class HarmonicField {
 public:
  HarmonicField(EnvironmentRealization env, Vec theta, double lambda, HarmonicParams params,
                std::size_t site_budget = 0)
      : env_(std::move(env)), theta_(std::move(theta)), lambda_(lambda), params_(params), budget_(site_budget) {}

  [[nodiscard]] const EnvironmentRealization& env() const noexcept { return env_; }
  [[nodiscard]] const Vec& theta() const noexcept { return theta_; }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] const HarmonicParams& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t sites_estimated() const {
    std::scoped_lock lock(mu_);
    return cache_.size();
  }
  [[nodiscard]] std::size_t undersampled() const {
    std::scoped_lock lock(mu_);
    return undersampled_;
  }

  /// Stream used for the estimate at `site` (absolute coordinates).
  [[nodiscard]] Rng site_stream(const Site& site) const {
    const Site abs = add(site, env_.offset());
    std::uint64_t key = hash_combine(params_.master_seed, env_.seed());
    for (int i = 0; i < env_.dimension(); ++i)
      key = hash_combine(key, static_cast<std::uint64_t>(abs[static_cast<std::size_t>(i)]));
    return Rng(key);
  }

  /// Estimate at `site`, computed on first use. Throws BudgetExhausted once
  /// the number of distinct estimated sites would exceed the budget. A zero
  /// estimate is returned flagged (positive() == false) and is not cached.
  HarmonicEntry at(const Site& site) {
    {
      std::scoped_lock lock(mu_);
      if (auto it = cache_.find(site); it != cache_.end()) return it->second;
      if (budget_ && cache_.size() >= budget_)
        throw BudgetExhausted("harmonic site budget of " + std::to_string(budget_) + " exhausted");
    }
    Rng r = site_stream(site);
    HarmonicEntry e = cesaro_h(env_, site, theta_, lambda_, params_.n_max, params_.walks, params_.confirm_horizon, r,
                               params_.step_cap, params_.independent_levels);
    if (!e.positive()) {
      std::scoped_lock lock(mu_);
      ++undersampled_;
      return e;
    }
    std::scoped_lock lock(mu_);
    return cache_.insert_or_assign(site, e).first->second;
  }

  [[nodiscard]] HarmonicResidual residual_at(const Site& site) {
    const HarmonicEntry here = at(site);
    std::vector<HarmonicEntry> nb;
    for (int z = 0; z < 2 * env_.dimension(); ++z) nb.push_back(at(moved(site, z)));
    return harmonic_residual(env_, site, here, nb, theta_, lambda_);
  }

  /// Snapshot of all cached entries.
  [[nodiscard]] std::vector<HarmonicEntry> entries() const {
    std::scoped_lock lock(mu_);
    std::vector<HarmonicEntry> out;
    out.reserve(cache_.size());
    for (const auto& [s, e] : cache_) out.push_back(e);
    return out;
  }

 private:
  EnvironmentRealization env_;
  Vec theta_;
  double lambda_;
  HarmonicParams params_;
  std::size_t budget_;
  mutable std::mutex mu_;
  std::unordered_map<Site, HarmonicEntry, SiteHash> cache_;
  std::size_t undersampled_ = 0;
};

/// CSV: site coords, h, stderr, g, n_max, walks.
inline void write_harmonic_csv(std::ostream& os, std::span<const HarmonicEntry> entries, int dim) {
  for (int i = 1; i <= dim; ++i) os << "x_" << i << ',';
  os << "h,stderr,g,n_max,walks\n";
  for (const auto& e : entries) {
    for (int i = 0; i < dim; ++i) os << e.site[static_cast<std::size_t>(i)] << ',';
    os << e.h << ',' << e.h_se << ',' << e.g << ',' << e.n_max << ',' << e.walks << '\n';
  }
}

}  // namespace rwre
