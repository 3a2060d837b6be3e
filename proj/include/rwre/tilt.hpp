#pragma once

// The h-transformed kernel
//
//   pihat(omega, z) = pi(0, z) exp{<theta,z> - lambda} h(T_z omega) / h(omega)
//
// sampled along a burned-in chain, the entropy/velocity certificate of the
// variational minimizer, expectations under the conditioned block measure,
// and the Bayes kernel q(w, z).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rwre/core.hpp"
#include "rwre/engine/estimator.hpp"
#include "rwre/engine/parallel.hpp"
#include "rwre/engine/rng.hpp"
#include "rwre/environment.hpp"
#include "rwre/harmonic.hpp"
#include "rwre/lmgf_rate.hpp"
#include "rwre/measures.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/walk.hpp"

namespace rwre {

/// Site -> h estimate. Must be safe to call concurrently.
using HProvider = std::function<double(const Site&)>;

struct RowSumStats {
  std::size_t rows = 0;
  double sum_abs_dev = 0.0;
  double max_abs_dev = 0.0;
  double sum_log = 0.0;
  std::size_t outside_tol = 0;

  [[nodiscard]] double mean_abs_dev() const noexcept { return rows ? sum_abs_dev / static_cast<double>(rows) : 0.0; }
  [[nodiscard]] double mean_log() const noexcept { return rows ? sum_log / static_cast<double>(rows) : 0.0; }
};

struct TiltedRow {
  TransitionVector p;
  double row_sum = 1.0;  // before renormalization
};

class TiltedKernel {
 public:
  TiltedKernel(EnvironmentRealization env, Vec theta, double lambda, HProvider h, double row_tol = 0.25)
      : env_(std::move(env)), theta_(std::move(theta)), lambda_(lambda), h_(std::move(h)), row_tol_(row_tol) {
    for (int z = 0; z < 2 * env_.dimension(); ++z)
      factor_[static_cast<std::size_t>(z)] = std::exp(dot_step(theta_, z) - lambda_);
  }

  /// Kernel backed by a Monte Carlo harmonic field.
  static TiltedKernel from_field(std::shared_ptr<HarmonicField> field, double row_tol = 0.25) {
    auto provider = [field](const Site& s) { return field->at(s).h; };
    TiltedKernel tk(field->env(), field->theta(), field->lambda(), provider, row_tol);
    tk.field_ = std::move(field);
    return tk;
  }

  [[nodiscard]] const EnvironmentRealization& env() const noexcept { return env_; }
  [[nodiscard]] const Vec& theta() const noexcept { return theta_; }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] double row_tol() const noexcept { return row_tol_; }
  [[nodiscard]] const std::shared_ptr<HarmonicField>& field() const noexcept { return field_; }

  /// Row at `site`, computed once and cached.
  [[nodiscard]] TiltedRow row_at(const Site& site) const {
    {
      std::scoped_lock lock(*mu_);
      if (auto it = rows_->find(site); it != rows_->end()) return it->second;
    }
    const int steps = 2 * env_.dimension();
    const double here = h_(site);
    if (!(here > 0.0)) throw NonpositiveH("h estimate at site is not positive; raise the walk budget");
    const auto& base = env_.site_kernel(site);
    TiltedRow row{TransitionVector(env_.dimension()), 0.0};
    double total = 0.0;
    for (int z = 0; z < steps; ++z) {
      const double hz = h_(moved(site, z));
      if (!(hz > 0.0)) throw NonpositiveH("h estimate at neighbor " + Step::from_index(z).name() + " is not positive");
      total += (row.p[z] = base[z] * factor_[static_cast<std::size_t>(z)] * hz);
    }
    for (int z = 0; z < steps; ++z) row.p[z] /= total;
    row.row_sum = total / here;

    std::scoped_lock lock(*mu_);
    auto [it, inserted] = rows_->emplace(site, row);
    if (inserted) {
      const double dev = std::abs(row.row_sum - 1.0);
      stats_->rows += 1;
      stats_->sum_abs_dev += dev;
      stats_->max_abs_dev = std::max(stats_->max_abs_dev, dev);
      stats_->sum_log += std::log(row.row_sum);
      if (dev > row_tol_) stats_->outside_tol += 1;
    }
    return it->second;
  }

  /// Kernel concept: (env, site) -> TransitionVector. The realization is the
  /// one the kernel was built on; `env` is accepted for interface symmetry.
  [[nodiscard]] TransitionVector operator()(const EnvironmentRealization&, const Site& site) const {
    return row_at(site).p;
  }

  /// Diagnostics over distinct computed rows.
  [[nodiscard]] RowSumStats row_stats() const {
    std::scoped_lock lock(*mu_);
    return *stats_;
  }

 private:
  EnvironmentRealization env_;
  Vec theta_;
  double lambda_;
  HProvider h_;
  double row_tol_;
  std::array<double, kMaxSteps> factor_{};
  std::shared_ptr<HarmonicField> field_;
  std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
  std::shared_ptr<std::unordered_map<Site, TiltedRow, SiteHash>> rows_ =
      std::make_shared<std::unordered_map<Site, TiltedRow, SiteHash>>();
  std::shared_ptr<RowSumStats> stats_ = std::make_shared<RowSumStats>();
};

[[nodiscard]] inline TransitionVector tilted_kernel_at(const TiltedKernel& tk, const Site& site) {
  return tk.row_at(site).p;
}

/// sum_z a_z log(a_z / b_z).
[[nodiscard]] inline double kl_divergence(const TransitionVector& a, const TransitionVector& b) {
  double s = 0.0;
  for (int z = 0; z < a.size(); ++z)
    if (a[z] > 0.0) s += a[z] * std::log(a[z] / b[z]);
  return std::max(0.0, s);
}

// ---------------------------------------------------------------------------
// Tilted chain

/// Statistics of the chain after burn-in. Index k refers to the transition
/// X_k -> X_{k+1} of `path`.
struct TiltedRun {
  PathRecord path;
  std::size_t burn_in = 0;
  EmpiricalMeasure measure;
  std::vector<double> kl;       // KL(pihat(X_k) | pi(X_k))
  std::vector<double> log_row;  // log of the pre-normalization row sum at X_k
  std::vector<std::uint32_t> cells;  // measure cell of (class of X_k, Z_{k+1})
};

[[nodiscard]] inline TiltedRun sample_tilted_path(const TiltedKernel& tk, std::size_t n_steps, std::size_t burn_in,
                                                  Rng& rng, Site start = {}) {
  if (n_steps == 0) throw EmptyPath("tilted path needs at least one step");
  const auto& env = tk.env();
  Site x = start;
  for (std::size_t i = 0; i < burn_in; ++i) x = moved(x, tk.row_at(x).p.sample(rng.uniform()));

  TiltedRun run;
  run.burn_in = burn_in;
  run.measure = EmpiricalMeasure(env.model().num_classes(), env.dimension());
  run.kl.reserve(n_steps);
  run.log_row.reserve(n_steps);
  run.cells.reserve(n_steps);
  std::vector<std::uint8_t> steps;
  steps.reserve(n_steps);
  const Site chain_start = x;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const TiltedRow row = tk.row_at(x);
    const int z = row.p.sample(rng.uniform());
    run.kl.push_back(kl_divergence(row.p, env.site_kernel(x)));
    run.log_row.push_back(std::log(row.row_sum));
    const std::size_t k = env.site_class(x);
    run.measure.add(k, z);
    run.cells.push_back(static_cast<std::uint32_t>(run.measure.cell(k, z)));
    steps.push_back(static_cast<std::uint8_t>(z));
    x = moved(x, z);
  }
  run.path = PathRecord(env.dimension(), chain_start, std::move(steps));
  return run;
}

/// Ergodic average of the per-site relative entropy; batch-means stderr.
[[nodiscard]] inline MeanWithError entropy_rate(const TiltedRun& run, std::size_t batches = 50) {
  if (run.kl.empty()) throw EmptyPath("entropy_rate of an empty run");
  return batch_means(run.kl, batches);
}

/// Per-coordinate velocity with batch-means stderr.
[[nodiscard]] inline std::vector<MeanWithError> tilted_velocity(const TiltedRun& run, std::size_t batches = 50) {
  if (run.path.length() == 0) throw EmptyPath("velocity of an empty run");
  std::vector<MeanWithError> out;
  std::vector<double> series(run.path.length());
  for (int a = 0; a < run.path.dim(); ++a) {
    for (std::size_t k = 0; k < series.size(); ++k) {
      const int z = run.path.steps()[k];
      series[k] = z / 2 == a ? (z % 2 == 0 ? 1.0 : -1.0) : 0.0;
    }
    out.push_back(batch_means(series, batches));
  }
  return out;
}

/// Frequency of each (class of X_k, Z_{k+1}) cell along the run, with
/// batch-means stderr; indexed by EmpiricalMeasure::cell.
[[nodiscard]] inline std::vector<MeanWithError> step_law(const TiltedRun& run, std::size_t batches = 50) {
  if (run.cells.empty()) throw EmptyPath("step law of an empty run");
  const std::size_t n_cells = run.measure.classes() * static_cast<std::size_t>(run.measure.steps());
  std::vector<MeanWithError> out;
  std::vector<double> series(run.cells.size());
  for (std::size_t c = 0; c < n_cells; ++c) {
    for (std::size_t k = 0; k < series.size(); ++k) series[k] = run.cells[k] == c ? 1.0 : 0.0;
    out.push_back(batch_means(series, batches));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minimizer certificate

struct CertificateBudgets {
  std::size_t blocks = 100000;
  SimConfig sim;
  HarmonicParams harmonic;
  std::size_t chain_steps = 100000;
  std::size_t burn_in = 0;        // 0 = 10 x mean block duration
  std::size_t h_site_budget = 0;  // 0 = unlimited
  double row_tol = 0.25;
  std::size_t batches = 50;
};

struct MinimizerCertificate {
  Vec theta;
  double lambda = 0.0;
  double lambda_se = 0.0;
  Vec xi_hat;
  Vec xi_se;
  Vec grad_hat;
  Vec grad_se;
  double H_hat = 0.0;
  double H_se = 0.0;
  double duality_gap = 0.0;  // |H_hat - (<theta, xi_hat> - lambda)|
  double gap_se = 0.0;       // batch means of the paired per-step difference, with lambda_se
  double gap_se_independent = 0.0;  // as if H, xi and lambda were independent
  double projected_H = 0.0;
  std::vector<MeanWithError> step_law;  // (class, step) frequencies, indexed by EmpiricalMeasure::cell
  RowSumStats rows;
  double mean_log_row_along_chain = 0.0;
  std::size_t blocks = 0;
  std::size_t burn_in = 0;
  std::size_t chain_steps = 0;
  std::size_t h_sites = 0;
  HarmonicParams harmonic;
  std::uint64_t env_seed = 0;

  [[nodiscard]] bool gap_within(double k) const { return duality_gap <= k * gap_se; }

  [[nodiscard]] bool velocity_within(double k) const {
    for (std::size_t i = 0; i < xi_hat.size(); ++i)
      if (std::abs(xi_hat[i] - grad_hat[i]) > k * std::hypot(xi_se[i], grad_se[i])) return false;
    return true;
  }
};

[[nodiscard]] inline MinimizerCertificate minimizer_certificate(const EnvironmentModel& model, const Vec& theta,
                                                                const CertificateBudgets& budgets, Rng& rng) {
  if (static_cast<int>(theta.size()) != model.dimension)
    throw DimensionMismatch("theta has the wrong dimension");
  const auto sample = sample_blocks(model, budgets.blocks, budgets.sim, rng);
  const BlockSample bs(sample.blocks, model.dimension);
  const ThetaPoint tp = solve_lambda_a(bs, theta);

  MinimizerCertificate c;
  c.theta = theta;
  c.lambda = tp.lambda;
  c.lambda_se = tp.lambda_se;
  c.grad_hat = tp.grad;
  c.grad_se = tp.grad_se;
  c.blocks = bs.size();
  c.env_seed = rng();
  c.harmonic = budgets.harmonic;
  if (c.harmonic.master_seed == 0) c.harmonic.master_seed = rng();

  EnvironmentRealization env(std::make_shared<const EnvironmentModel>(model), c.env_seed);
  auto field = std::make_shared<HarmonicField>(env, theta, tp.lambda, c.harmonic, budgets.h_site_budget);
  const TiltedKernel tk = TiltedKernel::from_field(field, budgets.row_tol);

  c.burn_in = budgets.burn_in ? budgets.burn_in
                              : static_cast<std::size_t>(std::ceil(10.0 * sample.diagnostics.mean_duration));
  c.chain_steps = budgets.chain_steps;
  const TiltedRun run = sample_tilted_path(tk, budgets.chain_steps, c.burn_in, rng);

  const auto H = entropy_rate(run, budgets.batches);
  c.H_hat = H.mean;
  c.H_se = H.se;
  const auto vel = tilted_velocity(run, budgets.batches);
  double theta_xi = 0.0, indep_var = H.se * H.se + tp.lambda_se * tp.lambda_se;
  for (std::size_t i = 0; i < vel.size(); ++i) {
    c.xi_hat.push_back(vel[i].mean);
    c.xi_se.push_back(vel[i].se);
    theta_xi += theta[i] * vel[i].mean;
    indep_var += theta[i] * theta[i] * vel[i].se * vel[i].se;
  }
  c.duality_gap = std::abs(c.H_hat - (theta_xi - c.lambda));

  std::vector<double> diff(run.kl.size());
  for (std::size_t k = 0; k < diff.size(); ++k)
    diff[k] = run.kl[k] - dot_step(theta, run.path.steps()[k]);
  const auto paired = batch_means(diff, budgets.batches);
  c.gap_se = std::sqrt(paired.se * paired.se + tp.lambda_se * tp.lambda_se);
  c.gap_se_independent = std::sqrt(indep_var);

  c.projected_H = projected_entropy(run.measure, model);
  c.step_law = step_law(run, budgets.batches);
  c.rows = tk.row_stats();
  double s = 0.0;
  for (double v : run.log_row) s += v;
  c.mean_log_row_along_chain = s / static_cast<double>(run.log_row.size());
  c.h_sites = field->sites_estimated();
  return c;
}

// ---------------------------------------------------------------------------
// Conditioned block measure

/// Read access to the environment and future steps around X_j, restricted to
/// the declared window: relative e_1-level in [-N, M], step offsets [1, K].
class WindowView {
 public:
  WindowView(const EnvironmentRealization& env, const Site& here, std::span<const std::uint8_t> future, int N,
             int M, int K)
      : env_(env), here_(here), future_(future), N_(N), M_(M), K_(K) {}

  /// Mixture class of the site here + rel.
  [[nodiscard]] std::size_t site_class(const Site& rel = {}) const {
    if (rel[0] < -N_ || rel[0] > M_)
      throw WindowViolation("observable read level " + std::to_string(rel[0]) + " outside [-" + std::to_string(N_) +
                            ", " + std::to_string(M_) + "]");
    return env_.site_class(add(here_, rel));
  }

  /// Z_{j+k}.
  [[nodiscard]] int step(int k) const {
    if (k < 1 || k > K_)
      throw WindowViolation("observable read step " + std::to_string(k) + " outside [1, " + std::to_string(K_) + "]");
    return future_[static_cast<std::size_t>(k - 1)];
  }

 private:
  const EnvironmentRealization& env_;
  Site here_;
  std::span<const std::uint8_t> future_;
  int N_, M_, K_;
};

struct LocalObservable {
  int N = 0;
  int M = 0;
  int K = 1;
  std::function<double(const WindowView&)> f;
  std::string label;
};

/// Indicator of (class of the current site = k, next step = z).
[[nodiscard]] inline LocalObservable class_step_indicator(std::size_t k, int z) {
  return {0, 0, 1,
          [k, z](const WindowView& v) { return (v.site_class() == k && v.step(1) == z) ? 1.0 : 0.0; },
          "1{k=" + std::to_string(k) + ",z=" + Step::from_index(z).name() + "}"};
}

struct ConditionBudgets {
  std::size_t groups = 20000;
  SimConfig sim;
  std::optional<double> lambda;  // solved on the sampled blocks when absent
};

struct ConditionedResult {
  std::vector<MeanWithError> values;
  double lambda = 0.0;
  std::size_t groups = 0;
  int J = 0;
};

/// Estimates, for each observable, the ratio
///   E[ sum_{tau_N <= j < tau_{N+1}} f(T_{X_j} omega, Z_{j+1..}) exp{<theta,X_{tau_J}> - lambda tau_J} | beta = inf ]
///   / E[ tau_1 exp{<theta,X_{tau_1}> - lambda tau_1} | beta = inf ]
/// with J = N+M+K+1 taken as the maximum over the observables. Groups of J
/// consecutive post-tau_1 blocks of long base trajectories serve as samples.
[[nodiscard]] inline ConditionedResult conditioned_expectations(const EnvironmentModel& model, const Vec& theta,
                                                                std::span<const LocalObservable> observables,
                                                                const ConditionBudgets& budgets, Rng& rng) {
  if (observables.empty()) throw InsufficientSamples("no observables");
  if (budgets.groups < 2) throw InsufficientSamples("need at least two block groups");
  if (static_cast<int>(theta.size()) != model.dimension) throw DimensionMismatch("theta has the wrong dimension");
  SimConfig cfg = budgets.sim;
  if (!cfg.allow_nestling && classify_nestling(model).is_nestling())
    throw NestlingWithoutOverride("nestling model: conditioned sampling requires the override");
  cfg.direction = unit_vector(model.dimension, 0);
  if (cfg.confirm_horizon == 0) cfg.confirm_horizon = default_confirm_horizon(model);
  if (cfg.trajectory_length == 0) cfg.trajectory_length = std::max<std::size_t>(20 * cfg.confirm_horizon, 4000);

  int J = 0;
  for (const auto& o : observables) {
    if (o.N < 0 || o.M < 0 || o.K < 1) throw WindowViolation("window must have N, M >= 0 and K >= 1");
    J = std::max(J, o.N + o.M + o.K + 1);
  }
  const std::size_t n_obs = observables.size();

  // Per group: J block summaries and, per observable, the sum of f over block N.
  struct Group {
    std::vector<RegenBlock> blocks;
    std::vector<double> fsum;
  };
  auto shared = std::make_shared<const EnvironmentModel>(model);
  const std::uint64_t master = rng();
  auto task = [&](std::size_t id) {
    std::vector<Group> out;
    Rng r = substream(master, id);
    for (std::size_t t = 0; t < cfg.trajectories_per_task; ++t) {
      EnvironmentRealization env(shared, r());
      const PathRecord path = simulate_base_path(env, cfg.trajectory_length, r);
      const auto rec = detect_regenerations(path, cfg.direction, cfg.confirm_horizon);
      const auto& tau = rec.confirmed_times;
      const auto positions = path.positions();
      const auto& steps = path.steps();
      for (std::size_t g = 0; g + static_cast<std::size_t>(J) < tau.size(); g += static_cast<std::size_t>(J)) {
        Group grp;
        grp.fsum.assign(n_obs, 0.0);
        for (int b = 0; b < J; ++b) {
          RegenBlock blk;
          const std::size_t s = tau[g + static_cast<std::size_t>(b)], e = tau[g + static_cast<std::size_t>(b) + 1];
          blk.duration = static_cast<std::int64_t>(e - s);
          for (int a = 0; a < model.dimension; ++a)
            blk.displacement[static_cast<std::size_t>(a)] =
                positions[e][static_cast<std::size_t>(a)] - positions[s][static_cast<std::size_t>(a)];
          grp.blocks.push_back(blk);
        }
        for (std::size_t o = 0; o < n_obs; ++o) {
          const auto& obs = observables[o];
          const std::size_t from = tau[g + static_cast<std::size_t>(obs.N)];
          const std::size_t to = tau[g + static_cast<std::size_t>(obs.N) + 1];
          double acc = 0.0;
          for (std::size_t j = from; j < to; ++j) {
            const WindowView view(env, positions[j],
                                  std::span<const std::uint8_t>(steps).subspan(j, static_cast<std::size_t>(obs.K)),
                                  obs.N, obs.M, obs.K);
            acc += obs.f(view);
          }
          grp.fsum[o] = acc;
        }
        out.push_back(std::move(grp));
      }
    }
    return out;
  };

  std::vector<Group> groups;
  std::size_t next_task = 0, stalled = 0;
  while (groups.size() < budgets.groups) {
    const std::size_t have = groups.size();
    std::size_t tasks = 4;
    if (have > 0)
      tasks = static_cast<std::size_t>(std::ceil(static_cast<double>(budgets.groups - have) *
                                                 static_cast<double>(next_task) / static_cast<double>(have))) + 1;
    const std::size_t first = next_task;
    next_task += tasks;
    groups = run_parallel<std::vector<Group>>(
        tasks, [&](std::size_t i) { return task(first + i); },
        [](std::vector<Group> acc, std::vector<Group> part) {
          for (auto& g : part) acc.push_back(std::move(g));
          return acc;
        },
        std::move(groups));
    stalled = groups.size() == have ? stalled + 1 : 0;
    if (stalled >= 8) throw TooFewRegenerations("trajectories too short for groups of " + std::to_string(J) + " blocks");
  }
  groups.resize(budgets.groups);

  ConditionedResult res;
  res.J = J;
  res.groups = groups.size();
  if (budgets.lambda) {
    res.lambda = *budgets.lambda;
  } else {
    std::vector<RegenBlock> pooled;
    pooled.reserve(groups.size() * static_cast<std::size_t>(J));
    for (const auto& g : groups) pooled.insert(pooled.end(), g.blocks.begin(), g.blocks.end());
    res.lambda = solve_lambda_a(pooled, model.dimension, theta).lambda;
  }

  // Ratio estimator over groups: numerator f_sum * w(J blocks), denominator
  // the group mean of T w per block (each block has the law of the first).
  const double n = static_cast<double>(groups.size());
  std::vector<double> den(groups.size()), wJ(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    double log_w = 0.0, tw = 0.0;
    for (const auto& b : groups[i].blocks) {
      const double lb = dot(theta, b.displacement) - res.lambda * static_cast<double>(b.duration);
      log_w += lb;
      tw += static_cast<double>(b.duration) * std::exp(lb);
    }
    wJ[i] = std::exp(log_w);
    den[i] = tw / static_cast<double>(J);
    if (!std::isfinite(wJ[i]) || !std::isfinite(den[i])) throw NonfiniteWeight("group weight overflow");
  }
  double mean_den = 0.0;
  for (double v : den) mean_den += v;
  mean_den /= n;
  if (!(mean_den > 0.0)) throw DegenerateDenominator("weighted mean block duration vanished");

  for (std::size_t o = 0; o < n_obs; ++o) {
    double mean_num = 0.0;
    for (std::size_t i = 0; i < groups.size(); ++i) mean_num += groups[i].fsum[o] * wJ[i];
    mean_num /= n;
    const double ratio = mean_num / mean_den;
    double var = 0.0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const double r = groups[i].fsum[o] * wJ[i] - ratio * den[i];
      var += r * r;
    }
    var /= (n - 1.0);
    res.values.push_back({ratio, std::sqrt(var / n) / mean_den});
  }
  return res;
}

[[nodiscard]] inline MeanWithError conditioned_expectation(const EnvironmentModel& model, const Vec& theta,
                                                           const LocalObservable& f, const ConditionBudgets& budgets,
                                                           Rng& rng) {
  return conditioned_expectations(model, theta, std::span<const LocalObservable>(&f, 1), budgets, rng).values.front();
}

// ---------------------------------------------------------------------------
// Bayes kernel

/// Steps taken from the current site on earlier visits.
struct VisitCounts {
  StepCounts counts{};

  [[nodiscard]] std::uint64_t total() const noexcept {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

/// q(z | counts) = E[pi(0,z) prod pi^{n}] / E[prod pi^{n}].
[[nodiscard]] inline TransitionVector bayes_kernel_q(const SiteLawMixture& law, const VisitCounts& visits) {
  const int d = law.components.front().dim;
  const double den = site_moment(law, visits.counts);
  if (!(den > 0.0)) throw DegenerateDenominator("site moment vanished");
  TransitionVector q(d);
  for (int z = 0; z < 2 * d; ++z) {
    StepCounts c = visits.counts;
    ++c[static_cast<std::size_t>(z)];
    q[z] = site_moment(law, c) / den;
  }
  return q;
}

}  // namespace rwre
