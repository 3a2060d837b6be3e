#pragma once

// Exact reference computations: classical (constant-environment) closed
// forms and exhaustive enumeration of the averaged and quenched moment
// generating functions at small n.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "rwre/core.hpp"
#include "rwre/engine/estimator.hpp"
#include "rwre/engine/parallel.hpp"
#include "rwre/environment.hpp"

namespace rwre {

/// log sum_z p_z e^{<theta,z>}.
[[nodiscard]] inline double classical_lmgf(const TransitionVector& p, const Vec& theta) {
  double s = 0.0;
  for (int z = 0; z < p.size(); ++z) s += p[z] * std::exp(dot_step(theta, z));
  return std::log(s);
}

/// p_z e^{<theta,z>} / sum p e^{<theta,z>}.
[[nodiscard]] inline TransitionVector classical_tilt(const TransitionVector& p, const Vec& theta) {
  TransitionVector q(p.dim);
  double s = 0.0;
  for (int z = 0; z < p.size(); ++z) s += (q[z] = p[z] * std::exp(dot_step(theta, z)));
  for (int z = 0; z < p.size(); ++z) q[z] /= s;
  return q;
}

/// Velocity of the classically tilted walk, i.e. the gradient of classical_lmgf.
[[nodiscard]] inline Vec classical_tilted_velocity(const TransitionVector& p, const Vec& theta) {
  return classical_tilt(p, theta).drift();
}

namespace detail {

struct EnumFrame {
  Site site;
  std::vector<double> prod;  // per-component prod_z p_z^{n_z} at this site
};

class AveragedEnumerator {
 public:
  AveragedEnumerator(const EnvironmentModel& m, const Vec& theta, int n) : m_(m), theta_(theta), n_(n) {
    const auto k = m.law.size();
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> row;
      for (int z = 0; z < m.num_steps(); ++z) row.push_back(m.law.components[c][z]);
      p_.push_back(std::move(row));
    }
  }

  using PathSink = std::function<void(const std::vector<int>&, double)>;

  /// Sum over all paths whose first step is `first`; `sink` sees every
  /// complete path with its averaged probability.
  CompensatedSum run_branch(int first, PathSink sink = {}) {
    sink_ = std::move(sink);
    path_.clear();
    visited_.clear();
    visited_.push_back({Site{}, std::vector<double>(m_.law.weights)});
    CompensatedSum acc;
    step(Site{}, 0, first, 1.0, acc);
    return acc;
  }

 private:
  void step(const Site& x, int depth, int z, double weight, CompensatedSum& acc) {
    // The weight at x changes from M(prod) to M(prod * p_z).
    const std::size_t vi = find(x);
    const std::vector<double> saved = visited_[vi].prod;
    double before = 0.0, after = 0.0;
    for (std::size_t c = 0; c < saved.size(); ++c) {
      before += saved[c];
      after += (visited_[vi].prod[c] = saved[c] * p_[c][static_cast<std::size_t>(z)]);
    }
    const double w = weight * after / before;
    const Site y = moved(x, z);
    path_.push_back(z);
    if (depth + 1 == n_) {
      acc.add(w * std::exp(dot(theta_, y)));
      if (sink_) sink_(path_, w);
    } else {
      const std::size_t mark = visited_.size();
      if (find(y) == npos) visited_.push_back({y, std::vector<double>(m_.law.weights)});
      for (int z2 = 0; z2 < m_.num_steps(); ++z2) step(y, depth + 1, z2, w, acc);
      visited_.resize(mark);
    }
    path_.pop_back();
    visited_[vi].prod = saved;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find(const Site& x) const {
    for (std::size_t i = 0; i < visited_.size(); ++i)
      if (visited_[i].site == x) return i;
    return npos;
  }

  const EnvironmentModel& m_;
  const Vec& theta_;
  int n_;
  std::vector<std::vector<double>> p_;
  std::vector<EnumFrame> visited_;
  std::vector<int> path_;
  PathSink sink_;
};

}  // namespace detail

/// E_o[exp<theta, X_n>] computed exactly: sum over all (2d)^n step sequences
/// of e^{<theta,X_n>} times the product over visited sites of the mixed
/// per-site moment of that site's step counts.
[[nodiscard]] inline double enumerate_averaged_mgf(const EnvironmentModel& model, const Vec& theta, int n) {
  if (n < 0) throw TooLarge("negative n");
  if (static_cast<double>(n) * std::log(2.0 * model.dimension) > 25.0)
    throw TooLarge("(2d)^n paths exceed the enumeration guard");
  if (n == 0) return 1.0;
  const int branches = model.num_steps();
  CompensatedSum total = run_parallel<CompensatedSum>(
      static_cast<std::size_t>(branches),
      [&](std::size_t b) {
        detail::AveragedEnumerator e(model, theta, n);
        return e.run_branch(static_cast<int>(b));
      },
      [](CompensatedSum acc, CompensatedSum part) {
        acc.add(part);
        return acc;
      });
  return total.value();
}

/// Averaged probability of every step sequence of length n, from the
/// enumerator's incremental site bookkeeping.
[[nodiscard]] inline std::map<std::vector<int>, double> enumerate_path_weights(const EnvironmentModel& model, int n) {
  if (n < 1) throw TooLarge("path weights need n >= 1");
  if (static_cast<double>(n) * std::log(2.0 * model.dimension) > 16.0)
    throw TooLarge("too many paths to list");
  std::map<std::vector<int>, double> out;
  const Vec zero(static_cast<std::size_t>(model.dimension), 0.0);
  for (int first = 0; first < model.num_steps(); ++first) {
    detail::AveragedEnumerator e(model, zero, n);
    (void)e.run_branch(first, [&](const std::vector<int>& path, double w) { out[path] = w; });
  }
  return out;
}

/// Averaged probability of one step sequence: the product over distinct
/// visited sites of site_moment of the steps taken there.
[[nodiscard]] inline double averaged_path_weight(const EnvironmentModel& model, std::span<const int> steps) {
  std::map<Site, StepCounts> visits;
  Site x{};
  for (int z : steps) {
    if (z < 0 || z >= model.num_steps()) throw DimensionMismatch("step index outside the model dimension");
    ++visits[x][static_cast<std::size_t>(z)];
    x = moved(x, z);
  }
  double w = 1.0;
  for (const auto& [site, counts] : visits) w *= site_moment(model.law, counts);
  return w;
}

/// log E_o^omega[exp<theta, X_n>] in a fixed realization by transfer-operator
/// iteration over reachable positions (renormalized each step).
[[nodiscard]] inline double enumerate_quenched_mgf(const EnvironmentRealization& env, const Vec& theta, int n,
                                                   double max_states = 2e7) {
  const int d = env.dimension();
  if (std::pow(2.0 * n + 1.0, d) > max_states) throw TooLarge("(2n+1)^d exceeds the state guard");
  std::unordered_map<Site, double, SiteHash> v{{Site{}, 1.0}};
  double log_scale = 0.0;
  std::vector<double> tilt(static_cast<std::size_t>(2 * d));
  for (int z = 0; z < 2 * d; ++z) tilt[static_cast<std::size_t>(z)] = std::exp(dot_step(theta, z));
  for (int k = 0; k < n; ++k) {
    std::unordered_map<Site, double, SiteHash> next;
    next.reserve(v.size() * 2);
    for (const auto& [x, mass] : v) {
      const auto& p = env.site_kernel(x);
      for (int z = 0; z < 2 * d; ++z) next[moved(x, z)] += mass * p[z] * tilt[static_cast<std::size_t>(z)];
    }
    CompensatedSum s;
    for (const auto& [x, mass] : next) s.add(mass);
    const double total = s.value();
    for (auto& [x, mass] : next) mass /= total;
    log_scale += std::log(total);
    v = std::move(next);
  }
  return log_scale;
}

}  // namespace rwre
