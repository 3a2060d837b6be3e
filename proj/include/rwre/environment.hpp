#pragma once

// Environment laws with finite support and their lazily realized i.i.d.
// environments on Z^d.
//
// The per-site law is a finite mixture of transition vectors. A realization
// assigns each site a mixture component through a counter-based hash of
// (seed, coordinates), so the infinite environment is never stored and any
// site can be queried in any order with the same answer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rwre/core.hpp"
#include "rwre/engine/rng.hpp"

namespace rwre {

inline constexpr double kSimplexTol = 1e-12;

struct SiteLawMixture {
  std::vector<TransitionVector> components;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return components.size(); }

  /// Environment-averaged kernel E[pi(0, .)].
  [[nodiscard]] TransitionVector mean_kernel() const {
    TransitionVector m(components.front().dim);
    for (std::size_t k = 0; k < size(); ++k)
      for (int z = 0; z < m.size(); ++z) m[z] += weights[k] * components[k][z];
    return m;
  }
};

struct EnvironmentModel {
  int dimension = 1;
  double delta = 0.0;
  SiteLawMixture law;

  [[nodiscard]] int num_steps() const noexcept { return 2 * dimension; }
  [[nodiscard]] std::size_t num_classes() const noexcept { return law.size(); }
};

/// Validated model construction.
[[nodiscard]] inline EnvironmentModel make_model(int d, double delta,
                                                 std::vector<TransitionVector> components,
                                                 std::vector<double> weights) {
  if (d < 1 || d > kMaxDim)
    throw DimensionMismatch("dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  if (components.empty()) throw SimplexViolation("mixture needs at least one component");
  if (weights.size() != components.size())
    throw DimensionMismatch("weights and components differ in length");
  if (!(delta > 0.0) || delta > 1.0 / (2.0 * d) + kSimplexTol)
    throw EllipticityViolation("delta must lie in (0, 1/(2d)]");

  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw SimplexViolation("negative mixture weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > kSimplexTol) throw SimplexViolation("mixture weights do not sum to 1");

  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    if (c.dim != d) throw DimensionMismatch("component " + std::to_string(k) + " has wrong dimension");
    if (std::abs(c.sum() - 1.0) > kSimplexTol)
      throw SimplexViolation("component " + std::to_string(k) + " does not sum to 1");
    for (int z = 0; z < c.size(); ++z)
      if (c[z] < delta)
        throw EllipticityViolation("component " + std::to_string(k) + " step " +
                                   Step::from_index(z).name() + " below delta");
  }
  return EnvironmentModel{d, delta, SiteLawMixture{std::move(components), std::move(weights)}};
}

/// Step counts keyed by Step::index().
using StepCounts = std::array<std::uint32_t, kMaxSteps>;

/// sum_k w_k prod_z (p_z^{(k)})^{counts(z)}.
[[nodiscard]] inline double site_moment(const SiteLawMixture& law, const StepCounts& counts) {
  double total = 0.0;
  for (std::size_t k = 0; k < law.size(); ++k) {
    double prod = law.weights[k];
    const auto& c = law.components[k];
    for (int z = 0; z < c.size(); ++z)
      for (std::uint32_t r = 0; r < counts[static_cast<std::size_t>(z)]; ++r) prod *= c[z];
    total += prod;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Nestling classification

struct Nestling {};
struct Nonnestling {
  Vec direction;  // unit witness u with <drift_k, u> > 0 for every component
};

struct NestlingClass {
  std::optional<Nonnestling> nonnestling;
  Vec min_norm_drift;  // closest point of the drift hull to the origin

  [[nodiscard]] bool is_nestling() const noexcept { return !nonnestling.has_value(); }
};

namespace detail {

/// Minimum-norm point of conv(points), by enumerating affinely independent
/// subsets of size <= d+1 (exact up to floating point for small inputs).
inline Eigen::VectorXd min_norm_hull_point(const std::vector<Eigen::VectorXd>& pts) {
  const int n = static_cast<int>(pts.size());
  const int d = static_cast<int>(pts.front().size());
  Eigen::VectorXd best = pts.front();
  double best_norm = best.squaredNorm();
  const int max_size = std::min(n, d + 1);

  std::vector<int> idx;
  auto consider = [&](const std::vector<int>& s) {
    const int m = static_cast<int>(s.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) kkt(i, j) = pts[s[i]].dot(pts[s[j]]);
      kkt(i, m) = 1.0;
      kkt(m, i) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs(m) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < m; ++i) {
      if (sol(i) < -1e-12) return;
      p += sol(i) * pts[s[i]];
    }
    const double nn = p.squaredNorm();
    if (nn < best_norm) {
      best_norm = nn;
      best = p;
    }
  };

  for (int size = 1; size <= max_size; ++size) {
    idx.resize(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      consider(idx);
      int i = size - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - size + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < size; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return best;
}

}  // namespace detail

/// Nonnestling iff the origin lies outside the convex hull of the component
/// drifts; the normalized minimum-norm hull point then separates strictly.
[[nodiscard]] inline NestlingClass classify_nestling(const EnvironmentModel& model) {
  std::vector<Eigen::VectorXd> drifts;
  for (std::size_t k = 0; k < model.law.size(); ++k) {
    if (model.law.weights[k] <= 0.0) continue;
    const Vec v = model.law.components[k].drift();
    drifts.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  const Eigen::VectorXd p = detail::min_norm_hull_point(drifts);
  NestlingClass out;
  out.min_norm_drift.assign(p.data(), p.data() + p.size());
  if (p.norm() <= 1e-12) return out;

  Vec u(p.data(), p.data() + p.size());
  const double nrm = p.norm();
  for (double& x : u) x /= nrm;
  for (const auto& dvec : drifts)
    if (dvec.dot(p) <= 0.0) return out;
  out.nonnestling = Nonnestling{std::move(u)};
  return out;
}

// ---------------------------------------------------------------------------
// Realizations

/// The environment omega: an immutable, shareable view mapping each site to
/// one of the mixture components. `shifted(y)` realizes T_y omega.
class EnvironmentRealization {
 public:
  EnvironmentRealization(std::shared_ptr<const EnvironmentModel> model, std::uint64_t seed)
      : model_(std::move(model)), seed_(seed), seed_key_(mix64(seed ^ 0x5851F42D4C957F2DULL)) {
    cumulative_.reserve(model_->law.size());
    double acc = 0.0;
    for (double w : model_->law.weights) cumulative_.push_back(acc += w);
    cumulative_.back() = 1.0;
    single_ = model_->law.size() == 1;
  }

  EnvironmentRealization(const EnvironmentModel& model, std::uint64_t seed)
      : EnvironmentRealization(std::make_shared<const EnvironmentModel>(model), seed) {}

  [[nodiscard]] const EnvironmentModel& model() const noexcept { return *model_; }
  [[nodiscard]] std::shared_ptr<const EnvironmentModel> model_ptr() const noexcept { return model_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const Site& offset() const noexcept { return offset_; }
  [[nodiscard]] int dimension() const noexcept { return model_->dimension; }

  /// Component index at `site`; a pure function of (seed, offset + site).
  [[nodiscard]] std::size_t site_class(const Site& site) const noexcept {
    if (single_) return 0;
    // Multiply-xor fold of the coordinates, then one full avalanche.
    std::uint64_t h = seed_key_;
    for (int i = 0; i < model_->dimension; ++i) {
      h ^= static_cast<std::uint64_t>(site[static_cast<std::size_t>(i)] + offset_[static_cast<std::size_t>(i)]);
      h *= 0x9E3779B97F4A7C15ULL;
      h ^= h >> 29;
    }
    h = mix64(h);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cumulative_.size() - 1);
  }

  [[nodiscard]] const TransitionVector& site_kernel(const Site& site) const noexcept {
    return model_->law.components[site_class(site)];
  }

  /// T_y omega: site x of the result is site x + y of *this.
  [[nodiscard]] EnvironmentRealization shifted(const Site& y) const {
    EnvironmentRealization out = *this;
    out.offset_ = add(offset_, y);
    return out;
  }

 private:
  std::shared_ptr<const EnvironmentModel> model_;
  std::uint64_t seed_;
  std::uint64_t seed_key_;
  Site offset_{};
  std::vector<double> cumulative_;
  bool single_ = false;
};

[[nodiscard]] inline const TransitionVector& site_kernel(const EnvironmentRealization& env,
                                                         const Site& site) noexcept {
  return env.site_kernel(site);
}

}  // namespace rwre
