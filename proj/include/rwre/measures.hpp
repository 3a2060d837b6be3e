#pragma once

// Level-1/level-2 empirical measures of the environment chain, projected to
// the finite alphabet (mixture class of the current site, next step).

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "rwre/core.hpp"
#include "rwre/environment.hpp"
#include "rwre/walk.hpp"

namespace rwre {

class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  EmpiricalMeasure(std::size_t classes, int dim)
      : classes_(classes), dim_(dim), counts_(classes * static_cast<std::size_t>(2 * dim), 0) {}

  [[nodiscard]] std::size_t classes() const noexcept { return classes_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] int steps() const noexcept { return 2 * dim_; }
  [[nodiscard]] std::uint64_t total() const noexcept { return total_; }

  void add(std::size_t k, int z, std::uint64_t c = 1) {
    counts_[cell(k, z)] += c;
    total_ += c;
  }

  [[nodiscard]] std::uint64_t count(std::size_t k, int z) const { return counts_[cell(k, z)]; }

  [[nodiscard]] double frequency(std::size_t k, int z) const {
    return static_cast<double>(count(k, z)) / static_cast<double>(total_);
  }

  [[nodiscard]] std::uint64_t class_count(std::size_t k) const {
    std::uint64_t s = 0;
    for (int z = 0; z < steps(); ++z) s += count(k, z);
    return s;
  }

  /// Pointwise count addition (the measure monoid).
  void merge(const EmpiricalMeasure& other) {
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
  }

  [[nodiscard]] std::size_t cell(std::size_t k, int z) const noexcept {
    return k * static_cast<std::size_t>(steps()) + static_cast<std::size_t>(z);
  }

 private:
  std::size_t classes_ = 0;
  int dim_ = 1;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Counts (class of X_k, Z_{k+1}) along the path.
[[nodiscard]] inline EmpiricalMeasure accumulate(const PathRecord& path, const EnvironmentRealization& env) {
  if (path.length() == 0) throw EmptyPath("accumulate on an empty path");
  EmpiricalMeasure mu(env.model().num_classes(), env.dimension());
  Site x = path.start();
  for (auto z : path.steps()) {
    mu.add(env.site_class(x), z);
    x = moved(x, z);
  }
  return mu;
}

/// xi_mu = sum_{k,z} mu(k,z) z.
[[nodiscard]] inline Vec xi_of(const EmpiricalMeasure& mu) {
  if (mu.total() == 0) throw EmptyMeasure("xi_of on an empty measure");
  std::vector<std::int64_t> net(static_cast<std::size_t>(mu.dim()), 0);
  for (std::size_t k = 0; k < mu.classes(); ++k)
    for (int z = 0; z < mu.steps(); ++z)
      net[static_cast<std::size_t>(z / 2)] +=
          (z % 2 == 0 ? 1 : -1) * static_cast<std::int64_t>(mu.count(k, z));
  Vec v(static_cast<std::size_t>(mu.dim()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(net[i]) / static_cast<double>(mu.total());
  return v;
}

/// sum_k q(k) sum_z a(z|k) log(a(z|k) / p^{(k)}_z).
[[nodiscard]] inline double projected_entropy(const EmpiricalMeasure& mu, const EnvironmentModel& model) {
  if (mu.total() == 0) throw EmptyMeasure("entropy of an empty measure");
  double h = 0.0;
  for (std::size_t k = 0; k < mu.classes(); ++k) {
    const auto nk = mu.class_count(k);
    if (nk == 0) continue;
    const double qk = static_cast<double>(nk) / static_cast<double>(mu.total());
    for (int z = 0; z < mu.steps(); ++z) {
      const auto c = mu.count(k, z);
      if (c == 0) continue;
      const double base = model.law.components[k][z];
      if (!(base > 0.0)) throw ZeroBaseProbability("base kernel vanishes on a visited step");
      const double a = static_cast<double>(c) / static_cast<double>(nk);
      h += qk * a * std::log(a / base);
    }
  }
  return h;
}

/// Total-variation distance between the class frequencies of departure
/// sites X_0..X_{n-1} and arrival sites X_1..X_n. Bounded by 1/n.
[[nodiscard]] inline double marginal_balance(const PathRecord& path, const EnvironmentRealization& env) {
  if (path.length() == 0) throw EmptyPath("marginal_balance on an empty path");
  const std::size_t classes = env.model().num_classes();
  std::vector<std::int64_t> diff(classes, 0);
  Site x = path.start();
  for (auto z : path.steps()) {
    ++diff[env.site_class(x)];
    x = moved(x, z);
    --diff[env.site_class(x)];
  }
  double tv = 0.0;
  for (auto v : diff) tv += std::abs(static_cast<double>(v));
  return 0.5 * tv / static_cast<double>(path.length());
}

/// CSV with columns k, step, count.
inline void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu) {
  os << "k,step,count\n";
  for (std::size_t k = 0; k < mu.classes(); ++k)
    for (int z = 0; z < mu.steps(); ++z) os << k << ',' << Step::from_index(z).name() << ',' << mu.count(k, z) << '\n';
}

}  // namespace rwre
