#pragma once

// Quenched walks under the base kernel or any environment kernel.

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rwre/core.hpp"
#include "rwre/engine/rng.hpp"
#include "rwre/environment.hpp"

namespace rwre {

/// A finite trajectory X_0 = start, X_{i+1} = X_i + Z_{i+1}. Steps are stored;
/// positions are produced on demand and the e_1 level sequence is cached.
class PathRecord {
 public:
  PathRecord() = default;
  PathRecord(int dim, Site start, std::vector<std::uint8_t> steps)
      : dim_(dim), start_(start), steps_(std::move(steps)) {
    e1_levels_ = std::make_shared<std::vector<double>>();
    e1_levels_->reserve(steps_.size() + 1);
    double level = static_cast<double>(start_[0]);
    e1_levels_->push_back(level);
    end_ = start_;
    for (auto z : steps_) {
      end_ = moved(end_, z);
      level = static_cast<double>(end_[0]);
      e1_levels_->push_back(level);
    }
  }

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t length() const noexcept { return steps_.size(); }
  [[nodiscard]] const Site& start() const noexcept { return start_; }
  [[nodiscard]] const Site& end() const noexcept { return end_; }
  [[nodiscard]] const std::vector<std::uint8_t>& steps() const noexcept { return steps_; }

  [[nodiscard]] std::vector<Site> positions() const {
    std::vector<Site> out;
    out.reserve(steps_.size() + 1);
    Site x = start_;
    out.push_back(x);
    for (auto z : steps_) out.push_back(x = moved(x, z));
    return out;
  }

  /// <X_i, u> for i = 0..n. The e_1 sequence is served from the cache.
  [[nodiscard]] std::vector<double> levels(const Vec& u) const {
    bool is_e1 = !u.empty() && u[0] == 1.0;
    for (std::size_t i = 1; i < u.size() && is_e1; ++i) is_e1 = u[i] == 0.0;
    if (is_e1 && e1_levels_) return *e1_levels_;
    std::vector<double> out;
    out.reserve(steps_.size() + 1);
    double level = dot(u, start_);
    out.push_back(level);
    for (auto z : steps_) out.push_back(level += dot_step(u, z));
    return out;
  }

 private:
  int dim_ = 1;
  Site start_{};
  Site end_{};
  std::vector<std::uint8_t> steps_;
  std::shared_ptr<std::vector<double>> e1_levels_;
};

enum class KernelTag { Base, Tilted, Custom };

/// An environment kernel: site -> transition vector in a given realization.
struct KernelSpec {
  KernelTag tag = KernelTag::Base;
  std::function<TransitionVector(const EnvironmentRealization&, const Site&)> rule;
  std::string label = "base";

  [[nodiscard]] TransitionVector operator()(const EnvironmentRealization& env, const Site& x) const {
    return rule ? rule(env, x) : env.site_kernel(x);
  }
};

[[nodiscard]] inline KernelSpec base_kernel() { return KernelSpec{}; }

/// Same transition vector at every site.
[[nodiscard]] inline KernelSpec constant_kernel(TransitionVector p, std::string label = "constant") {
  return KernelSpec{KernelTag::Custom,
                    [p](const EnvironmentRealization&, const Site&) { return p; }, std::move(label)};
}

/// Markov trajectory of `n_steps` from `start` under `kernel` in `env`.
/// `Kernel` is any callable (env, site) -> TransitionVector.
template <class Kernel>
[[nodiscard]] PathRecord simulate_path(const EnvironmentRealization& env, const Kernel& kernel,
                                       std::size_t n_steps, Rng& rng, Site start = {}) {
  std::vector<std::uint8_t> steps;
  steps.reserve(n_steps);
  Site x = start;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const int z = kernel(env, x).sample(rng.uniform());
    steps.push_back(static_cast<std::uint8_t>(z));
    x = moved(x, z);
  }
  return PathRecord(env.dimension(), start, std::move(steps));
}

/// Base-kernel specialization that avoids copying transition vectors.
[[nodiscard]] inline PathRecord simulate_base_path(const EnvironmentRealization& env,
                                                   std::size_t n_steps, Rng& rng, Site start = {}) {
  std::vector<std::uint8_t> steps;
  steps.reserve(n_steps);
  Site x = start;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const int z = env.site_kernel(x).sample(rng.uniform());
    steps.push_back(static_cast<std::uint8_t>(z));
    x = moved(x, z);
  }
  return PathRecord(env.dimension(), start, std::move(steps));
}

/// X_n / n.
[[nodiscard]] inline Vec mean_velocity(const PathRecord& path) {
  if (path.length() == 0) throw EmptyPath("mean_velocity of an empty path");
  Vec v(static_cast<std::size_t>(path.dim()));
  for (int i = 0; i < path.dim(); ++i)
    v[static_cast<std::size_t>(i)] =
        static_cast<double>(path.end()[static_cast<std::size_t>(i)] - path.start()[static_cast<std::size_t>(i)]) /
        static_cast<double>(path.length());
  return v;
}

/// sum_i log(kernelA(X_i)(Z_{i+1}) / kernelB(X_i)(Z_{i+1})).
template <class KernelA, class KernelB>
[[nodiscard]] double log_likelihood_ratio(const PathRecord& path, const EnvironmentRealization& env,
                                          const KernelA& a, const KernelB& b) {
  double total = 0.0;
  Site x = path.start();
  for (auto z : path.steps()) {
    const double pa = a(env, x)[z];
    const double pb = b(env, x)[z];
    if (!(pa > 0.0) || !(pb > 0.0))
      throw ZeroProbabilityStep("step " + Step::from_index(z).name() + " has zero probability");
    total += std::log(pa / pb);
    x = moved(x, z);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Path dump: "# seed=<s> kernel=<tag> dim=<d>" then one step token per line.

inline void write_path(std::ostream& os, const PathRecord& path, std::uint64_t seed,
                       const std::string& kernel_tag) {
  os << "# seed=" << seed << " kernel=" << kernel_tag << " dim=" << path.dim() << '\n';
  for (auto z : path.steps()) os << Step::from_index(z).name() << '\n';
}

struct PathDump {
  std::uint64_t seed = 0;
  std::string kernel_tag;
  PathRecord path;
};

[[nodiscard]] inline PathDump read_path(std::istream& is) {
  PathDump out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw ConfigError("path dump missing header");
  std::istringstream hdr(line.substr(2));
  std::string field;
  int dim = 0;
  while (hdr >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const auto key = field.substr(0, eq);
    const auto val = field.substr(eq + 1);
    if (key == "seed") out.seed = std::stoull(val);
    else if (key == "kernel") out.kernel_tag = val;
    else if (key == "dim") dim = std::stoi(val);
  }
  if (dim < 1) throw ConfigError("path dump header lacks dim");
  std::vector<std::uint8_t> steps;
  while (std::getline(is, line))
    if (!line.empty()) steps.push_back(static_cast<std::uint8_t>(Step::parse(line, dim).index()));
  out.path = PathRecord(dim, Site{}, std::move(steps));
  return out;
}

}  // namespace rwre
