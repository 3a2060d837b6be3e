#pragma once

// Estimates of P(|X_n/n - xi| <= eps) under the averaged law: naive hit
// counting and importance sampling with the site-wise exponential tilt
// p_z e^{<theta,z>} / sum p e^{<theta,z>}, reweighted by the path
// likelihood ratio.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "rwre/core.hpp"
#include "rwre/engine/estimator.hpp"
#include "rwre/engine/parallel.hpp"
#include "rwre/engine/rng.hpp"
#include "rwre/environment.hpp"
#include "rwre/oracle.hpp"
#include "rwre/walk.hpp"

namespace rwre {

struct RareEventConfig {
  std::vector<std::size_t> n_list{50, 100, 200, 400};
  double delta_prime = 0.02;
  std::size_t walks = 100000;  // per estimator and per n
  Vec theta;                   // proposal tilt
};

struct RareEventPoint {
  std::size_t n = 0;
  double p_tilted = 0.0;
  double se_tilted = 0.0;
  double p_naive = 0.0;
  double se_naive = 0.0;
  std::size_t naive_hits = 0;
  std::size_t tilted_hits = 0;

  [[nodiscard]] double decay_tilted() const { return -std::log(p_tilted) / static_cast<double>(n); }
  [[nodiscard]] double rel_se_tilted() const { return se_tilted / p_tilted; }
  /// Empirical; infinite when the naive estimator saw no hit.
  [[nodiscard]] double rel_se_naive() const {
    return naive_hits == 0 ? std::numeric_limits<double>::infinity() : se_naive / p_naive;
  }
  /// sqrt((1-p)/(p M)) for a Bernoulli estimator with M walks at probability p.
  [[nodiscard]] static double rel_se_naive_at(double p, std::size_t walks) {
    return std::sqrt((1.0 - p) / (p * static_cast<double>(walks)));
  }
};

namespace detail {

inline bool in_window(const Vec& xi, const Site& x, std::size_t n, double eps) {
  double worst = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(x[i]) / static_cast<double>(n) - xi[i]));
  return worst <= eps;
}

}  // namespace detail

/// One fresh environment per walk; distance is the sup norm.
[[nodiscard]] inline std::vector<RareEventPoint> rare_event_decay(const EnvironmentModel& model, const Vec& xi,
                                                                  const RareEventConfig& cfg, Rng& rng) {
  const int d = model.dimension;
  if (static_cast<int>(xi.size()) != d || static_cast<int>(cfg.theta.size()) != d)
    throw DimensionMismatch("xi and theta must have the model dimension");
  if (cfg.walks < 2) throw InsufficientSamples("need at least two walks");
  auto shared = std::make_shared<const EnvironmentModel>(model);
  std::vector<TransitionVector> tilted;
  for (const auto& c : model.law.components) tilted.push_back(classical_tilt(c, cfg.theta));

  constexpr std::size_t chunk = 4096;
  std::vector<RareEventPoint> out;
  for (std::size_t n : cfg.n_list) {
    const std::uint64_t master = rng();
    const std::size_t tasks = (cfg.walks + chunk - 1) / chunk;
    struct Part {
      EstimatorSummary tilted, naive;
      std::size_t hits_t = 0, hits_n = 0;
    };
    auto task = [&](std::size_t id) {
      Part p;
      Rng r = substream(master, id);
      const std::size_t m = std::min(chunk, cfg.walks - id * chunk);
      for (std::size_t w = 0; w < m; ++w) {
        // Naive walk.
        {
          EnvironmentRealization env(shared, r());
          Site x{};
          for (std::size_t k = 0; k < n; ++k) x = moved(x, env.site_kernel(x).sample(r.uniform()));
          const bool hit = detail::in_window(xi, x, n, cfg.delta_prime);
          p.naive.add(hit ? 1.0 : 0.0);
          p.hits_n += hit;
        }
        // Tilted walk with likelihood ratio sum log(p/q).
        {
          EnvironmentRealization env(shared, r());
          Site x{};
          double llr = 0.0;
          for (std::size_t k = 0; k < n; ++k) {
            const std::size_t c = env.site_class(x);
            const int z = tilted[c].sample(r.uniform());
            llr += std::log(model.law.components[c][z] / tilted[c][z]);
            x = moved(x, z);
          }
          const bool hit = detail::in_window(xi, x, n, cfg.delta_prime);
          p.tilted.add(hit ? std::exp(llr) : 0.0);
          p.hits_t += hit;
        }
      }
      return p;
    };
    const Part all = run_parallel<Part>(tasks, task, [](Part acc, Part p) {
      acc.tilted.merge(p.tilted);
      acc.naive.merge(p.naive);
      acc.hits_t += p.hits_t;
      acc.hits_n += p.hits_n;
      return acc;
    });
    RareEventPoint pt;
    pt.n = n;
    pt.p_tilted = all.tilted.mean();
    pt.se_tilted = all.tilted.std_error();
    pt.p_naive = all.naive.mean();
    pt.se_naive = all.naive.std_error();
    pt.naive_hits = all.hits_n;
    pt.tilted_hits = all.hits_t;
    out.push_back(pt);
  }
  return out;
}

}  // namespace rwre
