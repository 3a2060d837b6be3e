#pragma once

// Averaged log-MGF from the renewal identity
//   E[ exp{<theta, S> - Lambda_a(theta) T} ] = 1   over regeneration blocks,
// its gradient E[S w]/E[T w], direct (finite-n) estimators of Lambda_a and
// Lambda_q, and the rate function by Legendre duality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rwre/core.hpp"
#include "rwre/engine/estimator.hpp"
#include "rwre/engine/parallel.hpp"
#include "rwre/engine/rng.hpp"
#include "rwre/environment.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/walk.hpp"

namespace rwre {

/// Blocks compressed to distinct (S, T) pairs with multiplicities. All
/// renewal computations only depend on (S, T).
class BlockSample {
 public:
  BlockSample() = default;
  BlockSample(std::span<const RegenBlock> blocks, int dim) : dim_(dim) {
    std::map<std::pair<Site, std::int64_t>, std::size_t> counts;
    for (const auto& b : blocks) ++counts[{b.displacement, b.duration}];
    for (const auto& [key, c] : counts) {
      Vec s(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(key.first[static_cast<std::size_t>(i)]);
      disp_.push_back(std::move(s));
      dur_.push_back(static_cast<double>(key.second));
      mult_.push_back(static_cast<double>(c));
    }
    n_ = blocks.size();
  }

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t distinct() const noexcept { return dur_.size(); }
  [[nodiscard]] const Vec& displacement(std::size_t i) const { return disp_[i]; }
  [[nodiscard]] double duration(std::size_t i) const { return dur_[i]; }
  [[nodiscard]] double multiplicity(std::size_t i) const { return mult_[i]; }

  /// Mean velocity E[S]/E[T].
  [[nodiscard]] Vec velocity() const {
    Vec v(static_cast<std::size_t>(dim_), 0.0);
    double t = 0.0;
    for (std::size_t i = 0; i < distinct(); ++i) {
      for (int a = 0; a < dim_; ++a) v[static_cast<std::size_t>(a)] += mult_[i] * disp_[i][static_cast<std::size_t>(a)];
      t += mult_[i] * dur_[i];
    }
    for (double& x : v) x /= t;
    return v;
  }

 private:
  int dim_ = 1;
  std::size_t n_ = 0;
  std::vector<Vec> disp_;
  std::vector<double> dur_;
  std::vector<double> mult_;
};

struct ThetaPoint {
  Vec theta;
  double lambda = 0.0;
  double lambda_se = 0.0;
  Vec grad;
  Vec grad_se;
  std::size_t n_blocks = 0;
  double renewal_mean = 1.0;  // functional at the returned lambda
  double renewal_se = 0.0;
  double ess = 0.0;  // (sum w)^2 / sum w^2 over blocks at the returned lambda
};

struct RenewalValue {
  double mean = 0.0;
  double se = 0.0;
  double log_mean = 0.0;
};

namespace detail {

/// log of the multiplicity-weighted mean of exp(a_i - lambda T_i), in log space.
inline double log_renewal(const BlockSample& bs, const std::vector<double>& a, double lambda) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bs.distinct(); ++i) m = std::max(m, a[i] - lambda * bs.duration(i));
  double s = 0.0;
  for (std::size_t i = 0; i < bs.distinct(); ++i)
    s += bs.multiplicity(i) * std::exp(a[i] - lambda * bs.duration(i) - m);
  return m + std::log(s / static_cast<double>(bs.size()));
}

inline std::vector<double> tilt_exponents(const BlockSample& bs, const Vec& theta) {
  if (static_cast<int>(theta.size()) != bs.dim()) throw DimensionMismatch("theta dimension differs from blocks");
  std::vector<double> a(bs.distinct());
  for (std::size_t i = 0; i < bs.distinct(); ++i) a[i] = dot(theta, bs.displacement(i));
  return a;
}

}  // namespace detail

/// Sample mean and standard error of exp{<theta,S> - lambda T} over blocks.
/// Exponents above 50 are handled by evaluating the mean in log space.
[[nodiscard]] inline RenewalValue renewal_functional(const BlockSample& bs, const Vec& theta, double lambda) {
  if (bs.size() == 0) throw InsufficientSamples("renewal functional needs blocks");
  const auto a = detail::tilt_exponents(bs, theta);
  RenewalValue out;
  out.log_mean = detail::log_renewal(bs, a, lambda);
  double max_exp = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bs.distinct(); ++i) max_exp = std::max(max_exp, a[i] - lambda * bs.duration(i));
  const double shift = max_exp > 50.0 ? max_exp : 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < bs.distinct(); ++i)
    s2 += bs.multiplicity(i) * std::exp(2.0 * (a[i] - lambda * bs.duration(i) - shift));
  const double n = static_cast<double>(bs.size());
  const double scaled_mean = std::exp(out.log_mean - shift);
  const double var = std::max(0.0, (s2 / n - scaled_mean * scaled_mean) * n / std::max(1.0, n - 1.0));
  out.mean = std::exp(out.log_mean);
  out.se = std::sqrt(var / n) * std::exp(shift);
  return out;
}

[[nodiscard]] inline RenewalValue renewal_functional(std::span<const RegenBlock> blocks, int dim, const Vec& theta,
                                                     double lambda) {
  return renewal_functional(BlockSample(blocks, dim), theta, lambda);
}

/// Gradient E[S w]/E[T w] with w = exp{<theta,S> - lambda T}; the standard
/// error comes from the joint influence function of (lambda, ratio).
struct GradientEstimate {
  Vec grad;
  Vec se;
};

[[nodiscard]] inline GradientEstimate grad_lambda_a_full(const BlockSample& bs, const Vec& theta, double lambda) {
  if (bs.size() == 0) throw InsufficientSamples("gradient needs blocks");
  const int d = bs.dim();
  const auto a = detail::tilt_exponents(bs, theta);
  const double n = static_cast<double>(bs.size());
  // Moments normalized by n.
  double ew = 0, etw = 0, ettw = 0;
  Vec esw(static_cast<std::size_t>(d), 0.0), estw(static_cast<std::size_t>(d), 0.0);
  std::vector<double> w(bs.distinct());
  for (std::size_t i = 0; i < bs.distinct(); ++i) {
    w[i] = std::exp(a[i] - lambda * bs.duration(i));
    if (!std::isfinite(w[i])) throw NonfiniteWeight("block weight overflow in gradient");
    const double c = bs.multiplicity(i) / n;
    const double t = bs.duration(i);
    ew += c * w[i];
    etw += c * t * w[i];
    ettw += c * t * t * w[i];
    for (int k = 0; k < d; ++k) {
      esw[static_cast<std::size_t>(k)] += c * bs.displacement(i)[static_cast<std::size_t>(k)] * w[i];
      estw[static_cast<std::size_t>(k)] += c * bs.displacement(i)[static_cast<std::size_t>(k)] * t * w[i];
    }
  }
  if (!(etw > 0.0)) throw DegenerateDenominator("E[T w] vanished");
  GradientEstimate out;
  out.grad.resize(static_cast<std::size_t>(d));
  out.se.resize(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double g = esw[kk] / etw;
    const double dg_dlambda = (-estw[kk] * etw + esw[kk] * ettw) / (etw * etw);
    double var = 0.0;
    for (std::size_t i = 0; i < bs.distinct(); ++i) {
      const double t = bs.duration(i);
      const double s = bs.displacement(i)[kk];
      const double if_lambda = (w[i] - ew) / etw;
      const double if_g = ((s * w[i] - esw[kk]) - g * (t * w[i] - etw)) / etw + dg_dlambda * if_lambda;
      var += bs.multiplicity(i) * if_g * if_g;
    }
    out.grad[kk] = g;
    out.se[kk] = std::sqrt(var / (n * std::max(1.0, n - 1.0)));
  }
  return out;
}

[[nodiscard]] inline Vec grad_lambda_a(const BlockSample& bs, const Vec& theta, double lambda) {
  return grad_lambda_a_full(bs, theta, lambda).grad;
}

/// Lambda_a(theta) as the root in lambda of the (strictly decreasing)
/// renewal functional: bisection to `tol`, then one Newton polish.
[[nodiscard]] inline ThetaPoint solve_lambda_a(const BlockSample& bs, const Vec& theta, double tol = 1e-8) {
  if (bs.size() == 0) throw InsufficientSamples("solve_lambda_a needs blocks");
  if (!(tol > 0.0)) throw BracketFailure("tolerance must be positive");
  const auto a = detail::tilt_exponents(bs, theta);

  double min_rate = std::numeric_limits<double>::infinity();
  double max_s = 0.0, min_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bs.distinct(); ++i) {
    min_rate = std::min(min_rate, a[i] / bs.duration(i));
    max_s = std::max(max_s, norm2(bs.displacement(i)));
    min_t = std::min(min_t, bs.duration(i));
  }
  double lo = min_rate - 1.0;
  double hi = norm2(theta) * max_s / min_t + 1.0;
  auto g = [&](double lam) { return detail::log_renewal(bs, a, lam); };
  const double glo = g(lo), ghi = g(hi);
  if (!std::isfinite(glo) || !std::isfinite(ghi))
    throw NonfiniteWeight("renewal functional is not finite on the bracket");
  if (!(glo >= 0.0 && ghi <= 0.0))
    throw BracketFailure("bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "] does not straddle the root");

  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  double lambda = 0.5 * (lo + hi);

  // Newton polish: d/dlambda log mean = -E[T w]/E[w].
  {
    double sw = 0.0, stw = 0.0;
    const double m = g(lambda);
    for (std::size_t i = 0; i < bs.distinct(); ++i) {
      const double wi = bs.multiplicity(i) * std::exp(a[i] - lambda * bs.duration(i) - m);
      sw += wi;
      stw += wi * bs.duration(i);
    }
    const double candidate = lambda + m / (stw / sw);
    if (candidate >= lo - tol && candidate <= hi + tol && std::abs(g(candidate)) <= std::abs(m)) lambda = candidate;
  }

  ThetaPoint tp;
  tp.theta = theta;
  tp.lambda = lambda;
  tp.n_blocks = bs.size();
  const auto rv = renewal_functional(bs, theta, lambda);
  tp.renewal_mean = rv.mean;
  tp.renewal_se = rv.se;
  const auto ge = grad_lambda_a_full(bs, theta, lambda);
  tp.grad = ge.grad;
  tp.grad_se = ge.se;
  // Delta method: var(lambda) = var(w)/n / E[T w]^2.
  double etw = 0.0, sw = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < bs.distinct(); ++i) {
    const double wi = std::exp(a[i] - lambda * bs.duration(i));
    etw += bs.multiplicity(i) * bs.duration(i) * wi;
    sw += bs.multiplicity(i) * wi;
    sw2 += bs.multiplicity(i) * wi * wi;
  }
  etw /= static_cast<double>(bs.size());
  tp.lambda_se = rv.se / etw;
  tp.ess = sw * sw / sw2;
  return tp;
}

[[nodiscard]] inline ThetaPoint solve_lambda_a(std::span<const RegenBlock> blocks, int dim, const Vec& theta,
                                               double tol = 1e-8) {
  return solve_lambda_a(BlockSample(blocks, dim), theta, tol);
}

// ---------------------------------------------------------------------------
// Direct estimators

struct DirectEstimate {
  double value = 0.0;
  double se = 0.0;
};

struct QuenchedLmgfEstimate {
  Vec theta;
  std::size_t n = 0;
  double value = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
  std::uint64_t env_seed = 0;
};

namespace detail {

/// Largest possible <theta, X_n>, used to keep e^{<theta,X_n>} in range.
inline double max_exponent(const Vec& theta, std::size_t n) {
  double m = 0.0;
  for (double t : theta) m = std::max(m, std::abs(t));
  return m * static_cast<double>(n);
}

inline DirectEstimate finish_direct(const EstimatorSummary& s, double shift, std::size_t n) {
  const double mean = s.mean();
  DirectEstimate out;
  out.value = (std::log(mean) + shift) / static_cast<double>(n);
  out.se = s.std_error() / mean / static_cast<double>(n);
  return out;
}

template <class EnvFor>
EstimatorSummary direct_sum(const Vec& theta, std::size_t n, std::size_t reps, std::uint64_t master,
                            double shift, EnvFor&& env_for) {
  constexpr std::size_t kChunk = 4096;
  const std::size_t tasks = (reps + kChunk - 1) / kChunk;
  return run_parallel<EstimatorSummary>(
      tasks,
      [&](std::size_t t) {
        Rng r = substream(master, t);
        EstimatorSummary s;
        const std::size_t end = std::min(reps, (t + 1) * kChunk);
        for (std::size_t rep = t * kChunk; rep < end; ++rep) {
          const EnvironmentRealization& env = env_for(r);
          Site x{};
          for (std::size_t k = 0; k < n; ++k) x = moved(x, env.site_kernel(x).sample(r.uniform()));
          s.add(std::exp(dot(theta, x) - shift));
        }
        return s;
      },
      [](EstimatorSummary acc, EstimatorSummary s) {
        acc.merge(s);
        return acc;
      });
}

}  // namespace detail

/// (1/n) log of the sample mean of e^{<theta,X_n>} over independent
/// (environment, walk) pairs.
[[nodiscard]] inline DirectEstimate direct_lmgf_averaged(const EnvironmentModel& model, const Vec& theta,
                                                         std::size_t n, std::size_t reps, Rng& rng) {
  if (n < 1 || reps < 1) throw InsufficientSamples("direct estimator needs n >= 1 and reps >= 1");
  if (static_cast<int>(theta.size()) != model.dimension) throw DimensionMismatch("theta dimension");
  auto shared = std::make_shared<const EnvironmentModel>(model);
  const double shift = detail::max_exponent(theta, n);
  const auto s = detail::direct_sum(theta, n, reps, rng(), shift, [&](Rng& r) -> EnvironmentRealization {
    return EnvironmentRealization(shared, r());
  });
  return detail::finish_direct(s, shift, n);
}

/// Inner Monte Carlo over walks in one fixed realization.
[[nodiscard]] inline QuenchedLmgfEstimate direct_lmgf_quenched(const EnvironmentRealization& env, const Vec& theta,
                                                               std::size_t n, std::size_t reps, Rng& rng) {
  if (n < 1 || reps < 1) throw InsufficientSamples("direct estimator needs n >= 1 and reps >= 1");
  const double shift = detail::max_exponent(theta, n);
  const auto s = detail::direct_sum(theta, n, reps, rng(), shift,
                                    [&](Rng&) -> const EnvironmentRealization& { return env; });
  const auto d = detail::finish_direct(s, shift, n);
  return QuenchedLmgfEstimate{theta, n, d.value, d.se, reps, env.seed()};
}

// ---------------------------------------------------------------------------
// Rate function

struct RateQuery {
  Vec xi;
  double I_value = 0.0;
  Vec theta_star;
  bool converged = false;
  std::size_t iterations = 0;
  double lambda_se = 0.0;  // stderr of Lambda_a(theta_star)
};

struct RateOptions {
  double tol = 1e-6;          // on |grad Lambda(theta) - xi|_inf
  std::size_t max_newton = 50;
  double fd_step = 1e-4;
  double theta_cap = 50.0;
  // Past the domain where E[e^{<theta,S> - lambda T}] is finite the sample
  // root is carried by a handful of long blocks. Such theta are not accepted.
  double min_ess = 100.0;
  double min_ess_fraction = 0.01;
};

/// I_a(xi) = sup_theta <theta,xi> - Lambda_a(theta), solved by damped Newton
/// on grad Lambda_a(theta) = xi with a finite-difference Hessian. Outside the
/// l1 unit ball the rate is +inf. When the search stalls at the edge of the
/// trusted region the best dual value found is returned with converged=false.
[[nodiscard]] inline RateQuery rate_I_a(const BlockSample& bs, const Vec& xi, RateOptions opt = {}) {
  const int d = bs.dim();
  if (static_cast<int>(xi.size()) != d) throw DimensionMismatch("xi dimension");
  RateQuery q;
  q.xi = xi;
  q.theta_star.assign(static_cast<std::size_t>(d), 0.0);
  if (norm1(xi) > 1.0 + 1e-12) {
    q.I_value = std::numeric_limits<double>::infinity();
    q.converged = true;
    return q;
  }

  auto objective = [&](const Vec& th, ThetaPoint* tp_out) {
    ThetaPoint tp = solve_lambda_a(bs, th, 1e-10);
    const double phi = tp.lambda - dot(th, xi);
    if (tp_out) *tp_out = std::move(tp);
    return phi;
  };

  Vec theta(static_cast<std::size_t>(d), 0.0);
  ThetaPoint tp;
  double phi = objective(theta, &tp);
  for (q.iterations = 0; q.iterations < opt.max_newton; ++q.iterations) {
    Eigen::VectorXd grad(d);
    for (int k = 0; k < d; ++k) grad(k) = tp.grad[static_cast<std::size_t>(k)] - xi[static_cast<std::size_t>(k)];
    if (grad.lpNorm<Eigen::Infinity>() < opt.tol) {
      q.converged = true;
      break;
    }
    Eigen::MatrixXd hess(d, d);
    for (int k = 0; k < d; ++k) {
      Vec tp_plus = theta, tp_minus = theta;
      tp_plus[static_cast<std::size_t>(k)] += opt.fd_step;
      tp_minus[static_cast<std::size_t>(k)] -= opt.fd_step;
      const auto gp = solve_lambda_a(bs, tp_plus, 1e-10).grad;
      const auto gm = solve_lambda_a(bs, tp_minus, 1e-10).grad;
      for (int r = 0; r < d; ++r)
        hess(r, k) = (gp[static_cast<std::size_t>(r)] - gm[static_cast<std::size_t>(r)]) / (2.0 * opt.fd_step);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd dir;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 1e-12) {
      dir = -ldlt.solve(grad);
    } else {
      const double ridge = 1e-6 + std::abs(hess.diagonal().minCoeff());
      dir = -(hess + ridge * Eigen::MatrixXd::Identity(d, d)).ldlt().solve(grad);
    }

    // Backtracking line search on the convex objective Lambda - <theta,xi>.
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Vec cand = theta;
      for (int k = 0; k < d; ++k) cand[static_cast<std::size_t>(k)] += t * dir(k);
      if (norm2(cand) > opt.theta_cap) continue;
      ThetaPoint ctp;
      double cphi = 0.0;
      try {
        cphi = objective(cand, &ctp);
      } catch (const NonfiniteWeight&) {
        continue;
      }
      if (ctp.ess < std::max(opt.min_ess, opt.min_ess_fraction * static_cast<double>(bs.size()))) continue;
      if (cphi <= phi + 1e-4 * t * grad.dot(dir)) {
        theta = std::move(cand);
        tp = std::move(ctp);
        phi = cphi;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  q.theta_star = theta;
  q.I_value = -phi;
  q.lambda_se = tp.lambda_se;
  return q;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_theta_csv_header(std::ostream& os, int dim) {
  for (int i = 1; i <= dim; ++i) os << "theta_" << i << ',';
  os << "lambda,lambda_stderr";
  for (int i = 1; i <= dim; ++i) os << ",grad_" << i;
  os << ",n_blocks\n";
}

inline void write_theta_csv_row(std::ostream& os, const ThetaPoint& tp) {
  for (double t : tp.theta) os << t << ',';
  os << tp.lambda << ',' << tp.lambda_se;
  for (double g : tp.grad) os << ',' << g;
  os << ',' << tp.n_blocks << '\n';
}

inline void write_rate_csv_header(std::ostream& os, int dim) {
  for (int i = 1; i <= dim; ++i) os << "xi_" << i << ',';
  os << "I";
  for (int i = 1; i <= dim; ++i) os << ",theta_star_" << i;
  os << ",converged\n";
}

inline void write_rate_csv_row(std::ostream& os, const RateQuery& q) {
  for (double x : q.xi) os << x << ',';
  if (std::isinf(q.I_value)) os << "inf";
  else os << q.I_value;
  for (double t : q.theta_star) os << ',' << t;
  os << ',' << (q.converged ? 1 : 0) << '\n';
}

}  // namespace rwre
