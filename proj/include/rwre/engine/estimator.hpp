#pragma once

// Mergeable Monte Carlo summaries and confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace rwre {

/// Two-sided normal critical value for a confidence level in (0,1).
[[nodiscard]] inline double normal_critical(double level) {
  const boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, 0.5 + 0.5 * level);
}

/// Count / sum / sum-of-squares summary of i.i.d. draws. Merging two
/// summaries is exact and equals summarizing the concatenated draws.
class EstimatorSummary {
 public:
  void add(double x) noexcept {
    ++n_;
    sum_ += x;
    sumsq_ += static_cast<long double>(x) * x;
  }

  void merge(const EstimatorSummary& other) noexcept {
    n_ += other.n_;
    sum_ += other.sum_;
    sumsq_ += other.sumsq_;
  }

  [[nodiscard]] std::uint64_t count() const noexcept { return n_; }
  [[nodiscard]] double sum() const noexcept { return static_cast<double>(sum_); }

  [[nodiscard]] double mean() const noexcept {
    return n_ == 0 ? std::numeric_limits<double>::quiet_NaN()
                   : static_cast<double>(sum_ / static_cast<long double>(n_));
  }

  /// Unbiased sample variance.
  [[nodiscard]] double variance() const noexcept {
    if (n_ < 2) return 0.0;
    const long double n = static_cast<long double>(n_);
    const long double v = (sumsq_ - sum_ * sum_ / n) / (n - 1);
    return static_cast<double>(std::max(v, 0.0L));
  }

  [[nodiscard]] double std_error() const noexcept {
    return n_ == 0 ? std::numeric_limits<double>::infinity()
                   : std::sqrt(variance() / static_cast<double>(n_));
  }

  [[nodiscard]] std::pair<double, double> ci(double level = 0.95) const {
    const double h = normal_critical(level) * std_error();
    return {mean() - h, mean() + h};
  }

  friend bool operator==(const EstimatorSummary&, const EstimatorSummary&) = default;

 private:
  std::uint64_t n_ = 0;
  long double sum_ = 0.0L;
  long double sumsq_ = 0.0L;
};

struct MeanWithError {
  double mean = 0.0;
  double se = 0.0;
};

/// Batch-means estimate for a correlated stationary series.
[[nodiscard]] inline MeanWithError batch_means(std::span<const double> xs, std::size_t batches = 50) {
  MeanWithError out;
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::infinity()};
  batches = std::clamp<std::size_t>(batches, 1, xs.size());
  const std::size_t len = xs.size() / batches;
  EstimatorSummary per_batch;
  long double total = 0.0L;
  for (double x : xs) total += x;
  out.mean = static_cast<double>(total / static_cast<long double>(xs.size()));
  if (batches < 2) {
    out.se = std::numeric_limits<double>::infinity();
    return out;
  }
  for (std::size_t b = 0; b < batches; ++b) {
    long double s = 0.0L;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    per_batch.add(static_cast<double>(s / static_cast<long double>(len)));
  }
  out.se = per_batch.std_error();
  return out;
}

/// Neumaier compensated summation with a fixed combination order.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rwre
