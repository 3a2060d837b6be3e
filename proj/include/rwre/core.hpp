#pragma once

// Lattice primitives shared by every module: unit steps, sites, transition
// vectors and the exception hierarchy.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rwre {

/// Largest lattice dimension supported by the fixed-size site/kernel storage.
inline constexpr int kMaxDim = 8;
inline constexpr int kMaxSteps = 2 * kMaxDim;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  /// Index of the parallel task that raised the error, if any (innermost wins).
  [[nodiscard]] std::optional<std::size_t> task_id() const noexcept { return task_id_; }
  void attribute_task(std::size_t id) noexcept {
    if (!task_id_) task_id_ = id;
  }

 private:
  std::optional<std::size_t> task_id_;
};

#define RWRE_DEFINE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

RWRE_DEFINE_ERROR(DimensionMismatch);
RWRE_DEFINE_ERROR(SimplexViolation);
RWRE_DEFINE_ERROR(EllipticityViolation);
RWRE_DEFINE_ERROR(EmptyPath);
RWRE_DEFINE_ERROR(ZeroProbabilityStep);
RWRE_DEFINE_ERROR(TooFewRegenerations);
RWRE_DEFINE_ERROR(NestlingWithoutOverride);
RWRE_DEFINE_ERROR(InsufficientSamples);
RWRE_DEFINE_ERROR(BracketFailure);
RWRE_DEFINE_ERROR(NonfiniteWeight);
RWRE_DEFINE_ERROR(DegenerateDenominator);
RWRE_DEFINE_ERROR(MissingNeighbor);
RWRE_DEFINE_ERROR(BudgetExhausted);
RWRE_DEFINE_ERROR(NonpositiveH);
RWRE_DEFINE_ERROR(WindowViolation);
RWRE_DEFINE_ERROR(TooLarge);
RWRE_DEFINE_ERROR(EmptyMeasure);
RWRE_DEFINE_ERROR(ZeroBaseProbability);
RWRE_DEFINE_ERROR(CorruptEntry);
RWRE_DEFINE_ERROR(ConfigError);

#undef RWRE_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Steps

/// One of the 2d unit steps +-e_i. Encoded as index 2*axis + (sign < 0).
struct Step {
  int axis = 0;
  int sign = +1;

  [[nodiscard]] constexpr int index() const noexcept { return 2 * axis + (sign < 0 ? 1 : 0); }
  [[nodiscard]] static constexpr Step from_index(int idx) noexcept {
    return Step{idx / 2, (idx % 2 == 0) ? +1 : -1};
  }
  [[nodiscard]] constexpr Step negated() const noexcept { return Step{axis, -sign}; }

  /// "+1", "-1", ..., "+d", "-d" (axes are 1-based in names).
  [[nodiscard]] std::string name() const {
    return std::string(sign > 0 ? "+" : "-") + std::to_string(axis + 1);
  }

  static Step parse(std::string_view token, int dim) {
    if (token.size() < 2 || (token[0] != '+' && token[0] != '-'))
      throw ConfigError("bad step token '" + std::string(token) + "'");
    int axis = 0;
    try {
      axis = std::stoi(std::string(token.substr(1))) - 1;
    } catch (const std::exception&) {
      throw ConfigError("bad step token '" + std::string(token) + "'");
    }
    if (axis < 0 || axis >= dim)
      throw DimensionMismatch("step '" + std::string(token) + "' outside dimension " +
                              std::to_string(dim));
    return Step{axis, token[0] == '+' ? +1 : -1};
  }

  friend constexpr bool operator==(Step a, Step b) noexcept {
    return a.axis == b.axis && a.sign == b.sign;
  }
};

/// Index of the opposite step.
[[nodiscard]] constexpr int opposite(int step_index) noexcept { return step_index ^ 1; }

// ---------------------------------------------------------------------------
// Sites and real vectors

/// A lattice point; coordinates beyond the model dimension stay zero.
using Site = std::array<std::int64_t, kMaxDim>;

/// Real d-vectors (theta, velocities, gradients).
using Vec = std::vector<double>;

[[nodiscard]] inline Site moved(Site x, int step_index) noexcept {
  x[step_index / 2] += (step_index % 2 == 0) ? 1 : -1;
  return x;
}

[[nodiscard]] inline Site add(Site a, const Site& b) noexcept {
  for (int i = 0; i < kMaxDim; ++i) a[i] += b[i];
  return a;
}

[[nodiscard]] inline Site unit_site(int step_index) noexcept { return moved(Site{}, step_index); }

/// <theta, z> for a unit step z.
[[nodiscard]] inline double dot_step(const Vec& theta, int step_index) noexcept {
  const double t = theta[static_cast<std::size_t>(step_index / 2)];
  return (step_index % 2 == 0) ? t : -t;
}

[[nodiscard]] inline double dot(const Vec& v, const Site& x) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * static_cast<double>(x[i]);
  return s;
}

[[nodiscard]] inline double dot(const Vec& a, const Vec& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

[[nodiscard]] inline double norm2(const Vec& v) noexcept { return std::sqrt(dot(v, v)); }

[[nodiscard]] inline double norm1(const Vec& v) noexcept {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

[[nodiscard]] inline Vec unit_vector(int dim, int axis) {
  Vec v(static_cast<std::size_t>(dim), 0.0);
  v[static_cast<std::size_t>(axis)] = 1.0;
  return v;
}

struct SiteHash {
  std::size_t operator()(const Site& x) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (auto c : x) {
      h ^= static_cast<std::uint64_t>(c) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// ---------------------------------------------------------------------------
// Transition vectors

/// Probabilities over the 2d unit steps, indexed by Step::index().
struct TransitionVector {
  int dim = 0;
  std::array<double, kMaxSteps> p{};

  TransitionVector() = default;
  explicit TransitionVector(int d) : dim(d) {}

  [[nodiscard]] int size() const noexcept { return 2 * dim; }
  [[nodiscard]] double operator[](int i) const noexcept { return p[static_cast<std::size_t>(i)]; }
  double& operator[](int i) noexcept { return p[static_cast<std::size_t>(i)]; }

  [[nodiscard]] double sum() const noexcept {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += p[static_cast<std::size_t>(i)];
    return s;
  }

  [[nodiscard]] double min() const noexcept {
    double m = 1.0;
    for (int i = 0; i < size(); ++i) m = std::min(m, p[static_cast<std::size_t>(i)]);
    return m;
  }

  /// Local drift sum_z p_z z.
  [[nodiscard]] Vec drift() const {
    Vec v(static_cast<std::size_t>(dim), 0.0);
    for (int a = 0; a < dim; ++a) v[static_cast<std::size_t>(a)] = p[2u * a] - p[2u * a + 1];
    return v;
  }

  /// Inverse-CDF draw of a step index from a uniform u in [0,1).
  [[nodiscard]] int sample(double u) const noexcept {
    const int n = size();
    double acc = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      acc += p[static_cast<std::size_t>(i)];
      if (u < acc) return i;
    }
    return n - 1;
  }

  friend bool operator==(const TransitionVector& a, const TransitionVector& b) noexcept {
    if (a.dim != b.dim) return false;
    for (int i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return false;
    return true;
  }
};

}  // namespace rwre
