#pragma once

#include <vector>

#include "rwre/walk.hpp"

namespace rwre::testing {

/// Quadratic reference: every j in [1, n - horizon] with
/// level(i) < level(j) <= level(k) for all i < j < k <= n.
inline std::vector<std::size_t> literal_regenerations(const PathRecord& path, const Vec& u, std::size_t horizon) {
  const auto lv = path.levels(u);
  const std::size_t n = path.length();
  std::vector<std::size_t> out;
  if (n < horizon + 1) return out;
  for (std::size_t j = 1; j <= n - horizon; ++j) {
    bool ok = true;
    for (std::size_t i = 0; i < j && ok; ++i) ok = lv[i] < lv[j];
    for (std::size_t k = j + 1; k <= n && ok; ++k) ok = lv[j] <= lv[k];
    if (ok) out.push_back(j);
  }
  return out;
}

}  // namespace rwre::testing
