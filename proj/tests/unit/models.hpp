#pragma once

#include <initializer_list>

#include "rwre/rwre.hpp"

namespace rwre::testing {

inline TransitionVector tv(std::initializer_list<double> probs) {
  TransitionVector t(static_cast<int>(probs.size() / 2));
  int i = 0;
  for (double x : probs) t[i++] = x;
  return t;
}

/// d=1, p(+1) = 0.7.
inline EnvironmentModel classical_d1() { return make_model(1, 0.3, {tv({0.7, 0.3})}, {1.0}); }

/// d=1 symmetric two-component mixture (0.8/0.2, 0.2/0.8).
inline EnvironmentModel symmetric_d1() {
  return make_model(1, 0.2, {tv({0.8, 0.2}), tv({0.2, 0.8})}, {0.5, 0.5});
}

/// d=4 two-component nonnestling mixture.
inline EnvironmentModel mixture_d4() {
  return make_model(4, 0.05,
                    {tv({0.35, 0.10, 0.15, 0.10, 0.075, 0.075, 0.075, 0.075}),
                     tv({0.25, 0.10, 0.10, 0.15, 0.10, 0.10, 0.10, 0.10})},
                    {0.5, 0.5});
}

inline TransitionVector right_only(int d) {
  TransitionVector t(d);
  t[0] = 1.0;
  return t;
}

/// Always steps +e_1. Not elliptic, so built without make_model; callers pass
/// an explicit confirm horizon.
inline EnvironmentModel deterministic_right(int d) {
  return EnvironmentModel{d, 1.0 / (2.0 * d), SiteLawMixture{{right_only(d)}, {1.0}}};
}

}  // namespace rwre::testing
