#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "covlda/errors.hpp"
#include "covlda/rng.hpp"

namespace covlda {

struct SliceConfig {
  double width = 1.0;       // initial bracket width
  int max_expansions = 100; // stepping-out budget, split randomly between sides
  std::optional<double> lower{};  // open support bounds
  std::optional<double> upper{};

  void validate() const {
    if (!(width > 0.0) || !std::isfinite(width))
      throw std::invalid_argument("SliceConfig: width must be positive");
    if (max_expansions < 0)
      throw std::invalid_argument("SliceConfig: max_expansions must be >= 0");
    if (lower && upper && !(*lower < *upper))
      throw std::invalid_argument("SliceConfig: lower must be below upper");
  }
};

// One univariate slice-sampling update (Neal 2003): draw a height under the
// log target at x0, step the bracket out until both ends leave the slice or
// the expansion budget runs out, then shrink toward x0 until a point inside
// the slice is found. Leaves the target distribution invariant.
template <typename LogTarget>
double slice_sample(LogTarget&& log_target, double x0, const SliceConfig& cfg,
                    Rng& rng) {
  cfg.validate();
  const double inf = std::numeric_limits<double>::infinity();
  const double lo = cfg.lower.value_or(-inf);
  const double hi = cfg.upper.value_or(inf);
  if (!(x0 > lo && x0 < hi))
    throw std::invalid_argument("slice_sample: x0 outside the support");

  auto eval = [&](double x) -> double {
    if (!(x > lo && x < hi)) return -inf;
    const double f = log_target(x);
    if (std::isnan(f)) throw NumericalError("slice_sample: target returned NaN");
    return f;
  };

  const double f0 = log_target(x0);
  if (!std::isfinite(f0))
    throw std::invalid_argument("slice_sample: log target not finite at x0");

  double u;
  do {
    u = rng.uniform01();
  } while (u <= 0.0);
  const double level = f0 + std::log(u);

  // initial bracket, randomly positioned around x0
  double left = x0 - rng.uniform01() * cfg.width;
  double right = left + cfg.width;
  int left_budget = static_cast<int>(rng.uniform01() * (cfg.max_expansions + 1));
  int right_budget = cfg.max_expansions - left_budget;
  while (left_budget > 0 && left > lo && eval(left) > level) {
    left -= cfg.width;
    --left_budget;
  }
  while (right_budget > 0 && right < hi && eval(right) > level) {
    right += cfg.width;
    --right_budget;
  }
  if (left < lo) left = lo;
  if (right > hi) right = hi;

  // shrink toward x0
  for (;;) {
    const double x1 = left + rng.uniform01() * (right - left);
    if (eval(x1) > level) return x1;
    if (x1 < x0)
      left = x1;
    else
      right = x1;
    if (!(right - left >= 1e-12))
      throw NumericalError("slice_sample: bracket collapsed without acceptance");
  }
}

}  // namespace covlda
