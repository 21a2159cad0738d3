#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "covlda/errors.hpp"

namespace covlda {

// splitmix64 finalizer, used to decorrelate seeds of spawned streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seedable random stream. All variate transforms are implemented here rather
// than through std distributions so that a given seed produces the same
// sequence under every standard library. spawn() derives an independent child
// stream; the parent advances by exactly one draw, so chains and per-row
// branches stay reproducible no matter how the children are consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  Rng spawn() { return Rng(next_u64()); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Box-Muller, cosine branch only.
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Marsaglia-Tsang for shape >= 1; boosting trick below 1. Unit scale.
  double gamma(double shape) {
    if (!(shape > 0.0))
      throw std::invalid_argument("Rng::gamma: shape must be positive");
    if (shape < 1.0) {
      double u;
      do {
        u = uniform01();
      } while (u <= 0.0);
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u;
      do {
        u = uniform01();
      } while (u <= 0.0);
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
        return d * v;
    }
  }

  // Dirichlet draw with the given concentration; entries floored away from
  // exact zero so downstream log densities stay finite.
  void dirichlet(std::span<const double> concentration,
                 std::span<double> out) {
    if (concentration.size() != out.size())
      throw std::invalid_argument("Rng::dirichlet: size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      double g = gamma(concentration[i]);
      if (g < 1e-300) g = 1e-300;
      out[i] = g;
      total += g;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= total;
  }

  // Index draw proportional to non-negative weights (need not be normalized).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0))
        throw std::invalid_argument("Rng::categorical: negative weight");
      total += w;
    }
    if (!(total > 0.0) || !std::isfinite(total))
      throw NumericalError("Rng::categorical: weights do not sum to a positive value");
    double u = uniform01() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last_positive = i;
      acc += weights[i];
      if (u < acc) return i;
    }
    return last_positive;
  }

  // Poisson; Knuth's product method, halving recursively for large means so
  // the uniform product never underflows.
  long poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
      throw std::invalid_argument("Rng::poisson: bad mean");
    if (mean == 0.0) return 0;
    if (mean > 60.0) {
      const double half = 0.5 * mean;
      return poisson(half) + poisson(mean - half);
    }
    const double limit = std::exp(-mean);
    long n = -1;
    double prod = 1.0;
    do {
      prod *= uniform01();
      ++n;
    } while (prod > limit);
    return n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace covlda
