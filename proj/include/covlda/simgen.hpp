#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "covlda/density.hpp"
#include "covlda/matrix.hpp"
#include "covlda/rng.hpp"
#include "covlda/types.hpp"

namespace covlda {

// A generated dataset with its full ground truth retained for scoring.
struct SimTruth {
  Matrix phi_true;    // clusters x categories
  Matrix beta_true;   // clusters x (1 + clusters)
  Matrix theta_true;  // instances x clusters
  std::vector<std::uint8_t> theta_degenerate;
  std::vector<int> latent_counts;  // instances x categories x clusters, flat
  std::vector<std::uint8_t> pure_instances;  // unit-proportion rows
  std::vector<int> anchor_categories;  // cluster-major single-cluster categories
  int anchors_per_cluster = 1;
  CovariateMatrix covariates;
  CountData data;
  double sim_n_disp = 1000.0;
  std::uint64_t seed = 0;
  int sim_set = 1;

  int latent_count(std::size_t l, std::size_t s, std::size_t k) const {
    const std::size_t S = data.n_categories();
    const std::size_t K = phi_true.rows();
    return latent_counts[(l * S + s) * K + k];
  }
};

namespace detail {

inline std::string padded_label(const char* prefix, std::size_t i,
                                std::size_t total) {
  int width = 1;
  for (std::size_t t = total; t >= 10; t /= 10) ++width;
  if (width > 12) width = 12;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*llu", prefix, width,
                static_cast<unsigned long long>(i + 1));
  return buf;
}

// Negative binomial with mean `mean` and size `size` via its gamma-Poisson
// mixture representation.
inline long nb_draw(double mean, double size, Rng& rng) {
  if (mean <= 0.0) return 0;
  return rng.poisson(rng.gamma(size) * (mean / size));
}

inline void multinomial_split(long n, std::span<const double> probs,
                              std::span<int> out, Rng& rng) {
  for (auto& v : out) v = 0;
  for (long i = 0; i < n; ++i) ++out[rng.categorical(probs)];
}

struct SimDesign {
  Matrix beta;         // with the generating slope identity block
  Matrix phi;          // anchored compositions
  Matrix design;       // generating covariates, intercept first
  std::vector<std::uint8_t> pure;
  std::vector<int> anchors;  // cluster-major list of single-cluster categories
  int anchors_per_cluster = 1;
};

// Shared generating mechanism: identity slopes, a block of anchor categories
// owned by each cluster, and a subset of instances loading on a single
// cluster.
inline SimDesign make_design(int L, int S, int K, Rng& rng, double pure_prob) {
  SimDesign d;
  d.beta = Matrix(K, K + 1, 0.0);
  for (int k = 0; k < K; ++k) {
    d.beta(k, 0) = rng.uniform(1.5, 2.0);
    d.beta(k, k + 1) = 1.0;
  }

  d.anchors_per_cluster = std::max(1, std::min(5, S / (2 * K)));
  const int n_anchored = K * d.anchors_per_cluster;
  d.phi = Matrix(K, S, 0.0);
  d.anchors.reserve(n_anchored);
  std::vector<double> anchor_split(d.anchors_per_cluster);
  for (int k = 0; k < K; ++k) {
    for (int a = 0; a < d.anchors_per_cluster; ++a)
      d.anchors.push_back(k * d.anchors_per_cluster + a);
    const double anchor_mass =
        S == n_anchored ? 1.0 : rng.uniform(0.5, 0.65);
    double split_total = 0.0;
    for (auto& v : anchor_split) {
      v = 0.5 + rng.uniform01();
      split_total += v;
    }
    for (int a = 0; a < d.anchors_per_cluster; ++a)
      d.phi(k, k * d.anchors_per_cluster + a) =
          anchor_mass * anchor_split[a] / split_total;
    if (S == n_anchored) continue;
    double total = 0.0;
    std::vector<double> raw(S - n_anchored);
    for (auto& v : raw) {
      v = rng.gamma(0.3);
      if (v < 1e-300) v = 1e-300;
      total += v;
    }
    for (int s = n_anchored; s < S; ++s)
      d.phi(k, s) = (1.0 - anchor_mass) * raw[s - n_anchored] / total;
  }

  // Pure instances load on one cluster with the other rates driven to the
  // floor. Mixed instances activate one to three clusters strongly and keep
  // the rest near one expected element, so the proportion rows sweep the
  // simplex instead of hovering near its center.
  d.design = Matrix(L, K + 1, 0.0);
  d.pure.assign(L, 0);
  for (int l = 0; l < L; ++l) {
    d.design(l, 0) = 1.0;
    if (rng.uniform01() < pure_prob) {
      d.pure[l] = 1;
      const int own = static_cast<int>(rng.uniform01() * K) % K;
      for (int k = 0; k < K; ++k)
        d.design(l, k + 1) =
            (k == own) ? rng.uniform(0.5, 1.5) : rng.uniform(-6.0, -5.0);
    } else {
      const double u = rng.uniform01();
      int n_active = u < 0.45 ? 1 : (u < 0.8 ? 2 : 3);
      if (n_active > K) n_active = K;
      std::vector<int> order(K);
      for (int k = 0; k < K; ++k) order[k] = k;
      for (int k = K - 1; k > 0; --k)
        std::swap(order[k],
                  order[static_cast<int>(rng.uniform01() * (k + 1)) % (k + 1)]);
      for (int k = 0; k < K; ++k)
        d.design(l, order[k] + 1) = k < n_active ? rng.uniform(0.3, 2.5)
                                                 : rng.uniform(-3.2, -2.6);
    }
  }
  return d;
}

inline SimTruth generate(int L, int S, int K, std::uint64_t seed, int sim_set,
                         double nb_scale) {
  if (L < 1 || K < 1 || S < K)
    throw std::invalid_argument("simulate: need L >= 1 and S >= K >= 1");
  if (!(nb_scale > 0.0))
    throw std::invalid_argument("simulate: nb_scale must be positive");
  Rng rng(seed);
  const SimDesign design = make_design(L, S, K, rng, 0.3);
  const double sim_size = 1000.0 * nb_scale;

  SimTruth truth;
  truth.sim_set = sim_set;
  truth.seed = seed;
  truth.sim_n_disp = sim_size;
  truth.phi_true = design.phi;
  truth.anchor_categories = design.anchors;
  truth.anchors_per_cluster = design.anchors_per_cluster;
  truth.pure_instances = design.pure;
  truth.latent_counts.assign(static_cast<std::size_t>(L) * S * K, 0);
  truth.theta_true = Matrix(L, K, 0.0);
  truth.theta_degenerate.assign(L, 0);

  IntMatrix counts(L, S, 0);
  std::vector<int> split(S);
  std::vector<int> abundances(K);
  for (int l = 0; l < L; ++l) {
    for (;;) {
      long total = 0;
      for (int k = 0; k < K; ++k) {
        // a pure instance carries its other clusters at the zero-rate limit
        if (design.pure[l] && design.design(l, k + 1) < 0.0) {
          abundances[k] = 0;
          continue;
        }
        const double rate =
            compute_lambda(design.design.row(l), design.beta.row(k));
        abundances[k] = static_cast<int>(nb_draw(rate, sim_size, rng));
        total += abundances[k];
      }
      if (total > 0 || !design.pure[l]) break;  // pure rows must stay unit rows
    }
    for (int k = 0; k < K; ++k) {
      multinomial_split(abundances[k], design.phi.row(k), split, rng);
      for (int s = 0; s < S; ++s) {
        truth.latent_counts[(static_cast<std::size_t>(l) * S + s) * K + k] =
            split[s];
        counts(l, s) += split[s];
      }
    }
    bool degenerate = false;
    const auto theta = theta_from_counts(abundances, &degenerate);
    if (degenerate) truth.theta_degenerate[l] = 1;
    for (int k = 0; k < K; ++k) truth.theta_true(l, k) = theta[k];
  }

  truth.data.counts = std::move(counts);
  for (int s = 0; s < S; ++s)
    truth.data.category_names.push_back(padded_label("cat_", s, S));
  for (int l = 0; l < L; ++l)
    truth.data.instance_ids.push_back(padded_label("inst_", l, L));
  truth.data.validate();

  truth.covariates.has_intercept = true;
  truth.covariates.column_names.push_back("intercept");
  for (int k = 0; k < K; ++k)
    truth.covariates.column_names.push_back(padded_label("Var", k, K));

  if (sim_set == 1) {
    truth.beta_true = design.beta;
    truth.covariates.design = design.design;
  } else {
    // emitted covariates are fresh noise, unrelated to the counts
    truth.beta_true = Matrix(K, K + 1, 0.0);
    for (int k = 0; k < K; ++k) truth.beta_true(k, 0) = design.beta(k, 0);
    truth.covariates.design = Matrix(L, K + 1, 0.0);
    for (int l = 0; l < L; ++l) {
      truth.covariates.design(l, 0) = 1.0;
      for (int k = 0; k < K; ++k)
        truth.covariates.design(l, k + 1) = rng.normal();
    }
  }
  truth.covariates.validate(L);
  return truth;
}

}  // namespace detail

// Identity-slope design: each covariate explains exactly one cluster.
inline SimTruth simulate_set1(int L, int S, int K, std::uint64_t seed,
                              double nb_scale = 1.0) {
  return detail::generate(L, S, K, seed, 1, nb_scale);
}

// Null design: the emitted covariates are independent of the counts, so
// every slope's generating value is zero.
inline SimTruth simulate_set2(int L, int S, int K, std::uint64_t seed,
                              double nb_scale = 1.0) {
  return detail::generate(L, S, K, seed, 2, nb_scale);
}

}  // namespace covlda
