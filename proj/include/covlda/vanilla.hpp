#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "covlda/matrix.hpp"
#include "covlda/rng.hpp"
#include "covlda/samplers.hpp"
#include "covlda/state.hpp"
#include "covlda/types.hpp"

namespace covlda {

// Covariate-free collapsed sampler used for the composition stage and for
// cluster-count guidance.
struct VanillaConfig {
  int max_clusters = 10;
  double alpha = 0.1;  // symmetric Dirichlet concentration on the proportions
  std::vector<double> gamma;
  int iters = 5000, burnin = 2500, thin = 5;
  std::uint64_t seed = 1;
  // Start every token in cluster 0 and let additional clusters nucleate only
  // where the composition evidence supports them. A uniform-random start
  // seeds duplicated clusters that the collapsed sweep cannot merge (the
  // merge force shrinks like gamma over the cluster size), which defeats
  // occupancy-based cluster-count guidance.
  bool single_cluster_init = true;
  // Independent chains; the one with the highest mean retained log joint is
  // kept. The collapsed chain is multimodal and a single run can lock two
  // planted clusters together.
  int restarts = 3;

  void validate(std::size_t n_categories) const {
    if (max_clusters < 1)
      throw std::invalid_argument("VanillaConfig: max_clusters must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("VanillaConfig: alpha must be positive");
    if (gamma.size() != n_categories)
      throw std::invalid_argument("VanillaConfig: gamma length != category count");
    for (double g : gamma)
      if (!(g > 0.0))
        throw std::invalid_argument("VanillaConfig: gamma entries must be positive");
    if (iters < 1 || burnin < 0 || burnin >= iters || thin < 1)
      throw std::invalid_argument("VanillaConfig: need 0 <= burnin < iters and thin >= 1");
    if (restarts < 1)
      throw std::invalid_argument("VanillaConfig: restarts must be >= 1");
  }
};

// Collapsed token weights without covariates:
// (n_lk + alpha) (n_sk + gamma_s) / (n_k + sum gamma). Counts exclude the token.
inline std::vector<double> vanilla_z_weights(const LatentState& state,
                                             std::size_t l, std::size_t s,
                                             double alpha,
                                             std::span<const double> gamma) {
  const int K = state.n_clusters();
  const double gamma_s = gamma[s];
  double gamma_sum = 0.0;
  for (double g : gamma) gamma_sum += g;

  std::vector<double> w(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    w[k] = (state.cluster_counts()(l, k) + alpha) *
           (state.category_counts()(s, k) + gamma_s) /
           (state.totals()[k] + gamma_sum);
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

inline void vanilla_z_sweep(LatentState& state, double alpha,
                            std::span<const double> gamma, Rng& rng) {
  for (std::size_t l = 0; l < state.n_instances(); ++l) {
    const std::size_t n_tokens = state.tokens(l).size();
    for (std::size_t i = 0; i < n_tokens; ++i) {
      const Token t = state.detach_token(l, i);
      const auto w = vanilla_z_weights(state, l, t.category, alpha, gamma);
      state.attach_token(l, i, static_cast<int>(rng.categorical(w)));
    }
  }
}

// Collapsed log joint of assignments and data with both simplex blocks
// integrated out; the convergence series for covariate-free runs.
inline double vanilla_log_joint(const LatentState& state, double alpha,
                                std::span<const double> gamma) {
  const int K = state.n_clusters();
  double gamma_sum = 0.0;
  for (double g : gamma) gamma_sum += g;

  double v = 0.0;
  for (std::size_t l = 0; l < state.n_instances(); ++l) {
    v += std::lgamma(K * alpha) -
         std::lgamma(state.token_total(l) + K * alpha);
    for (int k = 0; k < K; ++k)
      v += std::lgamma(state.cluster_counts()(l, k) + alpha) -
           std::lgamma(alpha);
  }
  for (int k = 0; k < K; ++k) {
    v += std::lgamma(gamma_sum) - std::lgamma(state.totals()[k] + gamma_sum);
    for (std::size_t s = 0; s < state.n_categories(); ++s)
      v += std::lgamma(state.category_counts()(s, k) + gamma[s]) -
           std::lgamma(gamma[s]);
  }
  return v;
}

struct OccupancyReport {
  std::vector<double> fractions;   // sorted descending
  std::vector<int> cluster_order;  // cluster ids matching fractions
  int suggested_k = 0;
  double threshold = 0.01;
};

// Token-share per cluster; clusters above the threshold count toward the
// suggested cluster number.
inline OccupancyReport occupancy_report(const LatentState& state,
                                        double threshold = 0.01) {
  OccupancyReport rep;
  rep.threshold = threshold;
  const auto totals = state.totals();
  const double grand =
      std::accumulate(totals.begin(), totals.end(), 0.0);
  rep.cluster_order.resize(totals.size());
  std::iota(rep.cluster_order.begin(), rep.cluster_order.end(), 0);
  std::stable_sort(rep.cluster_order.begin(), rep.cluster_order.end(),
                   [&](int a, int b) { return totals[a] > totals[b]; });
  rep.fractions.reserve(totals.size());
  for (int k : rep.cluster_order)
    rep.fractions.push_back(grand > 0.0 ? totals[k] / grand : 0.0);
  for (double f : rep.fractions)
    if (f > threshold) ++rep.suggested_k;
  return rep;
}

struct VanillaResult {
  std::vector<Matrix> phi_draws;           // retained composition draws
  std::vector<IntMatrix> count_snapshots;  // retained instance-by-cluster counts
  std::vector<double> logdens;             // per iteration
  LatentState final_state;
  OccupancyReport occupancy;
};

namespace detail {

inline VanillaResult run_vanilla_chain(const CountData& data,
                                       const VanillaConfig& cfg, Rng& rng) {
  const int K = cfg.max_clusters;
  const std::size_t S = data.n_categories();

  LatentState state(data, K);
  if (cfg.single_cluster_init)
    state.assign_all(0);
  else
    state.randomize_assignments(rng);

  std::vector<Matrix> phi_draws;
  std::vector<IntMatrix> snapshots;
  std::vector<double> logdens;
  logdens.reserve(cfg.iters);
  const std::size_t keep =
      static_cast<std::size_t>((cfg.iters - cfg.burnin) / cfg.thin);
  phi_draws.reserve(keep);
  snapshots.reserve(keep);

  std::vector<int> counts_col(S);
  for (int it = 1; it <= cfg.iters; ++it) {
    vanilla_z_sweep(state, cfg.alpha, cfg.gamma, rng);
    logdens.push_back(vanilla_log_joint(state, cfg.alpha, cfg.gamma));
    if (it > cfg.burnin && (it - cfg.burnin) % cfg.thin == 0) {
      Matrix phi(K, S);
      for (int k = 0; k < K; ++k) {
        for (std::size_t s = 0; s < S; ++s)
          counts_col[s] = state.category_counts()(s, k);
        const auto row = sample_phi_row(counts_col, cfg.gamma, rng);
        std::copy(row.begin(), row.end(), phi.row(k).begin());
      }
      phi_draws.push_back(std::move(phi));
      snapshots.push_back(state.cluster_counts());
      state.verify_conservation(data);
    }
  }

  OccupancyReport occ = occupancy_report(state);
  return VanillaResult{std::move(phi_draws), std::move(snapshots),
                       std::move(logdens), std::move(state), std::move(occ)};
}

}  // namespace detail

inline VanillaResult run_vanilla(const CountData& data,
                                 const VanillaConfig& cfg, Rng& rng) {
  data.validate();
  cfg.validate(data.n_categories());

  std::optional<VanillaResult> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng chain_rng = rng.spawn();
    VanillaResult result = detail::run_vanilla_chain(data, cfg, chain_rng);
    double score = 0.0;
    for (int it = cfg.burnin; it < cfg.iters; ++it) score += result.logdens[it];
    score /= static_cast<double>(cfg.iters - cfg.burnin);
    if (score > best_score) {
      best_score = score;
      best.emplace(std::move(result));
    }
  }
  return std::move(*best);
}

}  // namespace covlda
