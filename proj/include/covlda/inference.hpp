#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "covlda/density.hpp"
#include "covlda/samplers.hpp"
#include "covlda/state.hpp"
#include "covlda/types.hpp"
#include "covlda/vanilla.hpp"

namespace covlda {

enum class FitMode { two_stage, joint };

inline std::string to_string(FitMode m) {
  return m == FitMode::joint ? "joint" : "two-stage";
}

using ProgressCallback = std::function<void(int iteration, double logdens)>;

struct FitConfig {
  FitMode mode = FitMode::two_stage;
  int iters = 5000, burnin = 2500, thin = 5;
  std::uint64_t seed = 1;
  Hyperparams hp;
  SliceConfig slice;
  VanillaConfig stage1;    // two-stage only
  int stage2_inner = 20;   // slice refreshes per retained composition draw
  int threads = 1;
  bool random_scan = false;  // shuffle token and coordinate visit order
  ProgressCallback progress;

  void validate(std::size_t n_categories) const {
    if (iters < 1 || burnin < 0 || burnin >= iters || thin < 1)
      throw std::invalid_argument("FitConfig: need 0 <= burnin < iters and thin >= 1");
    hp.validate(n_categories);
    slice.validate();
    if (stage2_inner < 1)
      throw std::invalid_argument("FitConfig: stage2_inner must be >= 1");
    if (threads < 1)
      throw std::invalid_argument("FitConfig: threads must be >= 1");
  }

  // Stage-1 settings mirroring this configuration.
  VanillaConfig stage1_defaults() const {
    VanillaConfig v;
    v.max_clusters = hp.n_clusters;
    v.alpha = 0.1;
    v.gamma = hp.gamma;
    v.iters = iters;
    v.burnin = burnin;
    v.thin = thin;
    v.seed = seed;
    return v;
  }
};

namespace detail {

inline void accumulate_theta(const IntMatrix& cluster_counts, Matrix& theta_sum,
                             std::vector<std::uint8_t>& degenerate) {
  for (std::size_t l = 0; l < cluster_counts.rows(); ++l) {
    bool flag = false;
    const auto theta = theta_from_counts(cluster_counts.row(l), &flag);
    if (flag) degenerate[l] = 1;
    for (std::size_t k = 0; k < theta.size(); ++k) theta_sum(l, k) += theta[k];
  }
}

}  // namespace detail

// Full Gibbs cycle: collapsed token sweep, conjugate composition rows, then
// slice updates of the coefficients and the overdispersion.
inline Trace run_joint(const CountData& data, const CovariateMatrix& covariates,
                       const FitConfig& cfg) {
  data.validate();
  cfg.validate(data.n_categories());
  covariates.validate(data.n_instances());
  const int K = cfg.hp.n_clusters;
  const std::size_t L = data.n_instances();
  const std::size_t S = data.n_categories();
  const std::size_t d = covariates.dim();

  Rng rng(cfg.seed);
  LatentState state(data, K);
  state.randomize_assignments(rng);

  ModelParams params;
  params.beta = Matrix(K, d, 0.0);
  params.n_disp = cfg.hp.n_upper / 2.0;
  params.phi = Matrix(K, S);
  std::vector<int> counts_col(S);
  for (int k = 0; k < K; ++k) {
    for (std::size_t s = 0; s < S; ++s)
      counts_col[s] = state.category_counts()(s, k);
    const auto row = sample_phi_row(counts_col, cfg.hp.gamma, rng);
    std::copy(row.begin(), row.end(), params.phi.row(k).begin());
  }

  Trace trace;
  trace.logdens.reserve(cfg.iters);
  trace.theta_mean = Matrix(L, K, 0.0);
  trace.theta_degenerate.assign(L, 0);
  long clamp_events = 0;

  for (int it = 1; it <= cfg.iters; ++it) {
    sample_z_sweep(state, params.beta, params.n_disp, covariates, cfg.hp, rng,
                   cfg.random_scan);
#ifndef NDEBUG
    state.verify_conservation(data);
#endif
    for (int k = 0; k < K; ++k) {
      for (std::size_t s = 0; s < S; ++s)
        counts_col[s] = state.category_counts()(s, k);
      const auto row = sample_phi_row(counts_col, cfg.hp.gamma, rng);
      std::copy(row.begin(), row.end(), params.phi.row(k).begin());
    }
    sample_beta(state, params.beta, params.n_disp, covariates, cfg.hp,
                cfg.slice, rng, &clamp_events, cfg.threads, cfg.random_scan);
    params.n_disp = sample_overdispersion(state, params.beta, covariates,
                                          cfg.hp, cfg.slice, params.n_disp,
                                          rng, &clamp_events);
    const double ld = joint_log_density(state, params, data, covariates, cfg.hp);
    trace.logdens.push_back(ld);
    if (cfg.progress) cfg.progress(it, ld);
    if (it > cfg.burnin && (it - cfg.burnin) % cfg.thin == 0) {
      state.verify_conservation(data);
      trace.phi_draws.push_back(params.phi);
      trace.beta_draws.push_back(params.beta);
      trace.n_draws.push_back(params.n_disp);
      detail::accumulate_theta(state.cluster_counts(), trace.theta_mean,
                               trace.theta_degenerate);
    }
  }

  const std::size_t retained = trace.n_retained();
  if (retained > 0)
    for (double& v : trace.theta_mean.data()) v /= static_cast<double>(retained);

  trace.meta = TraceMeta{to_string(FitMode::joint), cfg.iters,   cfg.burnin,
                         cfg.thin,                  cfg.seed,    K,
                         L,                         S,           d,
                         clamp_events,              0};
  return trace;
}

// Two-stage estimation: the composition and latent counts come from the
// covariate-free sampler; the regression coefficients and overdispersion are
// refreshed against each retained count snapshot.
inline Trace run_two_stage(const CountData& data,
                           const CovariateMatrix& covariates,
                           const FitConfig& cfg) {
  data.validate();
  cfg.validate(data.n_categories());
  covariates.validate(data.n_instances());
  const int K = cfg.hp.n_clusters;
  const std::size_t L = data.n_instances();
  const std::size_t S = data.n_categories();
  const std::size_t d = covariates.dim();

  VanillaConfig stage1 = cfg.stage1;
  if (stage1.gamma.empty()) stage1 = cfg.stage1_defaults();
  if (stage1.max_clusters != K)
    throw std::invalid_argument("run_two_stage: stage-1 cluster count differs from hp.n_clusters");
  stage1.validate(S);

  Rng rng(cfg.seed);
  Rng stage1_rng = rng.spawn();
  Rng stage2_rng = rng.spawn();

  VanillaResult stage1_result = run_vanilla(data, stage1, stage1_rng);
  if (cfg.progress) {
    const auto& ld = stage1_result.logdens;
    for (std::size_t i = 0; i < ld.size(); ++i)
      cfg.progress(static_cast<int>(i) + 1, ld[i]);
  }

  Trace trace;
  trace.logdens = stage1_result.logdens;
  trace.theta_mean = Matrix(L, K, 0.0);
  trace.theta_degenerate.assign(L, 0);
  long clamp_events = 0;

  Matrix beta(K, d, 0.0);
  double n_disp = cfg.hp.n_upper / 2.0;
  for (const IntMatrix& snapshot : stage1_result.count_snapshots) {
    for (int inner = 0; inner < cfg.stage2_inner; ++inner) {
      sample_beta(snapshot, beta, n_disp, covariates, cfg.hp, cfg.slice,
                  stage2_rng, &clamp_events, cfg.threads, cfg.random_scan);
      n_disp = sample_overdispersion(snapshot, beta, covariates, cfg.hp,
                                     cfg.slice, n_disp, stage2_rng,
                                     &clamp_events);
    }
    trace.beta_draws.push_back(beta);
    trace.n_draws.push_back(n_disp);
    detail::accumulate_theta(snapshot, trace.theta_mean,
                             trace.theta_degenerate);
  }
  trace.phi_draws = std::move(stage1_result.phi_draws);

  const std::size_t retained = trace.n_retained();
  if (retained > 0)
    for (double& v : trace.theta_mean.data()) v /= static_cast<double>(retained);

  trace.meta = TraceMeta{to_string(FitMode::two_stage), cfg.iters, cfg.burnin,
                         cfg.thin,                      cfg.seed,  K,
                         L,                             S,         d,
                         clamp_events,                  cfg.stage2_inner};
  return trace;
}

inline Trace run_fit(const CountData& data, const CovariateMatrix& covariates,
                     const FitConfig& cfg) {
  return cfg.mode == FitMode::joint ? run_joint(data, covariates, cfg)
                                    : run_two_stage(data, covariates, cfg);
}

// Crude stationarity diagnostics over the log-density series.
struct ConvergenceSummary {
  std::vector<double> running_mean;
  double first_half_mean = 0.0;
  double second_half_mean = 0.0;
  double split_diff = 0.0;      // second minus first half mean
  double second_half_se = 0.0;  // batch-means standard error
  bool stationary = false;      // |split_diff| < 2 se
};

inline ConvergenceSummary convergence_summary(std::span<const double> logdens) {
  if (logdens.empty())
    throw std::invalid_argument("convergence_summary: empty series");
  ConvergenceSummary out;
  out.running_mean.resize(logdens.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logdens.size(); ++i) {
    acc += logdens[i];
    out.running_mean[i] = acc / static_cast<double>(i + 1);
  }
  const std::size_t half = logdens.size() / 2;
  const std::size_t n2 = logdens.size() - half;
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < half; ++i) m1 += logdens[i];
  for (std::size_t i = half; i < logdens.size(); ++i) m2 += logdens[i];
  out.first_half_mean = half > 0 ? m1 / half : 0.0;
  out.second_half_mean = m2 / n2;
  out.split_diff = out.second_half_mean - out.first_half_mean;

  // batch means absorb autocorrelation in the series
  const std::size_t n_batches = std::min<std::size_t>(10, std::max<std::size_t>(1, n2 / 2));
  const std::size_t batch = n2 / n_batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < n_batches && batch > 0; ++b) {
    double m = 0.0;
    for (std::size_t i = 0; i < batch; ++i) m += logdens[half + b * batch + i];
    means.push_back(m / batch);
  }
  if (means.size() > 1) {
    double mm = 0.0;
    for (double m : means) mm += m;
    mm /= means.size();
    double var = 0.0;
    for (double m : means) var += (m - mm) * (m - mm);
    var /= (means.size() - 1);
    out.second_half_se = std::sqrt(var / means.size());
  }
  out.stationary = std::abs(out.split_diff) < 2.0 * out.second_half_se ||
                   out.split_diff == 0.0;
  return out;
}

inline ConvergenceSummary convergence_summary(const Trace& trace) {
  return convergence_summary(std::span<const double>(trace.logdens));
}

}  // namespace covlda
