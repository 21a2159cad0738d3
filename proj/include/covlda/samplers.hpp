#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <thread>
#include <vector>

#include "covlda/density.hpp"
#include "covlda/errors.hpp"
#include "covlda/matrix.hpp"
#include "covlda/rng.hpp"
#include "covlda/slice.hpp"
#include "covlda/state.hpp"
#include "covlda/types.hpp"

namespace covlda {

// Linear predictors are capped here before exponentiation inside slice
// targets, where proposals can wander arbitrarily far before rejection.
inline constexpr double kEtaClamp = 700.0;

// Conjugate update of one composition row: Dirichlet(counts + gamma).
inline std::vector<double> sample_phi_row(std::span<const int> category_counts,
                                          std::span<const double> gamma,
                                          Rng& rng) {
  if (category_counts.size() != gamma.size())
    throw std::invalid_argument("sample_phi_row: size mismatch");
  std::vector<double> conc(gamma.size());
  for (std::size_t s = 0; s < gamma.size(); ++s) {
    if (!(gamma[s] > 0.0))
      throw std::invalid_argument("sample_phi_row: gamma must be positive");
    if (category_counts[s] < 0)
      throw std::invalid_argument("sample_phi_row: negative count");
    conc[s] = category_counts[s] + gamma[s];
  }
  std::vector<double> row(gamma.size());
  rng.dirichlet(conc, row);
  return row;
}

// Log full conditional of one coefficient coordinate, as a function of the
// substituted value with the other coordinates held fixed. Terms that do not
// involve the coordinate (the count factorials and the size-only gamma
// functions of the negative binomial) are dropped.
inline double beta_log_fcd(std::span<const double> beta_row, std::size_t coord,
                           double value, std::span<const int> cluster_counts,
                           const CovariateMatrix& covariates, double n_disp,
                           double prior_var, long* clamp_events = nullptr) {
  const std::size_t d = covariates.dim();
  if (beta_row.size() != d)
    throw std::invalid_argument("beta_log_fcd: coefficient length mismatch");
  if (coord >= d) throw std::invalid_argument("beta_log_fcd: coordinate out of range");
  if (cluster_counts.size() != covariates.n_instances())
    throw std::invalid_argument("beta_log_fcd: count vector length mismatch");
  if (!(n_disp > 0.0) || !(prior_var > 0.0))
    throw std::invalid_argument("beta_log_fcd: n_disp and prior_var must be positive");

  double v = -value * value / (2.0 * prior_var);
  for (std::size_t l = 0; l < cluster_counts.size(); ++l) {
    const auto x = covariates.design.row(l);
    double eta = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      eta += x[j] * (j == coord ? value : beta_row[j]);
    if (eta > kEtaClamp) {
      eta = kEtaClamp;
      if (clamp_events) ++*clamp_events;
    }
    const double rate = std::exp(eta);
    const double n = cluster_counts[l];
    v += n * eta - (n + n_disp) * std::log(n_disp + rate);
  }
  if (std::isnan(v)) throw NumericalError("beta_log_fcd: non-finite result");
  return v;
}

namespace detail {

inline std::vector<std::size_t> scan_order(std::size_t n, bool randomize,
                                           Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (randomize)
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(rng.uniform01() * i) % i]);
  return order;
}

inline void sample_beta_row(std::span<const int> counts_col,
                            std::span<double> beta_row,
                            const CovariateMatrix& covariates, double n_disp,
                            double prior_var, const SliceConfig& cfg, Rng& rng,
                            long* clamp_events, bool random_scan) {
  const auto order = scan_order(beta_row.size(), random_scan, rng);
  for (const std::size_t j : order) {
    auto target = [&](double v) {
      return beta_log_fcd(beta_row, j, v, counts_col, covariates, n_disp,
                          prior_var, clamp_events);
    };
    beta_row[j] = slice_sample(target, beta_row[j], cfg, rng);
  }
}

inline void run_chunked(int n_items, int threads, auto&& body) {
  if (threads <= 1 || n_items <= 1) {
    for (int i = 0; i < n_items; ++i) body(i);
    return;
  }
  const int used = std::min(threads, n_items);
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (int t = 0; t < used; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < n_items; i += used) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// One coordinate-wise slice pass over every coefficient row. Rows are
// conditionally independent given the counts; each row gets its own child
// stream, so the result does not depend on the thread count. The coordinate
// scan is in fixed order unless random_scan is set.
inline void sample_beta(const IntMatrix& cluster_counts, Matrix& beta,
                        double n_disp, const CovariateMatrix& covariates,
                        const Hyperparams& hp, const SliceConfig& cfg,
                        Rng& rng, long* clamp_events = nullptr,
                        int threads = 1, bool random_scan = false) {
  const int K = static_cast<int>(beta.rows());
  if (cluster_counts.cols() != beta.rows())
    throw std::invalid_argument("sample_beta: cluster count mismatch");
  if (beta.cols() != covariates.dim())
    throw std::invalid_argument("sample_beta: covariate dimension mismatch");
  SliceConfig unbounded = cfg;
  unbounded.lower.reset();
  unbounded.upper.reset();

  std::vector<Rng> row_rngs;
  row_rngs.reserve(K);
  for (int k = 0; k < K; ++k) row_rngs.push_back(rng.spawn());
  std::vector<long> row_clamps(K, 0);

  detail::run_chunked(K, threads, [&](int k) {
    std::vector<int> counts_col(cluster_counts.rows());
    for (std::size_t l = 0; l < cluster_counts.rows(); ++l)
      counts_col[l] = cluster_counts(l, k);
    detail::sample_beta_row(counts_col, beta.row(k), covariates, n_disp,
                            hp.prior_var, unbounded, row_rngs[k],
                            &row_clamps[k], random_scan);
  });
  if (clamp_events)
    for (long c : row_clamps) *clamp_events += c;
}

inline void sample_beta(const LatentState& state, Matrix& beta, double n_disp,
                        const CovariateMatrix& covariates,
                        const Hyperparams& hp, const SliceConfig& cfg,
                        Rng& rng, long* clamp_events = nullptr,
                        int threads = 1, bool random_scan = false) {
  sample_beta(state.cluster_counts(), beta, n_disp, covariates, hp, cfg, rng,
              clamp_events, threads, random_scan);
}

// One slice update of the overdispersion on its uniform-prior support.
inline double sample_overdispersion(const IntMatrix& cluster_counts,
                                    const Matrix& beta,
                                    const CovariateMatrix& covariates,
                                    const Hyperparams& hp,
                                    const SliceConfig& cfg, double current,
                                    Rng& rng, long* clamp_events = nullptr) {
  const std::size_t L = cluster_counts.rows();
  const std::size_t K = cluster_counts.cols();
  if (beta.rows() != K || beta.cols() != covariates.dim() ||
      covariates.n_instances() != L)
    throw std::invalid_argument("sample_overdispersion: shape mismatch");

  Matrix rates(L, K);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < K; ++k) {
      double eta = dot(covariates.design.row(l), beta.row(k));
      if (eta > kEtaClamp) {
        eta = kEtaClamp;
        if (clamp_events) ++*clamp_events;
      }
      rates(l, k) = std::exp(eta);
    }

  auto target = [&](double size) {
    double v = 0.0;
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t k = 0; k < K; ++k)
        v += nb_log_pmf(cluster_counts(l, k), rates(l, k), size);
    return v;
  };
  SliceConfig bounded = cfg;
  bounded.lower = 0.0;
  bounded.upper = hp.n_upper;
  return slice_sample(target, current, bounded, rng);
}

inline double sample_overdispersion(const LatentState& state,
                                    const Matrix& beta,
                                    const CovariateMatrix& covariates,
                                    const Hyperparams& hp,
                                    const SliceConfig& cfg, double current,
                                    Rng& rng, long* clamp_events = nullptr) {
  return sample_overdispersion(state.cluster_counts(), beta, covariates, hp,
                               cfg, current, rng, clamp_events);
}

// Categorical weights for reassigning one token of category s in instance l.
// All counts must already exclude the token. p_lk holds the per-cluster
// success probabilities n_disp / (n_disp + rate_lk). Computed in log space
// and max-subtracted before normalization.
inline std::vector<double> z_fcd_weights(const LatentState& state,
                                         std::size_t l, std::size_t s,
                                         std::span<const double> p_lk,
                                         double n_disp,
                                         const Hyperparams& hp) {
  const int K = state.n_clusters();
  if (p_lk.size() != static_cast<std::size_t>(K))
    throw std::invalid_argument("z_fcd_weights: p vector length mismatch");
  const double gamma_s = hp.gamma[s];
  const double gamma_sum = hp.gamma_sum();

  std::vector<double> logw(K);
  double max_logw = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double lw = std::log(state.cluster_counts()(l, k) + n_disp) +
                      std::log(state.category_counts()(s, k) + gamma_s) -
                      std::log(state.category_cluster_count(l, s, k) + 1.0) -
                      std::log(state.totals()[k] + gamma_sum) +
                      std::log1p(-p_lk[k]);
    logw[k] = lw;
    max_logw = std::max(max_logw, lw);
  }
  if (!std::isfinite(max_logw))
    throw NumericalError("z_fcd_weights: all weights vanished");
  double total = 0.0;
  std::vector<double> w(K);
  for (int k = 0; k < K; ++k) {
    w[k] = std::exp(logw[k] - max_logw);
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

// One full collapsed sweep: every token is detached, reweighted, and
// reattached in fixed instance-major, token order (shuffled per instance
// when random_scan is set).
inline void sample_z_sweep(LatentState& state, const Matrix& beta,
                           double n_disp, const CovariateMatrix& covariates,
                           const Hyperparams& hp, Rng& rng,
                           bool random_scan = false) {
  const std::size_t L = state.n_instances();
  const std::size_t K = state.n_clusters();
  if (beta.rows() != K || beta.cols() != covariates.dim() ||
      covariates.n_instances() != L)
    throw std::invalid_argument("sample_z_sweep: shape mismatch");

  // rates are fixed for the whole sweep
  Matrix p(L, K);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < K; ++k) {
      const double rate =
          compute_lambda(covariates.design.row(l), beta.row(k));
      p(l, k) = n_disp / (n_disp + rate);
    }

  for (std::size_t l = 0; l < L; ++l) {
    const auto order =
        detail::scan_order(state.tokens(l).size(), random_scan, rng);
    for (const std::size_t i : order) {
      const Token t = state.detach_token(l, i);
      const auto w = z_fcd_weights(state, l, t.category, p.row(l), n_disp, hp);
      state.attach_token(l, i, static_cast<int>(rng.categorical(w)));
    }
  }
}

}  // namespace covlda
