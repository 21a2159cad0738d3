#pragma once

// Test-side reference implementations, written from the model definitions
// with product/summation formulas rather than the library's log-gamma code
// paths. These are deliberately slow and simple.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "covlda/covlda.hpp"

namespace oracle {

inline double log_factorial(long n) {
  double v = 0.0;
  for (long j = 2; j <= n; ++j) v += std::log(static_cast<double>(j));
  return v;
}

// log Gamma(x + n) - log Gamma(x) as a plain product.
inline double log_rising(double x, long n) {
  double v = 0.0;
  for (long j = 0; j < n; ++j) v += std::log(x + static_cast<double>(j));
  return v;
}

// Negative binomial log pmf built from pmf(0) = p^size and the term ratio
// pmf(n)/pmf(n-1) = (n-1+size)(1-p)/n.
inline double nb_log_pmf(long n, double mean, double size) {
  const double p = size / (size + mean);
  double v = size * std::log(p);
  for (long j = 1; j <= n; ++j)
    v += std::log(size + static_cast<double>(j - 1)) -
         std::log(static_cast<double>(j)) + std::log1p(-p);
  return v;
}

// Collapsed log joint of the covariate model with the composition rows
// integrated out, up to constants shared by every assignment of the same
// token multiset.
inline double collapsed_log_joint(const covlda::LatentState& state,
                                  const covlda::Matrix& rates,
                                  double n_disp,
                                  std::span<const double> gamma) {
  const int K = state.n_clusters();
  const std::size_t L = state.n_instances();
  const std::size_t S = state.n_categories();
  double gamma_sum = 0.0;
  for (double g : gamma) gamma_sum += g;

  double v = 0.0;
  for (std::size_t l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const long n = state.cluster_counts()(l, k);
      v += nb_log_pmf(n, rates(l, k), n_disp);
      v += log_factorial(n);
      for (std::size_t s = 0; s < S; ++s)
        v -= log_factorial(state.category_cluster_count(l, s, k));
    }
  for (int k = 0; k < K; ++k) {
    for (std::size_t s = 0; s < S; ++s)
      v += log_rising(gamma[s], state.category_counts()(s, k));
    v -= log_rising(gamma_sum, state.totals()[k]);
  }
  return v;
}

// Brute-force reassignment posterior for a detached token: place it in every
// cluster, score the full collapsed joint, normalize.
inline std::vector<double> z_posterior_brute_force(
    covlda::LatentState& state, std::size_t l, std::size_t token_idx,
    const covlda::Matrix& rates, double n_disp,
    std::span<const double> gamma) {
  const int K = state.n_clusters();
  std::vector<double> logj(K);
  for (int k = 0; k < K; ++k) {
    state.attach_token(l, token_idx, k);
    logj[k] = collapsed_log_joint(state, rates, n_disp, gamma);
    state.detach_token(l, token_idx);
  }
  double mx = logj[0];
  for (double v : logj) mx = std::max(mx, v);
  double total = 0.0;
  std::vector<double> w(K);
  for (int k = 0; k < K; ++k) {
    w[k] = std::exp(logj[k] - mx);
    total += w[k];
  }
  for (double& x : w) x /= total;
  return w;
}

// Collapsed log joint of the covariate-free sampler (token-level, both
// simplex blocks integrated out), up to constants.
inline double vanilla_collapsed_log_joint(const covlda::LatentState& state,
                                          double alpha,
                                          std::span<const double> gamma) {
  const int K = state.n_clusters();
  double gamma_sum = 0.0;
  for (double g : gamma) gamma_sum += g;
  double v = 0.0;
  for (std::size_t l = 0; l < state.n_instances(); ++l) {
    for (int k = 0; k < K; ++k)
      v += log_rising(alpha, state.cluster_counts()(l, k));
    v -= log_rising(K * alpha, state.token_total(l));
  }
  for (int k = 0; k < K; ++k) {
    for (std::size_t s = 0; s < state.n_categories(); ++s)
      v += log_rising(gamma[s], state.category_counts()(s, k));
    v -= log_rising(gamma_sum, state.totals()[k]);
  }
  return v;
}

inline std::vector<double> vanilla_z_posterior_brute_force(
    covlda::LatentState& state, std::size_t l, std::size_t token_idx,
    double alpha, std::span<const double> gamma) {
  const int K = state.n_clusters();
  std::vector<double> logj(K);
  for (int k = 0; k < K; ++k) {
    state.attach_token(l, token_idx, k);
    logj[k] = vanilla_collapsed_log_joint(state, alpha, gamma);
    state.detach_token(l, token_idx);
  }
  double mx = logj[0];
  for (double v : logj) mx = std::max(mx, v);
  double total = 0.0;
  std::vector<double> w(K);
  for (int k = 0; k < K; ++k) {
    w[k] = std::exp(logj[k] - mx);
    total += w[k];
  }
  for (double& x : w) x /= total;
  return w;
}

// Naive term-by-term log joint of the uncollapsed model.
inline double full_log_joint(const covlda::LatentState& state,
                             const covlda::ModelParams& params,
                             const covlda::CovariateMatrix& covariates,
                             const covlda::Hyperparams& hp) {
  const int K = state.n_clusters();
  const std::size_t L = state.n_instances();
  const std::size_t S = state.n_categories();
  double v = 0.0;
  for (std::size_t l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const long n = state.cluster_counts()(l, k);
      double mult = log_factorial(n);
      for (std::size_t s = 0; s < S; ++s) {
        const int c = state.category_cluster_count(l, s, k);
        mult -= log_factorial(c);
        if (c > 0) mult += c * std::log(params.phi(k, s));
      }
      double eta = 0.0;
      for (std::size_t j = 0; j < covariates.dim(); ++j)
        eta += covariates.design(l, j) * params.beta(k, j);
      v += mult + nb_log_pmf(n, std::exp(eta), params.n_disp);
    }
  for (int k = 0; k < K; ++k) {
    double conc_sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      v += (hp.gamma[s] - 1.0) * std::log(params.phi(k, s)) -
           std::lgamma(hp.gamma[s]);
      conc_sum += hp.gamma[s];
    }
    v += std::lgamma(conc_sum);
    for (std::size_t j = 0; j < covariates.dim(); ++j)
      v += -0.5 * std::log(2.0 * 3.14159265358979323846 * hp.prior_var) -
           params.beta(k, j) * params.beta(k, j) / (2.0 * hp.prior_var);
  }
  v -= std::log(hp.n_upper);
  return v;
}

// One-sample Kolmogorov-Smirnov statistic against an analytic cdf.
inline double ks_statistic(std::vector<double> draws,
                           const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

// Critical value at significance 0.001 (asymptotic Kolmogorov quantile with
// the Stephens small-sample correction).
inline double ks_critical_001(std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return 1.94947 / (rn + 0.12 + 0.11 / rn);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Gamma(shape 3, rate 1): closed form of the regularized incomplete gamma.
inline double gamma3_cdf(double x) {
  if (x <= 0.0) return 0.0;
  return 1.0 - std::exp(-x) * (1.0 + x + 0.5 * x * x);
}

inline double mean_of(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracle
