#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "covlda/errors.hpp"
#include "covlda/matrix.hpp"
#include "covlda/state.hpp"
#include "covlda/types.hpp"

namespace covlda {

// Expected cluster abundance exp(x . beta_k). No clamping here: an overflowing
// or vanishing rate is an error at this level.
inline double compute_lambda(std::span<const double> x,
                             std::span<const double> beta_row) {
  const double rate = std::exp(dot(x, beta_row));
  if (!std::isfinite(rate) || rate <= 0.0)
    throw NumericalError("compute_lambda: rate overflow or underflow");
  return rate;
}

// Log pmf of the negative binomial with mean lambda and size n_disp,
// success probability n_disp / (n_disp + lambda).
inline double nb_log_pmf(long n, double lambda, double n_disp) {
  if (n < 0) throw std::invalid_argument("nb_log_pmf: negative count");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("nb_log_pmf: lambda must be positive and finite");
  if (!(n_disp > 0.0) || !std::isfinite(n_disp))
    throw std::invalid_argument("nb_log_pmf: size must be positive and finite");
  const double nd = static_cast<double>(n);
  const double log_denom = std::log(n_disp + lambda);
  const double v = std::lgamma(nd + n_disp) - std::lgamma(n_disp) -
                   std::lgamma(nd + 1.0) +
                   n_disp * (std::log(n_disp) - log_denom) +
                   nd * (std::log(lambda) - log_denom);
  if (!std::isfinite(v))
    throw NumericalError("nb_log_pmf: non-finite result");
  return v;
}

// Cluster proportions of one instance. An all-zero row has no defined
// proportions; it is reported uniform and flagged.
inline std::vector<double> theta_from_counts(std::span<const int> n_lk_row,
                                             bool* degenerate = nullptr) {
  long total = 0;
  for (int c : n_lk_row) {
    if (c < 0) throw std::invalid_argument("theta_from_counts: negative count");
    total += c;
  }
  std::vector<double> theta(n_lk_row.size());
  if (total == 0) {
    const double u = 1.0 / static_cast<double>(n_lk_row.size());
    for (double& t : theta) t = u;
    if (degenerate) *degenerate = true;
    return theta;
  }
  for (std::size_t k = 0; k < theta.size(); ++k)
    theta[k] = static_cast<double>(n_lk_row[k]) / static_cast<double>(total);
  if (degenerate) *degenerate = false;
  return theta;
}

inline double log_dirichlet_pdf(std::span<const double> x,
                                std::span<const double> concentration) {
  if (x.size() != concentration.size())
    throw std::invalid_argument("log_dirichlet_pdf: size mismatch");
  double v = 0.0, conc_sum = 0.0;
  for (std::size_t s = 0; s < x.size(); ++s) {
    if (!(x[s] > 0.0))
      throw NumericalError("log_dirichlet_pdf: support requires positive entries");
    v += (concentration[s] - 1.0) * std::log(x[s]) - std::lgamma(concentration[s]);
    conc_sum += concentration[s];
  }
  return v + std::lgamma(conc_sum);
}

// Unnormalized log joint of latent counts and parameters given the data,
// up to additive constants that involve none of the sampled quantities.
inline double joint_log_density(const LatentState& state,
                                const ModelParams& params,
                                const CountData& data,
                                const CovariateMatrix& covariates,
                                const Hyperparams& hp) {
  const std::size_t L = data.n_instances();
  const std::size_t S = data.n_categories();
  const int K = state.n_clusters();
  hp.validate(S);
  covariates.validate(L);
  params.validate(hp);
  if (state.n_instances() != L || state.n_categories() != S)
    throw std::invalid_argument("joint_log_density: state/data shape mismatch");
  if (params.phi.rows() != static_cast<std::size_t>(K) || params.phi.cols() != S)
    throw std::invalid_argument("joint_log_density: phi shape mismatch");
  if (params.beta.rows() != static_cast<std::size_t>(K) ||
      params.beta.cols() != covariates.dim())
    throw std::invalid_argument("joint_log_density: beta shape mismatch");
  state.verify_conservation(data);

  double ll = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const int n = state.cluster_counts()(l, k);
      // multinomial composition of the cluster's tokens
      ll += std::lgamma(n + 1.0);
      for (std::size_t s = 0; s < S; ++s) {
        const int c = state.category_cluster_count(l, s, k);
        if (c == 0) continue;
        const double p = params.phi(k, s);
        if (!(p > 0.0))
          throw NumericalError("joint_log_density: zero composition probability with nonzero count");
        ll += c * std::log(p) - std::lgamma(c + 1.0);
      }
      // abundance regression
      ll += nb_log_pmf(n, compute_lambda(covariates.design.row(l), params.beta.row(k)),
                       params.n_disp);
    }
  }
  // priors
  for (int k = 0; k < K; ++k)
    ll += log_dirichlet_pdf(params.phi.row(k), hp.gamma);
  const double log_norm = -0.5 * std::log(2.0 * 3.14159265358979323846 * hp.prior_var);
  for (double b : params.beta.data())
    ll += log_norm - b * b / (2.0 * hp.prior_var);
  ll -= std::log(hp.n_upper);  // uniform prior on the overdispersion
  if (!std::isfinite(ll))
    throw NumericalError("joint_log_density: non-finite result");
  return ll;
}

}  // namespace covlda
