#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "covlda/density.hpp"
#include "covlda/errors.hpp"
#include "covlda/matrix.hpp"
#include "covlda/types.hpp"

namespace covlda {

// Empirical quantile with linear interpolation between order statistics.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw std::invalid_argument("quantile_sorted: empty sample");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("quantile_sorted: q outside [0,1]");
  if (sorted.size() == 1) return sorted[0];
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct ParamSummary {
  double mean = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool significant = false;  // credible interval excludes zero
};

inline ParamSummary summarize_draws(std::vector<double> draws, double level) {
  if (draws.empty())
    throw std::invalid_argument("summarize_draws: no draws");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("summarize_draws: level outside (0,1)");
  ParamSummary s;
  s.mean = std::accumulate(draws.begin(), draws.end(), 0.0) /
           static_cast<double>(draws.size());
  std::sort(draws.begin(), draws.end());
  const double tail = (1.0 - level) / 2.0;
  s.ci_lower = quantile_sorted(draws, tail);
  s.ci_upper = quantile_sorted(draws, 1.0 - tail);
  s.significant = s.ci_lower > 0.0 || s.ci_upper < 0.0;
  return s;
}

struct SummaryRow {
  int cluster = 0;  // 1-based in reports
  std::string covariate;
  double mean = 0.0, ci_lower = 0.0, ci_upper = 0.0;
  bool significant = false;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  double level = 0.99;
};

// Per-(cluster, covariate) posterior means and credible intervals over the
// retained coefficient draws.
inline SummaryTable posterior_summary(const std::vector<Matrix>& beta_draws,
                                      std::span<const std::string> covariate_names,
                                      double level) {
  if (beta_draws.empty())
    throw std::invalid_argument("posterior_summary: no draws");
  const std::size_t K = beta_draws.front().rows();
  const std::size_t d = beta_draws.front().cols();
  if (covariate_names.size() != d)
    throw std::invalid_argument("posterior_summary: covariate name count mismatch");
  SummaryTable table;
  table.level = level;
  std::vector<double> draws(beta_draws.size());
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < beta_draws.size(); ++i)
        draws[i] = beta_draws[i](k, j);
      const ParamSummary s = summarize_draws(draws, level);
      table.rows.push_back(SummaryRow{static_cast<int>(k) + 1,
                                      std::string(covariate_names[j]), s.mean,
                                      s.ci_lower, s.ci_upper, s.significant});
    }
  return table;
}

// Categories at least min_ratio times more frequent in one cluster than in
// any other, listed per cluster in descending composition order.
inline std::vector<std::vector<int>> relevant_categories(const Matrix& phi_mean,
                                                         double min_ratio = 2.0) {
  const std::size_t K = phi_mean.rows();
  const std::size_t S = phi_mean.cols();
  std::vector<std::vector<int>> out(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t s = 0; s < S; ++s) {
      double best_other = 0.0;
      for (std::size_t k2 = 0; k2 < K; ++k2)
        if (k2 != k) best_other = std::max(best_other, phi_mean(k2, s));
      if (phi_mean(k, s) > 0.0 && phi_mean(k, s) >= min_ratio * best_other)
        out[k].push_back(static_cast<int>(s));
    }
    std::stable_sort(out[k].begin(), out[k].end(), [&](int a, int b) {
      return phi_mean(k, a) > phi_mean(k, b);
    });
  }
  return out;
}

struct CoherenceReport {
  std::vector<double> per_cluster;
  std::vector<int> skipped_pairs;  // pairs with an empty conditioning set
  std::vector<std::vector<int>> top_categories;
  double total = 0.0;
  int top_m = 5;
  bool whole_corpus = false;
};

// Co-occurrence lift P(s1|s2) - P(s1) averaged over the top-M category pairs
// of each cluster. Instance sets are restricted to each cluster's
// highest-proportion instances unless whole_corpus is set.
inline CoherenceReport probabilistic_coherence(const Matrix& phi_mean,
                                               const CountData& data,
                                               const Matrix& theta_mean,
                                               int top_m = 5,
                                               bool whole_corpus = false) {
  const std::size_t K = phi_mean.rows();
  const std::size_t S = phi_mean.cols();
  const std::size_t L = data.n_instances();
  if (data.n_categories() != S)
    throw std::invalid_argument("probabilistic_coherence: category count mismatch");
  if (theta_mean.rows() != L || theta_mean.cols() != K)
    throw std::invalid_argument("probabilistic_coherence: theta shape mismatch");
  if (top_m < 2 || static_cast<std::size_t>(top_m) > S)
    throw std::invalid_argument("probabilistic_coherence: top_m must lie in [2, S]");

  // hard assignment of each instance to its largest-proportion cluster
  std::vector<int> assigned(L, 0);
  for (std::size_t l = 0; l < L; ++l) {
    const auto row = theta_mean.row(l);
    assigned[l] = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }

  CoherenceReport rep;
  rep.top_m = top_m;
  rep.whole_corpus = whole_corpus;
  rep.per_cluster.resize(K, 0.0);
  rep.skipped_pairs.resize(K, 0);
  rep.top_categories.resize(K);

  std::vector<int> order(S);
  for (std::size_t k = 0; k < K; ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return phi_mean(k, a) > phi_mean(k, b);
    });
    auto& top = rep.top_categories[k];
    top.assign(order.begin(), order.begin() + top_m);

    std::vector<std::size_t> instances;
    for (std::size_t l = 0; l < L; ++l)
      if (whole_corpus || assigned[l] == static_cast<int>(k))
        instances.push_back(l);

    auto contains = [&](std::size_t l, int s) { return data.counts(l, s) > 0; };
    double sum = 0.0;
    int used = 0;
    for (int a = 0; a < top_m; ++a)
      for (int b = a + 1; b < top_m; ++b) {
        const int s1 = top[a], s2 = top[b];  // s1 at least as frequent as s2
        long n_s2 = 0, n_both = 0, n_s1 = 0;
        for (std::size_t l : instances) {
          const bool h1 = contains(l, s1), h2 = contains(l, s2);
          n_s1 += h1;
          n_s2 += h2;
          n_both += h1 && h2;
        }
        if (n_s2 == 0 || instances.empty()) {
          ++rep.skipped_pairs[k];
          continue;
        }
        const double p_cond = static_cast<double>(n_both) / static_cast<double>(n_s2);
        const double p_marg = static_cast<double>(n_s1) / static_cast<double>(instances.size());
        sum += p_cond - p_marg;
        ++used;
      }
    rep.per_cluster[k] = used > 0 ? sum / used : 0.0;
    rep.total += rep.per_cluster[k];
  }
  return rep;
}

// Expected abundance of every category in new instances:
// sum_k exp(x . beta_k) phi_{k,s}.
inline Matrix predict_abundance(const Matrix& beta_mean, const Matrix& phi_mean,
                                const Matrix& new_design) {
  const std::size_t K = beta_mean.rows();
  if (phi_mean.rows() != K)
    throw std::invalid_argument("predict_abundance: cluster count mismatch");
  if (new_design.cols() != beta_mean.cols())
    throw std::invalid_argument("predict_abundance: covariate dimension mismatch");
  const std::size_t S = phi_mean.cols();
  Matrix out(new_design.rows(), S, 0.0);
  for (std::size_t l = 0; l < new_design.rows(); ++l)
    for (std::size_t k = 0; k < K; ++k) {
      const double rate = compute_lambda(new_design.row(l), beta_mean.row(k));
      for (std::size_t s = 0; s < S; ++s) out(l, s) += rate * phi_mean(k, s);
    }
  return out;
}

inline double pearson_correlation(std::span<const double> a,
                                  std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson_correlation: need two equal-length samples");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Cluster relabeling against a reference composition: returns sigma with
// estimate row sigma[k] matched to reference row k, maximizing the summed
// row correlations. Exhaustive up to 8 clusters, greedy beyond.
inline std::vector<int> align_clusters(const Matrix& phi_est,
                                       const Matrix& phi_true) {
  const std::size_t K = phi_est.rows();
  if (phi_true.rows() != K || phi_true.cols() != phi_est.cols())
    throw std::invalid_argument("align_clusters: shape mismatch");
  Matrix corr(K, K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      corr(i, j) = pearson_correlation(phi_est.row(i), phi_true.row(j));

  std::vector<int> best(K);
  std::iota(best.begin(), best.end(), 0);
  if (K <= 8) {
    std::vector<int> perm = best;
    double best_score = -std::numeric_limits<double>::infinity();
    do {
      double score = 0.0;
      for (std::size_t k = 0; k < K; ++k) score += corr(perm[k], k);
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // greedy: repeatedly take the best unmatched pair
  std::vector<bool> est_used(K, false), true_used(K, false);
  for (std::size_t step = 0; step < K; ++step) {
    double best_c = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j)
        if (!est_used[i] && !true_used[j] && corr(i, j) > best_c) {
          best_c = corr(i, j);
          bi = i;
          bj = j;
        }
    est_used[bi] = true;
    true_used[bj] = true;
    best[bj] = static_cast<int>(bi);
  }
  return best;
}

}  // namespace covlda
