#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "covlda/errors.hpp"
#include "covlda/matrix.hpp"

namespace covlda {

// Fixed prior settings shared by every sampler.
struct Hyperparams {
  std::vector<double> gamma;  // per-category Dirichlet concentration
  double prior_var = 10.0;    // variance of the zero-mean normal prior on each coefficient
  double n_upper = 1000.0;    // upper bound of the uniform prior on the overdispersion
  int n_clusters = 1;
  double ci_level = 0.99;

  double gamma_sum() const {
    double s = 0.0;
    for (double g : gamma) s += g;
    return s;
  }

  void validate(std::size_t n_categories) const {
    if (gamma.size() != n_categories)
      throw std::invalid_argument("Hyperparams: gamma length != category count");
    for (double g : gamma)
      if (!(g > 0.0) || !std::isfinite(g))
        throw std::invalid_argument("Hyperparams: gamma entries must be positive");
    if (!(prior_var > 0.0) || !std::isfinite(prior_var))
      throw std::invalid_argument("Hyperparams: prior_var must be positive");
    if (!(n_upper > 0.0) || !std::isfinite(n_upper))
      throw std::invalid_argument("Hyperparams: n_upper must be positive");
    if (n_clusters < 1)
      throw std::invalid_argument("Hyperparams: n_clusters must be >= 1");
    if (!(ci_level > 0.0 && ci_level < 1.0))
      throw std::invalid_argument("Hyperparams: ci_level must lie in (0,1)");
  }

  static Hyperparams defaults(std::size_t n_categories, int n_clusters) {
    Hyperparams hp;
    hp.gamma.assign(n_categories, 0.1);
    hp.n_clusters = n_clusters;
    return hp;
  }
};

// Observed instance-by-category abundance matrix.
struct CountData {
  IntMatrix counts;  // instances x categories
  std::vector<std::string> category_names;
  std::vector<std::string> instance_ids;

  std::size_t n_instances() const { return counts.rows(); }
  std::size_t n_categories() const { return counts.cols(); }

  long row_total(std::size_t l) const {
    long t = 0;
    for (int c : counts.row(l)) t += c;
    return t;
  }

  long total() const {
    long t = 0;
    for (int c : counts.data()) t += c;
    return t;
  }

  void validate() const {
    if (counts.rows() == 0 || counts.cols() == 0)
      throw std::invalid_argument("CountData: empty matrix");
    if (category_names.size() != counts.cols())
      throw std::invalid_argument("CountData: category name count mismatch");
    if (instance_ids.size() != counts.rows())
      throw std::invalid_argument("CountData: instance id count mismatch");
    bool any_positive = false;
    for (int c : counts.data()) {
      if (c < 0) throw std::invalid_argument("CountData: negative count");
      if (c > 0) any_positive = true;
    }
    if (!any_positive)
      throw std::invalid_argument("CountData: all counts are zero");
  }
};

// Design matrix; when has_intercept is set the first column is constant 1.
struct CovariateMatrix {
  Matrix design;  // instances x covariates
  std::vector<std::string> column_names;
  bool has_intercept = true;

  std::size_t n_instances() const { return design.rows(); }
  std::size_t dim() const { return design.cols(); }

  void validate(std::size_t expected_rows) const {
    if (design.rows() != expected_rows)
      throw std::invalid_argument("CovariateMatrix: row count does not match count data");
    if (column_names.size() != design.cols())
      throw std::invalid_argument("CovariateMatrix: column name count mismatch");
    for (double v : design.data())
      if (!std::isfinite(v))
        throw std::invalid_argument("CovariateMatrix: non-finite entry");
  }
};

// Current parameter point of the sampler.
struct ModelParams {
  Matrix phi;    // clusters x categories, rows on the simplex
  Matrix beta;   // clusters x covariates
  double n_disp = 1.0;

  void validate(const Hyperparams& hp) const {
    for (std::size_t k = 0; k < phi.rows(); ++k) {
      double s = 0.0;
      for (double v : phi.row(k)) {
        if (v < 0.0) throw std::invalid_argument("ModelParams: negative phi entry");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument("ModelParams: phi row does not sum to 1");
    }
    for (double v : beta.data())
      if (!std::isfinite(v))
        throw std::invalid_argument("ModelParams: non-finite beta entry");
    if (!(n_disp > 0.0) || n_disp > hp.n_upper)
      throw std::invalid_argument("ModelParams: overdispersion outside (0, n_upper]");
  }
};

struct TraceMeta {
  std::string mode;
  int iters = 0, burnin = 0, thin = 1;
  std::uint64_t seed = 0;
  int n_clusters = 0;
  std::size_t n_instances = 0, n_categories = 0, n_covariates = 0;
  long clamp_events = 0;
  int stage2_inner = 0;  // two-stage only
};

// Thinned post-burn-in draws plus the per-iteration log-density series.
struct Trace {
  std::vector<Matrix> phi_draws;
  std::vector<Matrix> beta_draws;
  std::vector<double> n_draws;
  std::vector<double> logdens;
  Matrix theta_mean;  // instances x clusters, averaged over retained draws
  std::vector<std::uint8_t> theta_degenerate;  // per instance: ever zero-token
  TraceMeta meta;

  std::size_t n_retained() const { return phi_draws.size(); }
};

}  // namespace covlda
