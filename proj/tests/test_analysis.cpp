#include <doctest.h>

#include <cmath>

#include "covlda/covlda.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace covlda;

TEST_SUITE("analysis") {

TEST_CASE("summarize_draws basics") {
  const auto s = summarize_draws({1.0, 2.0, 3.0}, 0.5);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.significant);  // all draws positive

  const auto neg = summarize_draws({-3.0, -1.0, -2.0}, 0.9);
  CHECK(neg.significant);
  const auto mixed = summarize_draws({-1.0, 1.0, 0.5, -0.5}, 0.9);
  CHECK(!mixed.significant);
  CHECK_THROWS_AS(summarize_draws({}, 0.9), std::invalid_argument);
}

TEST_CASE("credible interval endpoints match normal quantiles") {
  Rng rng(123);
  std::vector<double> draws(10000);
  for (double& d : draws) d = rng.normal();
  const auto s = summarize_draws(draws, 0.99);
  CHECK(std::abs(s.ci_lower - (-2.576)) < 0.1);
  CHECK(std::abs(s.ci_upper - 2.576) < 0.1);
  CHECK(std::abs(s.mean) < 0.05);
}

TEST_CASE("significance flag mirrors the interval") {
  Rng rng(9);
  std::vector<Matrix> draws;
  for (int i = 0; i < 200; ++i) {
    Matrix b(2, 2);
    b(0, 0) = 3.0 + rng.normal();
    b(0, 1) = rng.normal();
    b(1, 0) = -4.0 + rng.normal();
    b(1, 1) = 0.01 * rng.normal();
    draws.push_back(b);
  }
  const std::vector<std::string> names{"intercept", "Var1"};
  const auto table = posterior_summary(draws, names, 0.95);
  REQUIRE(table.rows.size() == 4);
  for (const auto& row : table.rows) {
    CHECK(row.ci_lower <= row.ci_upper);
    CHECK(row.significant == (row.ci_lower > 0.0 || row.ci_upper < 0.0));
  }
  CHECK(table.rows[0].significant);   // centered at 3
  CHECK(!table.rows[1].significant);  // centered at 0
  CHECK(table.rows[2].significant);   // centered at -4
}

TEST_CASE("relevant_categories applies the frequency-ratio rule") {
  Matrix phi(3, 3);
  // column 0: 0.4 vs 0.1/0.1 -> cluster 0 wins; column 1: 0.3 vs 0.2 -> nobody
  phi(0, 0) = 0.4; phi(1, 0) = 0.1; phi(2, 0) = 0.1;
  phi(0, 1) = 0.3; phi(1, 1) = 0.2; phi(2, 1) = 0.1;
  phi(0, 2) = 0.3; phi(1, 2) = 0.7; phi(2, 2) = 0.8;
  const auto rel = relevant_categories(phi);
  CHECK(rel[0] == std::vector<int>{0});
  CHECK(rel[1].empty());
  CHECK(rel[2].empty());
}

TEST_CASE("one-cluster model marks every present category relevant") {
  Matrix phi(1, 3);
  phi(0, 0) = 0.5;
  phi(0, 1) = 0.5;
  phi(0, 2) = 0.0;
  const auto rel = relevant_categories(phi);
  CHECK(rel[0].size() == 2);
}

TEST_CASE("a category is relevant for at most one cluster") {
  Rng rng(77);
  for (int rep = 0; rep < 50; ++rep) {
    const int K = 2 + static_cast<int>(rng.uniform01() * 4);
    const int S = 3 + static_cast<int>(rng.uniform01() * 10);
    Matrix phi(K, S);
    std::vector<double> conc(S, 0.3);
    for (int k = 0; k < K; ++k) rng.dirichlet(conc, phi.row(k));
    const auto rel = relevant_categories(phi, 2.0);
    std::vector<int> owner(S, -1);
    for (int k = 0; k < K; ++k)
      for (int s : rel[k]) {
        CHECK(owner[s] == -1);
        owner[s] = k;
      }
  }
}

TEST_CASE("coherence hand-counted example") {
  // instances {A,B}, {A}, {C}, {A,B}; one cluster; top pair (A,B)
  auto data = support::make_count_data(
      {{1, 1, 0}, {1, 0, 0}, {0, 0, 1}, {1, 1, 0}});
  Matrix phi(1, 3);
  phi(0, 0) = 0.6;
  phi(0, 1) = 0.3;
  phi(0, 2) = 0.1;
  Matrix theta(4, 1, 1.0);
  const auto rep = probabilistic_coherence(phi, data, theta, 2);
  // P(A|B) = 2/2, P(A) = 3/4 -> 0.25
  CHECK(rep.per_cluster[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rep.total == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rep.skipped_pairs[0] == 0);
}

TEST_CASE("an always-present category contributes zero") {
  auto data = support::make_count_data({{2, 1, 0}, {1, 0, 3}, {4, 2, 1}});
  Matrix phi(1, 3);
  phi(0, 0) = 0.7;  // category 0 in every instance
  phi(0, 1) = 0.2;
  phi(0, 2) = 0.1;
  Matrix theta(3, 1, 1.0);
  const auto rep = probabilistic_coherence(phi, data, theta, 2);
  CHECK(rep.per_cluster[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("independent categories score near zero") {
  Rng rng(404);
  const std::size_t L = 4000;
  std::vector<std::vector<int>> rows(L, std::vector<int>(5, 0));
  const double present[5] = {0.6, 0.5, 0.4, 0.55, 0.45};
  for (auto& row : rows)
    for (int s = 0; s < 5; ++s)
      row[s] = rng.uniform01() < present[s] ? 1 + static_cast<int>(rng.uniform01() * 3) : 0;
  auto data = support::make_count_data(rows);
  Matrix phi(1, 5);
  for (int s = 0; s < 5; ++s) phi(0, s) = (s + 1) / 15.0;
  Matrix theta(L, 1, 1.0);
  const auto rep = probabilistic_coherence(phi, data, theta, 5);
  CHECK(std::abs(rep.per_cluster[0]) < 0.05);
}

TEST_CASE("pairs without any conditioning instance are skipped and counted") {
  // category 2 never occurs, yet the composition ranks it in the top pair
  auto data = support::make_count_data({{3, 0, 0}, {2, 0, 0}});
  Matrix phi(1, 3);
  phi(0, 0) = 0.6;
  phi(0, 1) = 0.05;
  phi(0, 2) = 0.35;
  Matrix theta(2, 1, 1.0);
  const auto rep = probabilistic_coherence(phi, data, theta, 2);
  CHECK(rep.skipped_pairs[0] == 1);
  CHECK(rep.per_cluster[0] == 0.0);
}

TEST_CASE("coherence total sums the clusters and ignores instance order") {
  Rng rng(11);
  auto truth = simulate_set1(40, 12, 3, 99);
  Matrix theta = truth.theta_true;
  const auto rep =
      probabilistic_coherence(truth.phi_true, truth.data, theta, 4);
  double sum = 0.0;
  for (double v : rep.per_cluster) sum += v;
  CHECK(rep.total == doctest::Approx(sum).epsilon(1e-12));

  // reverse the instance order
  const std::size_t L = truth.data.n_instances();
  CountData reversed = truth.data;
  Matrix rtheta(L, 3);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t s = 0; s < truth.data.n_categories(); ++s)
      reversed.counts(l, s) = truth.data.counts(L - 1 - l, s);
    for (std::size_t k = 0; k < 3; ++k)
      rtheta(l, k) = theta(L - 1 - l, k);
  }
  const auto rep2 = probabilistic_coherence(truth.phi_true, reversed, rtheta, 4);
  CHECK(rep2.total == doctest::Approx(rep.total).epsilon(1e-12));
}

TEST_CASE("predict_abundance closed forms") {
  Matrix phi(2, 3);
  phi(0, 0) = 0.5; phi(0, 1) = 0.25; phi(0, 2) = 0.25;
  phi(1, 0) = 0.1; phi(1, 1) = 0.3;  phi(1, 2) = 0.6;
  Matrix beta(2, 2, 0.0);
  Matrix X(2, 2);
  X(0, 0) = 1.0; X(0, 1) = 0.4;
  X(1, 0) = 1.0; X(1, 1) = -0.7;

  // zero coefficients: every rate is one, rows equal the column sums
  const auto base = predict_abundance(beta, phi, X);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t s = 0; s < 3; ++s)
      CHECK(base(l, s) == doctest::Approx(phi(0, s) + phi(1, s)).epsilon(1e-12));

  // adding log 2 to the intercepts doubles everything
  Matrix shifted = beta;
  shifted(0, 0) += std::log(2.0);
  shifted(1, 0) += std::log(2.0);
  const auto doubled = predict_abundance(shifted, phi, X);
  for (std::size_t i = 0; i < doubled.data().size(); ++i)
    CHECK(doubled.data()[i] == doctest::Approx(2.0 * base.data()[i]).epsilon(1e-12));
}

TEST_CASE("predict_abundance matches a naive triple loop") {
  Rng rng(303);
  Matrix beta(3, 2), phi(3, 4), X(5, 2);
  for (double& v : beta.data()) v = 0.4 * rng.normal();
  std::vector<double> conc(4, 0.5);
  for (int k = 0; k < 3; ++k) rng.dirichlet(conc, phi.row(k));
  for (std::size_t l = 0; l < 5; ++l) {
    X(l, 0) = 1.0;
    X(l, 1) = rng.normal();
  }
  const auto got = predict_abundance(beta, phi, X);
  for (std::size_t l = 0; l < 5; ++l)
    for (std::size_t s = 0; s < 4; ++s) {
      double want = 0.0;
      for (std::size_t k = 0; k < 3; ++k)
        want += std::exp(X(l, 0) * beta(k, 0) + X(l, 1) * beta(k, 1)) * phi(k, s);
      CHECK(std::abs(got(l, s) - want) < 1e-12);
    }
}

TEST_CASE("predict_abundance is invariant under joint cluster permutation") {
  Rng rng(21);
  Matrix beta(3, 2), phi(3, 4), X(4, 2);
  for (double& v : beta.data()) v = 0.3 * rng.normal();
  std::vector<double> conc(4, 0.5);
  for (int k = 0; k < 3; ++k) rng.dirichlet(conc, phi.row(k));
  for (std::size_t l = 0; l < 4; ++l) {
    X(l, 0) = 1.0;
    X(l, 1) = rng.normal();
  }
  Matrix beta_p(3, 2), phi_p(3, 4);
  const int perm[3] = {2, 0, 1};
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 2; ++j) beta_p(k, j) = beta(perm[k], j);
    for (int s = 0; s < 4; ++s) phi_p(k, s) = phi(perm[k], s);
  }
  const auto a = predict_abundance(beta, phi, X);
  const auto b = predict_abundance(beta_p, phi_p, X);
  for (std::size_t i = 0; i < a.data().size(); ++i)
    CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-12));
}

TEST_CASE("align_clusters identity and swap") {
  Matrix phi(2, 3);
  phi(0, 0) = 0.8; phi(0, 1) = 0.1; phi(0, 2) = 0.1;
  phi(1, 0) = 0.1; phi(1, 1) = 0.1; phi(1, 2) = 0.8;
  CHECK(align_clusters(phi, phi) == std::vector<int>{0, 1});

  Matrix swapped(2, 3);
  for (int s = 0; s < 3; ++s) {
    swapped(0, s) = phi(1, s);
    swapped(1, s) = phi(0, s);
  }
  CHECK(align_clusters(swapped, phi) == std::vector<int>{1, 0});
}

TEST_CASE("align_clusters agrees with an exhaustive search") {
  Rng rng(55);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix est(4, 6), truth(4, 6);
    std::vector<double> conc(6, 0.4);
    for (int k = 0; k < 4; ++k) {
      rng.dirichlet(conc, truth.row(k));
      for (int s = 0; s < 6; ++s)
        est(k, s) = truth(k, s) + 0.02 * rng.uniform01();
    }
    // scramble the estimate rows
    Matrix scrambled(4, 6);
    const int shuffle[4] = {2, 3, 1, 0};
    for (int k = 0; k < 4; ++k)
      for (int s = 0; s < 6; ++s) scrambled(shuffle[k], s) = est(k, s);

    const auto got = align_clusters(scrambled, truth);

    std::vector<int> perm{0, 1, 2, 3}, best_perm = perm;
    double best = -1e300;
    do {
      double score = 0.0;
      for (int k = 0; k < 4; ++k)
        score += pearson_correlation(scrambled.row(perm[k]), truth.row(k));
      if (score > best) {
        best = score;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == best_perm);
  }
}

}  // TEST_SUITE
