#include <doctest.h>

#include <cmath>

#include "covlda/covlda.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace covlda;

namespace {

VanillaConfig quick_config(std::size_t n_categories, int max_clusters,
                           int iters, std::uint64_t seed) {
  VanillaConfig cfg;
  cfg.max_clusters = max_clusters;
  cfg.alpha = 0.1;
  cfg.gamma.assign(n_categories, 0.1);
  cfg.iters = iters;
  cfg.burnin = iters / 2;
  cfg.thin = 5;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("vanilla") {

TEST_CASE("vanilla_z_weights trivial cases") {
  auto data = support::make_count_data({{3, 1}});
  const std::vector<double> gamma{0.1, 0.1};

  LatentState one(data, 1);
  one.detach_token(0, 0);
  CHECK(vanilla_z_weights(one, 0, 0, 0.5, gamma) == std::vector<double>{1.0});
  one.attach_token(0, 0, 0);

  // mirrored counts give uniform weights
  auto sym = support::make_count_data({{5, 0}});
  LatentState bal(sym, 2);
  bal.apply_token_move(0, 0, 0, 1);
  bal.apply_token_move(0, 0, 0, 1);
  bal.detach_token(0, 2);
  const auto w = vanilla_z_weights(bal, 0, 0, 0.3, gamma);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("vanilla_z_weights equals the collapsed-joint brute force") {
  Rng rng(2718);
  for (int rep = 0; rep < 60; ++rep) {
    auto c = support::make_tiny_case(rng);
    const double alpha = rng.uniform(0.05, 1.5);
    LatentState state(c.data, c.hp.n_clusters);
    state.randomize_assignments(rng);
    for (std::size_t l = 0; l < state.n_instances(); ++l) {
      if (state.token_total(l) == 0) continue;
      const std::size_t idx =
          static_cast<std::size_t>(rng.uniform01() * state.token_total(l)) %
          state.token_total(l);
      const Token t = state.detach_token(l, idx);
      const auto got = vanilla_z_weights(state, l, t.category, alpha, c.hp.gamma);
      const auto want = oracle::vanilla_z_posterior_brute_force(
          state, l, idx, alpha, c.hp.gamma);
      for (std::size_t k = 0; k < got.size(); ++k)
        CHECK(std::abs(got[k] - want[k]) < 1e-10);
      state.attach_token(l, idx, t.cluster);
    }
  }
}

TEST_CASE("run_vanilla finds planted clusters and empties the rest") {
  // four near-disjoint compositions; instances short enough for whole
  // instances to migrate between clusters, so redundant clusters drain
  const int K_true = 4, S = 32, L = 48, tokens = 15;
  Rng gen(31416);
  Matrix phi(K_true, S, 0.0);
  for (int k = 0; k < K_true; ++k) {
    for (int s = 0; s < S; ++s)
      phi(k, s) = (s / (S / K_true) == k) ? 1.0 : 0.002;
    double total = 0.0;
    for (double v : phi.row(k)) total += v;
    for (double& v : phi.row(k)) v /= total;
  }
  IntMatrix counts(L, S, 0);
  for (int l = 0; l < L; ++l) {
    const int k = l % K_true;
    for (int t = 0; t < tokens; ++t)
      ++counts(l, static_cast<int>(gen.categorical(phi.row(k))));
  }
  CountData data;
  data.counts = counts;
  for (int s = 0; s < S; ++s)
    data.category_names.push_back("cat_" + std::to_string(s));
  for (int l = 0; l < L; ++l)
    data.instance_ids.push_back("inst_" + std::to_string(l));

  Rng rng(207);
  const auto result = run_vanilla(data, quick_config(S, 10, 2000, 1), rng);
  int dominant = 0;
  for (double f : result.occupancy.fractions)
    if (f > 0.05) ++dominant;
  CHECK(dominant == K_true);
  CHECK(result.occupancy.suggested_k >= K_true);
}

TEST_CASE("single-category corpus collapses the composition") {
  auto data = support::make_count_data({{30}, {25}, {40}});
  Rng rng(2);
  const auto result = run_vanilla(data, quick_config(1, 3, 60, 3), rng);
  for (const auto& phi : result.phi_draws)
    for (int k = 0; k < 3; ++k)
      CHECK(phi(k, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("run_vanilla deterministic under a fixed seed") {
  Rng g(4);
  auto c = support::make_tiny_case(g, 2, 3, 3, 12);
  Rng r1(50), r2(50);
  const auto cfg = quick_config(c.data.n_categories(), 2, 40, 9);
  const auto a = run_vanilla(c.data, cfg, r1);
  const auto b = run_vanilla(c.data, cfg, r2);
  REQUIRE(a.phi_draws.size() == b.phi_draws.size());
  for (std::size_t i = 0; i < a.phi_draws.size(); ++i)
    CHECK(a.phi_draws[i] == b.phi_draws[i]);
  CHECK(a.logdens == b.logdens);
  CHECK(a.count_snapshots.size() == b.count_snapshots.size());
}

TEST_CASE("run_vanilla log joint matches the product-form reference") {
  Rng g(8);
  auto c = support::make_tiny_case(g);
  LatentState state(c.data, 2);
  state.randomize_assignments(g);
  std::vector<double> gamma(c.data.n_categories(), 0.1);
  const double got = vanilla_log_joint(state, 0.3, gamma);
  const double want = oracle::vanilla_collapsed_log_joint(state, 0.3, gamma);
  // implementations share no code; they may differ only by the constant
  // lgamma terms, which the reference drops
  LatentState other(c.data, 2);
  other.assign_all(0);
  const double got2 = vanilla_log_joint(other, 0.3, gamma);
  const double want2 = oracle::vanilla_collapsed_log_joint(other, 0.3, gamma);
  CHECK(std::abs((got - got2) - (want - want2)) < 1e-9);
}

TEST_CASE("occupancy_report orders and counts clusters") {
  auto data = support::make_count_data({{90, 10}});
  LatentState state(data, 3);
  // 90 tokens of cat0 to cluster 0, 10 of cat1 to cluster 1
  for (int i = 0; i < 10; ++i) state.apply_token_move(0, 1, 0, 1);
  const auto rep = occupancy_report(state);
  CHECK(rep.fractions[0] == doctest::Approx(0.9));
  CHECK(rep.fractions[1] == doctest::Approx(0.1));
  CHECK(rep.fractions[2] == doctest::Approx(0.0));
  CHECK(rep.suggested_k == 2);
  CHECK(rep.cluster_order[0] == 0);
  CHECK(rep.cluster_order[1] == 1);

  LatentState lone(data, 3);
  const auto rep2 = occupancy_report(lone);
  CHECK(rep2.suggested_k == 1);
  CHECK(rep2.fractions[0] == doctest::Approx(1.0));
}

}  // TEST_SUITE
