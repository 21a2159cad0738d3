#pragma once

#include <span>
#include <string>
#include <vector>

#include "covlda/errors.hpp"
#include "covlda/matrix.hpp"
#include "covlda/rng.hpp"
#include "covlda/types.hpp"

namespace covlda {

struct Token {
  int category;
  int cluster;  // -1 while detached during a sweep
};

// Per-token cluster assignments plus the four marginal count caches the
// collapsed sweep reads. The caches are maintained incrementally; the token
// stream is always the ground truth and verify_caches() recounts it.
class LatentState {
 public:
  LatentState(const CountData& data, int n_clusters)
      : n_clusters_(n_clusters),
        n_categories_(data.n_categories()),
        n_instances_(data.n_instances()) {
    if (n_clusters < 1)
      throw std::invalid_argument("LatentState: cluster count must be >= 1");
    data.validate();
    tokens_.resize(n_instances_);
    for (std::size_t l = 0; l < n_instances_; ++l) {
      tokens_[l].reserve(static_cast<std::size_t>(data.row_total(l)));
      for (std::size_t s = 0; s < n_categories_; ++s)
        for (int i = 0; i < data.counts(l, s); ++i)
          tokens_[l].push_back(Token{static_cast<int>(s), 0});
    }
    rebuild_caches();
  }

  int n_clusters() const { return n_clusters_; }
  std::size_t n_categories() const { return n_categories_; }
  std::size_t n_instances() const { return n_instances_; }

  std::span<const Token> tokens(std::size_t l) const { return tokens_[l]; }
  int token_total(std::size_t l) const {
    return static_cast<int>(tokens_[l].size());
  }

  int category_cluster_count(std::size_t l, std::size_t s, int k) const {
    return n_lsk_[idx3(l, s, k)];
  }
  const IntMatrix& cluster_counts() const { return n_lk_; }      // L x K
  const IntMatrix& category_counts() const { return n_sk_; }     // S x K
  std::span<const int> totals() const { return n_k_; }           // K

  // Uniform-random reassignment of every token.
  void randomize_assignments(Rng& rng) {
    for (auto& instance : tokens_)
      for (auto& t : instance)
        t.cluster = static_cast<int>(rng.uniform01() * n_clusters_) % n_clusters_;
    rebuild_caches();
  }

  void assign_all(int k) {
    check_cluster(k);
    for (auto& instance : tokens_)
      for (auto& t : instance) t.cluster = k;
    rebuild_caches();
  }

  // Reassigns one token of category s in instance l from from_k to to_k.
  void apply_token_move(std::size_t l, std::size_t s, int from_k, int to_k) {
    check_instance(l);
    check_category(s);
    check_cluster(from_k);
    check_cluster(to_k);
    if (n_lsk_[idx3(l, s, from_k)] < 1)
      throw std::invalid_argument(
          "apply_token_move: no token of this category in the source cluster");
    if (from_k == to_k) return;
    for (std::size_t i = 0; i < tokens_[l].size(); ++i) {
      if (tokens_[l][i].category == static_cast<int>(s) &&
          tokens_[l][i].cluster == from_k) {
        detach_token(l, i);
        attach_token(l, i, to_k);
        return;
      }
    }
    throw std::invalid_argument("apply_token_move: caches disagree with token stream");
  }

  // Removes token (l, idx) from all caches; the token is left detached.
  Token detach_token(std::size_t l, std::size_t idx) {
    Token& t = tokens_[l][idx];
    if (t.cluster < 0)
      throw std::invalid_argument("detach_token: token already detached");
    const int s = t.category;
    const int k = t.cluster;
    int& cell = n_lsk_[idx3(l, s, k)];
    if (cell < 1 || n_lk_(l, k) < 1 || n_sk_(s, k) < 1 || n_k_[k] < 1)
      throw std::invalid_argument("detach_token: count underflow");
    --cell;
    --n_lk_(l, k);
    --n_sk_(s, k);
    --n_k_[k];
    Token copy = t;
    t.cluster = -1;
    return copy;
  }

  void attach_token(std::size_t l, std::size_t idx, int k) {
    check_cluster(k);
    Token& t = tokens_[l][idx];
    if (t.cluster >= 0)
      throw std::invalid_argument("attach_token: token already attached");
    t.cluster = k;
    ++n_lsk_[idx3(l, t.category, k)];
    ++n_lk_(l, k);
    ++n_sk_(t.category, k);
    ++n_k_[k];
  }

  // Recounts every cache from the token stream; throws on any mismatch.
  void verify_caches() const {
    std::vector<int> lsk(n_lsk_.size(), 0);
    IntMatrix lk(n_instances_, n_clusters_, 0);
    IntMatrix sk(n_categories_, n_clusters_, 0);
    std::vector<int> nk(n_clusters_, 0);
    for (std::size_t l = 0; l < n_instances_; ++l)
      for (const Token& t : tokens_[l]) {
        if (t.cluster < 0)
          throw NumericalError("verify_caches: detached token");
        ++lsk[idx3(l, t.category, t.cluster)];
        ++lk(l, t.cluster);
        ++sk(t.category, t.cluster);
        ++nk[t.cluster];
      }
    if (lsk != n_lsk_ || !(lk == n_lk_) || !(sk == n_sk_) || nk != n_k_)
      throw NumericalError("verify_caches: cache mismatch");
  }

  // Checks that cluster-summed counts reproduce the observed matrix.
  void verify_conservation(const CountData& data) const {
    if (data.n_instances() != n_instances_ ||
        data.n_categories() != n_categories_)
      throw std::invalid_argument("verify_conservation: shape mismatch");
    for (std::size_t l = 0; l < n_instances_; ++l)
      for (std::size_t s = 0; s < n_categories_; ++s) {
        int sum = 0;
        for (int k = 0; k < n_clusters_; ++k) sum += n_lsk_[idx3(l, s, k)];
        if (sum != data.counts(l, s))
          throw std::invalid_argument(
              "verify_conservation: cluster counts do not sum to observed count");
      }
  }

 private:
  std::size_t idx3(std::size_t l, std::size_t s, int k) const {
    return (l * n_categories_ + s) * static_cast<std::size_t>(n_clusters_) +
           static_cast<std::size_t>(k);
  }

  void check_instance(std::size_t l) const {
    if (l >= n_instances_)
      throw std::invalid_argument("LatentState: instance index out of range");
  }
  void check_category(std::size_t s) const {
    if (s >= n_categories_)
      throw std::invalid_argument("LatentState: category index out of range");
  }
  void check_cluster(int k) const {
    if (k < 0 || k >= n_clusters_)
      throw std::invalid_argument("LatentState: cluster index out of range");
  }

  void rebuild_caches() {
    n_lsk_.assign(n_instances_ * n_categories_ *
                      static_cast<std::size_t>(n_clusters_),
                  0);
    n_lk_ = IntMatrix(n_instances_, n_clusters_, 0);
    n_sk_ = IntMatrix(n_categories_, n_clusters_, 0);
    n_k_.assign(n_clusters_, 0);
    for (std::size_t l = 0; l < n_instances_; ++l)
      for (const Token& t : tokens_[l]) {
        ++n_lsk_[idx3(l, t.category, t.cluster)];
        ++n_lk_(l, t.cluster);
        ++n_sk_(t.category, t.cluster);
        ++n_k_[t.cluster];
      }
  }

  int n_clusters_;
  std::size_t n_categories_;
  std::size_t n_instances_;
  std::vector<std::vector<Token>> tokens_;
  std::vector<int> n_lsk_;
  IntMatrix n_lk_;
  IntMatrix n_sk_;
  std::vector<int> n_k_;
};

}  // namespace covlda
