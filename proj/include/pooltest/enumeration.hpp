#pragma once

// Exhaustive generation and counting of testing procedures.

#include <algorithm>
#include <array>
#include <coroutine>
#include <cstdint>
#include <exception>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pooltest/core.hpp"
#include "pooltest/outcome_set.hpp"
#include "pooltest/procedure.hpp"
#include "pooltest/scalar.hpp"

namespace pooltest {

/// Minimal lazy sequence backed by a coroutine.
template <class T>
class Generator {
 public:
  struct promise_type {
    const T* current = nullptr;
    std::exception_ptr error;

    Generator get_return_object() {
      return Generator{std::coroutine_handle<promise_type>::from_promise(*this)};
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    std::suspend_always yield_value(const T& value) noexcept {
      current = std::addressof(value);
      return {};
    }
    void return_void() noexcept {}
    void unhandled_exception() { error = std::current_exception(); }
  };

  class iterator {
   public:
    using value_type = T;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    explicit iterator(std::coroutine_handle<promise_type> h) : h_(h) { advance(); }

    const T& operator*() const { return *h_.promise().current; }
    const T* operator->() const { return h_.promise().current; }
    iterator& operator++() {
      advance();
      return *this;
    }
    void operator++(int) { advance(); }
    bool operator==(std::default_sentinel_t) const { return !h_ || h_.done(); }

   private:
    void advance() {
      h_.resume();
      if (h_.done() && h_.promise().error) std::rethrow_exception(h_.promise().error);
    }
    std::coroutine_handle<promise_type> h_;
  };

  Generator(Generator&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Generator& operator=(Generator&& o) noexcept {
    if (this != &o) {
      if (h_) h_.destroy();
      h_ = std::exchange(o.h_, {});
    }
    return *this;
  }
  Generator(const Generator&) = delete;
  ~Generator() {
    if (h_) h_.destroy();
  }

  iterator begin() { return iterator(h_); }
  std::default_sentinel_t end() const noexcept { return {}; }

 private:
  explicit Generator(std::coroutine_handle<promise_type> h) : h_(h) {}
  std::coroutine_handle<promise_type> h_;
};

struct PruningFlags {
  /// Skip trees in which a node has two equal-pool children whose pool
  /// precedes the node's own (they are interchangeable with the parent).
  bool interchange = false;
  /// Draw candidates from subsets of the undecided samples, extended with every
  /// sample known clean at the node.
  bool maximal_pools = false;

  bool any() const noexcept { return interchange || maximal_pools; }
};

/// Largest n accepted by enumerate_procedures.
inline constexpr int kEnumerationLimit = 4;

namespace detail {

struct Candidate {
  Mask pool;
  OutcomeSet neg;
  OutcomeSet pos;
};

inline std::vector<Candidate> candidate_splits(const OutcomeSet& s, const std::vector<Mask>& pools,
                                               const PruningFlags& flags) {
  std::vector<Candidate> out;
  auto consider = [&](Mask pool, Mask label) {
    auto [neg, pos] = s.split(pool);
    if (neg.is_empty() || pos.is_empty()) return;
    for (const auto& c : out) {
      if (c.neg == neg) return;
    }
    out.push_back({label, std::move(neg), std::move(pos)});
  };
  if (flags.maximal_pools) {
    const Mask clean = full_mask(s.n()) & ~s.infected_somewhere();
    for (Mask pool : pools_in_order(s.undecided())) consider(pool, pool | clean);
  } else {
    for (Mask pool : pools) consider(pool, pool);
  }
  return out;
}

inline Generator<Procedure> find_procedures(OutcomeSet s, std::vector<Mask> pools, PruningFlags flags) {
  if (s.is_singleton()) {
    co_yield Procedure::leaf(s.n(), s.first());
    co_return;
  }
  const auto candidates = candidate_splits(s, pools, flags);
  for (const auto& c : candidates) {
    std::vector<Mask> rest;
    rest.reserve(pools.size());
    for (Mask p : pools) {
      if (p != c.pool) rest.push_back(p);
    }
    for (const Procedure& neg : find_procedures(c.neg, rest, flags)) {
      for (const Procedure& pos : find_procedures(c.pos, rest, flags)) {
        if (flags.interchange && !neg.root().is_leaf() && !pos.root().is_leaf()) {
          const Mask a = neg.root().pool & c.neg.undecided();
          const Mask b = pos.root().pool & c.pos.undecided();
          if (a == b && pool_less(a, c.pool & s.undecided())) continue;
        }
        co_yield Procedure::node(c.pool, neg, pos);
      }
    }
  }
}

}  // namespace detail

/// Lazily yields every testing procedure over n samples, in a deterministic order.
/// Candidate pools at each node are tried in core pool order; a pool whose
/// split duplicates an earlier candidate is skipped, and a used pool is removed
/// from the candidates of its subtrees.
inline Generator<Procedure> enumerate_procedures(int n, PruningFlags flags = {}) {
  if (n < 1) throw ArgumentError("n must be at least 1");
  if (n > kEnumerationLimit) {
    throw UnsupportedSize("exhaustive enumeration over " + std::to_string(n) + " samples",
                          kEnumerationLimit);
  }
  return detail::find_procedures(OutcomeSet::universe(n), pools_in_order(full_mask(n)), flags);
}

/// All procedures for small n, materialized.
inline std::vector<Procedure> all_procedures(int n, PruningFlags flags = {}) {
  if (n > 3) throw UnsupportedSize("materializing every procedure", 3);
  std::vector<Procedure> out;
  for (const auto& p : enumerate_procedures(n, flags)) out.push_back(p);
  return out;
}

enum class CountMethod { kExhaustive, kDynamicProgramming, kFormula };

inline std::string_view to_string(CountMethod m) {
  switch (m) {
    case CountMethod::kExhaustive: return "exhaustive";
    case CountMethod::kDynamicProgramming: return "dp";
    case CountMethod::kFormula: return "formula";
  }
  return "unknown";
}

struct CountResult {
  BigInt value;
  int n = 0;
  CountMethod method = CountMethod::kFormula;
};

/// Largest n accepted by count_procedures (outcome sets must fit one 64-bit word).
inline constexpr int kCountLimit = 6;

namespace detail {

// Counting over projected outcome sets: every state is a set of outcomes over
// k undecided coordinates, stored in one 64-bit word (k <= 6), and memoized
// under the least image among all k! coordinate permutations.
class ProcedureCounter {
 public:
  explicit ProcedureCounter(std::size_t memo_capacity) : capacity_(memo_capacity) {
    for (int k = 0; k <= kCountLimit; ++k) {
      std::vector<int> perm(static_cast<std::size_t>(k));
      std::iota(perm.begin(), perm.end(), 0);
      auto& tables = perm_tables_[static_cast<std::size_t>(k)];
      do {
        std::vector<std::uint8_t> t(std::size_t{1} << k);
        for (unsigned o = 0; o < t.size(); ++o) {
          unsigned img = 0;
          for (int i = 0; i < k; ++i) {
            if ((o >> i) & 1) img |= 1u << perm[static_cast<std::size_t>(i)];
          }
          t[o] = static_cast<std::uint8_t>(img);
        }
        tables.push_back(std::move(t));
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }

  BigInt count(int k, std::uint64_t set) {
    // Project onto undecided coordinates.
    unsigned all = (1u << k) - 1;
    unsigned some = 0;
    for (std::uint64_t w = set; w != 0; w &= w - 1) {
      const unsigned o = static_cast<unsigned>(std::countr_zero(w));
      all &= o;
      some |= o;
    }
    const unsigned undecided = some & ~all;
    const int live = std::popcount(undecided);
    if (live == 0) return BigInt(1);
    std::uint64_t projected = 0;
    for (std::uint64_t w = set; w != 0; w &= w - 1) {
      const unsigned o = static_cast<unsigned>(std::countr_zero(w));
      unsigned p = 0;
      int bit = 0;
      for (int i = 0; i < k; ++i) {
        if ((undecided >> i) & 1) {
          if ((o >> i) & 1) p |= 1u << bit;
          ++bit;
        }
      }
      projected |= std::uint64_t{1} << p;
    }
    const std::uint64_t key_set = canonical(live, projected);
    const auto key = std::make_pair(live, key_set);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    BigInt total = 0;
    std::vector<std::uint64_t> seen;
    const unsigned full = (1u << live) - 1;
    for (unsigned pool = 1; pool <= full; ++pool) {
      const std::uint64_t neg = key_set & kNegativeLow[pool];
      const std::uint64_t pos = key_set & ~neg;
      if (neg == 0 || pos == 0) continue;
      if (std::find(seen.begin(), seen.end(), neg) != seen.end()) continue;
      seen.push_back(neg);
      total += count(live, neg) * count(live, pos);
    }
    if (memo_.size() >= capacity_) {
      throw ResourceError("procedure-count memo exhausted its capacity of " +
                          std::to_string(capacity_) + " entries");
    }
    memo_.emplace(key, total);
    return total;
  }

  std::size_t memo_size() const noexcept { return memo_.size(); }

 private:
  std::uint64_t canonical(int k, std::uint64_t set) const {
    std::uint64_t best = ~std::uint64_t{0};
    for (const auto& t : perm_tables_[static_cast<std::size_t>(k)]) {
      std::uint64_t img = 0;
      for (std::uint64_t w = set; w != 0; w &= w - 1) {
        img |= std::uint64_t{1} << t[static_cast<std::size_t>(std::countr_zero(w))];
      }
      best = std::min(best, img);
    }
    return best;
  }

  struct KeyHash {
    std::size_t operator()(const std::pair<int, std::uint64_t>& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.second * 31 + static_cast<std::uint64_t>(k.first));
    }
  };

  std::size_t capacity_;
  std::array<std::vector<std::vector<std::uint8_t>>, kCountLimit + 1> perm_tables_;
  std::unordered_map<std::pair<int, std::uint64_t>, BigInt, KeyHash> memo_;
};

}  // namespace detail

/// Exact number of procedures over n samples (memoized recursion over
/// projected, symmetry-reduced outcome sets).
inline CountResult count_procedures(int n, std::size_t memo_capacity = 20'000'000) {
  if (n < 1) throw ArgumentError("n must be at least 1");
  if (n > kCountLimit) {
    throw UnsupportedSize("procedure counting over " + std::to_string(n) + " samples", kCountLimit);
  }
  detail::ProcedureCounter counter(memo_capacity);
  const std::uint64_t universe =
      n == 6 ? ~std::uint64_t{0} : ((std::uint64_t{1} << (1u << n)) - 1);
  return {counter.count(n, universe), n, CountMethod::kDynamicProgramming};
}

/// Number of naive procedures: prod_{k=1..n} k^(2^(n-k)).
inline CountResult count_naive(int n) {
  if (n < 1) throw ArgumentError("n must be at least 1");
  if (n > 24) throw UnsupportedSize("naive count", 24);
  BigInt total = 1;
  for (int k = 1; k <= n; ++k) {
    total *= boost::multiprecision::pow(BigInt(k), 1u << (n - k));
  }
  return {total, n, CountMethod::kFormula};
}

/// t-th Catalan number, (2t choose t) / (t + 1).
inline BigInt catalan(unsigned t) {
  BigInt c = 1;
  for (unsigned i = 0; i < t; ++i) {
    c = c * (2 * (2 * BigInt(i) + 1)) / (BigInt(i) + 2);
  }
  return c;
}

/// Crude upper bound C_t * P(n); the Catalan index t defaults to 2^n.
inline CountResult catalan_upper_bound(int n, std::optional<unsigned> t = std::nullopt) {
  if (n < 1) throw ArgumentError("n must be at least 1");
  if (n > 16) throw UnsupportedSize("Catalan bound", 16);
  const unsigned index = t.value_or(1u << n);
  return {catalan(index) * count_naive(n).value, n, CountMethod::kFormula};
}

}  // namespace pooltest
