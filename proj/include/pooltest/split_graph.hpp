#pragma once

// Prior-independent graph of every outcome set reachable from a root set by
// informative pool tests. States are stored children-first, so a single
// forward pass evaluates any bottom-up recurrence (optimal cost, counts).

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "pooltest/core.hpp"
#include "pooltest/outcome_set.hpp"

namespace pooltest {

class SplitGraph {
 public:
  struct Edge {
    Mask pool;
    std::int32_t neg;
    std::int32_t pos;
  };

  struct State {
    OutcomeSet set;
    std::int32_t first_edge = 0;
    std::int32_t edge_count = 0;
  };

  /// Default cap on the number of states a single graph may hold.
  static constexpr std::size_t kDefaultStateBudget = 4'000'000;

  /// Builds the graph below `root`. Candidate pools at a state are the subsets
  /// of its undecided samples, in core pool order; a pool whose split repeats
  /// an earlier one at the same state is dropped.
  static std::shared_ptr<const SplitGraph> build(const OutcomeSet& root,
                                                 std::size_t state_budget = kDefaultStateBudget) {
    auto g = std::shared_ptr<SplitGraph>(new SplitGraph());
    Builder b{*g, state_budget, {}, {}};
    g->root_ = b.visit(root);
    return g;
  }

  /// Cached graph rooted at the full universe over n samples.
  static std::shared_ptr<const SplitGraph> for_universe(int n) {
    static std::mutex mu;
    static std::unordered_map<int, std::shared_ptr<const SplitGraph>> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto g = build(OutcomeSet::universe(n));
    cache.emplace(n, g);
    return g;
  }

  int n() const noexcept { return states_.at(static_cast<std::size_t>(root_)).set.n(); }
  std::int32_t root() const noexcept { return root_; }
  const std::vector<State>& states() const noexcept { return states_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::span<const Edge> edges_of(std::int32_t s) const {
    const auto& st = states_[static_cast<std::size_t>(s)];
    return {edges_.data() + st.first_edge, static_cast<std::size_t>(st.edge_count)};
  }

 private:
  SplitGraph() = default;

  struct Builder {
    SplitGraph& g;
    std::size_t budget;
    std::unordered_map<OutcomeSet, std::int32_t, OutcomeSetHash> index;
    std::unordered_map<Mask, std::vector<Mask>> ordered;

    const std::vector<Mask>& candidates(Mask undecided) {
      auto it = ordered.find(undecided);
      if (it != ordered.end()) return it->second;
      return ordered.emplace(undecided, pools_in_order(undecided)).first->second;
    }

    std::int32_t visit(const OutcomeSet& s) {
      if (auto it = index.find(s); it != index.end()) return it->second;
      std::vector<Edge> local;
      if (!s.is_singleton()) {
        std::vector<OutcomeSet> seen;
        const Mask undecided = s.undecided();
        for (Mask pool : candidates(undecided)) {
          auto [neg, pos] = s.split(pool);
          if (neg.is_empty() || pos.is_empty()) continue;
          if (std::find(seen.begin(), seen.end(), neg) != seen.end()) continue;
          seen.push_back(neg);
          const std::int32_t a = visit(neg);
          const std::int32_t c = visit(pos);
          local.push_back({pool, a, c});
        }
      }
      if (g.states_.size() >= budget) {
        throw ResourceError("split graph exceeded its state budget of " + std::to_string(budget));
      }
      const auto id = static_cast<std::int32_t>(g.states_.size());
      g.states_.push_back({s, static_cast<std::int32_t>(g.edges_.size()),
                           static_cast<std::int32_t>(local.size())});
      g.edges_.insert(g.edges_.end(), local.begin(), local.end());
      index.emplace(s, id);
      return id;
    }
  };

  std::vector<State> states_;
  std::vector<Edge> edges_;
  std::int32_t root_ = -1;
};

}  // namespace pooltest
