#pragma once

// Minimum expected-length procedures by dynamic programming over the split
// graph, and a brute-force oracle over the enumerated procedures.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pooltest/core.hpp"
#include "pooltest/enumeration.hpp"
#include "pooltest/outcome_set.hpp"
#include "pooltest/probability.hpp"
#include "pooltest/procedure.hpp"
#include "pooltest/scalar.hpp"
#include "pooltest/split_graph.hpp"

namespace pooltest {

/// Largest n accepted by find_optimal on the full universe.
inline constexpr int kOptimizerLimit = 8;

template <class Scalar>
struct TieTolerance {
  static Scalar value() { return Scalar(0); }
};

template <>
struct TieTolerance<double> {
  static double value() { return 1e-12; }
};

template <class Scalar>
struct OptimalResult {
  Procedure procedure;
  Scalar value;
};

/// Reusable solver over one split graph. Each solve() fills per-state values
/// and choices for a prior vector; the graph itself is shared and immutable.
///
/// The recurrence works with unnormalized probabilities:
///   cost(S) = Pr(S) + min over pools of [cost(S-) + cost(S+)],  cost(singleton) = 0,
/// so cost(root) is the expected length when the root is the full universe.
/// Ties keep the earliest pool in core order.
template <class Scalar>
class OptimizerContext {
 public:
  explicit OptimizerContext(std::shared_ptr<const SplitGraph> graph) : graph_(std::move(graph)) {
    const auto count = graph_->states().size();
    weights_.resize(count);
    values_.resize(count);
    choice_.assign(count, -1);
  }

  const SplitGraph& graph() const noexcept { return *graph_; }

  /// Solves for `priors`; returns the value at the graph root.
  const Scalar& solve(std::span<const Scalar> priors) {
    check_priors(priors);
    if (static_cast<int>(priors.size()) != graph_->n()) {
      throw ArgumentError("prior vector has " + std::to_string(priors.size()) +
                          " entries, expected " + std::to_string(graph_->n()));
    }
    probs_ = outcome_probabilities<Scalar>(priors);
    const Scalar tol = TieTolerance<Scalar>::value();
    const auto& states = graph_->states();
    for (std::size_t s = 0; s < states.size(); ++s) {
      if (states[s].edge_count == 0) {
        weights_[s] = probs_[states[s].set.first()];
        values_[s] = 0;
        choice_[s] = -1;
        continue;
      }
      // Both children of any edge partition the state, and come earlier.
      const auto& e0 = graph_->edges()[static_cast<std::size_t>(states[s].first_edge)];
      weights_[s] = weights_[static_cast<std::size_t>(e0.neg)];
      weights_[s] += weights_[static_cast<std::size_t>(e0.pos)];
      const auto& w = weights_[s];
      std::int32_t best = -1;
      Scalar best_value = 0;
      Scalar candidate = 0;
      const auto edges = graph_->edges_of(static_cast<std::int32_t>(s));
      for (std::size_t e = 0; e < edges.size(); ++e) {
        candidate = values_[static_cast<std::size_t>(edges[e].neg)];
        candidate += values_[static_cast<std::size_t>(edges[e].pos)];
        if (best < 0 || candidate < best_value - tol) {
          best = static_cast<std::int32_t>(e);
          best_value = candidate;
        }
      }
      choice_[s] = best;
      values_[s] = w;
      values_[s] += best_value;
    }
    solved_ = true;
    return values_[static_cast<std::size_t>(graph_->root())];
  }

  const Scalar& solve(const std::vector<Scalar>& priors) { return solve(std::span<const Scalar>(priors)); }

  const Scalar& value() const { return value(graph_->root()); }
  const Scalar& value(std::int32_t state) const {
    require_solved();
    return values_.at(static_cast<std::size_t>(state));
  }
  const Scalar& weight(std::int32_t state) const {
    require_solved();
    return weights_.at(static_cast<std::size_t>(state));
  }

  /// Optimal procedure below `state` (the root by default) for the last solve().
  Procedure procedure(std::optional<std::int32_t> state = std::nullopt) const {
    require_solved();
    Procedure::Builder b(graph_->n());
    emit(b, state.value_or(graph_->root()));
    return std::move(b).finish();
  }

  /// Leaf depths of the optimal procedure without materializing it.
  LengthVector lengths() const {
    require_solved();
    LengthVector lv{graph_->n(), std::vector<std::uint16_t>(std::size_t{1} << graph_->n(), 0)};
    fill_depths(lv, graph_->root(), 0);
    return lv;
  }

 private:
  void require_solved() const {
    if (!solved_) throw StateError("optimizer context has not been solved yet");
  }

  const SplitGraph::Edge& chosen(std::int32_t s) const {
    const auto edges = graph_->edges_of(s);
    return edges[static_cast<std::size_t>(choice_[static_cast<std::size_t>(s)])];
  }

  void emit(Procedure::Builder& b, std::int32_t s) const {
    const auto& st = graph_->states()[static_cast<std::size_t>(s)];
    if (st.edge_count == 0) {
      b.leaf(st.set.first());
      return;
    }
    const auto& e = chosen(s);
    b.node(e.pool, [&] { emit(b, e.neg); }, [&] { emit(b, e.pos); });
  }

  void fill_depths(LengthVector& lv, std::int32_t s, int depth) const {
    const auto& st = graph_->states()[static_cast<std::size_t>(s)];
    if (st.edge_count == 0) {
      lv.depths[st.set.first()] = static_cast<std::uint16_t>(depth);
      return;
    }
    const auto& e = chosen(s);
    fill_depths(lv, e.neg, depth + 1);
    fill_depths(lv, e.pos, depth + 1);
  }

  std::shared_ptr<const SplitGraph> graph_;
  std::vector<Scalar> probs_;
  std::vector<Scalar> weights_;
  std::vector<Scalar> values_;
  std::vector<std::int32_t> choice_;
  bool solved_ = false;
};

/// Optimal procedure over an arbitrary non-empty outcome set. The returned value
/// is the sum over the set of probability times depth (unnormalized).
template <class Scalar>
OptimalResult<Scalar> find_optimal(const std::vector<Scalar>& priors, const OutcomeSet& outcomes) {
  check_priors(priors);
  if (outcomes.n() != static_cast<int>(priors.size())) {
    throw ArgumentError("outcome set and prior vector sizes differ");
  }
  if (outcomes.is_empty()) throw ArgumentError("outcome set is empty");
  if (outcomes.n() > kOptimizerLimit) {
    throw UnsupportedSize("optimal search over " + std::to_string(outcomes.n()) + " samples",
                          kOptimizerLimit);
  }
  const bool full = outcomes.size() == (std::size_t{1} << outcomes.n());
  OptimizerContext<Scalar> ctx(full ? SplitGraph::for_universe(outcomes.n()) : SplitGraph::build(outcomes));
  Scalar v = ctx.solve(priors);
  return {ctx.procedure(), std::move(v)};
}

/// Optimal procedure over the full universe of 2^n outcomes.
template <class Scalar>
OptimalResult<Scalar> find_optimal(const std::vector<Scalar>& priors) {
  check_priors(priors);
  const int n = static_cast<int>(priors.size());
  if (n > kOptimizerLimit) {
    throw UnsupportedSize("optimal search over " + std::to_string(n) + " samples", kOptimizerLimit);
  }
  return find_optimal(priors, OutcomeSet::universe(n));
}

/// Largest n accepted by brute_force_optimal.
inline constexpr int kBruteForceLimit = 3;

/// Minimum of expected_length over every enumerated procedure. Among equal values
/// the procedure whose preorder pool sequence is least in core order wins.
template <class Scalar>
OptimalResult<Scalar> brute_force_optimal(const std::vector<Scalar>& priors) {
  check_priors(priors);
  const int n = static_cast<int>(priors.size());
  if (n > kBruteForceLimit) {
    throw UnsupportedSize("brute-force search over " + std::to_string(n) + " samples",
                          kBruteForceLimit);
  }
  auto pool_sequence_less = [](const Procedure& a, const Procedure& b) {
    const auto& x = a.nodes();
    const auto& y = b.nodes();
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
      if (x[i].is_leaf() != y[i].is_leaf()) return x[i].is_leaf();
      if (x[i].is_leaf()) continue;
      if (x[i].pool != y[i].pool) return pool_less(x[i].pool, y[i].pool);
    }
    return x.size() < y.size();
  };
  const Scalar tol = TieTolerance<Scalar>::value();
  std::optional<OptimalResult<Scalar>> best;
  for (const Procedure& p : enumerate_procedures(n)) {
    Scalar v = expected_length<Scalar>(p, priors);
    if (!best || v < best->value - tol ||
        (!(best->value < v - tol) && pool_sequence_less(p, best->procedure))) {
      best = OptimalResult<Scalar>{p, std::move(v)};
    }
  }
  return std::move(*best);
}

}  // namespace pooltest
