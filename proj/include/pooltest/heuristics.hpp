#pragma once

// Scalable strategies: the information-gain greedy rule and the pairing
// (random blocks) heuristic.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pooltest/core.hpp"
#include "pooltest/optimizer.hpp"
#include "pooltest/outcome_set.hpp"
#include "pooltest/probability.hpp"
#include "pooltest/procedure.hpp"
#include "pooltest/random.hpp"
#include "pooltest/scalar.hpp"
#include "pooltest/zones.hpp"

namespace pooltest {

/// Largest n for the greedy heuristic (one pass over all 2^n - 1 pools per node).
inline constexpr int kGreedyLimit = kExplicitEvaluationLimit;

namespace detail {

// cost(S, part) = f + g where, relative to the outcomes of `part`,
//   f = number of samples infected in S but clean in some outcome,
//   g = 1 if some sample clean in S is infected in some outcome.
inline int cost_from(Mask s, Mask all_infected, Mask any_infected, Mask full) {
  const int f = std::popcount(s & ~all_infected & full);
  const int g = (~s & any_infected & full) != 0 ? 1 : 0;
  return f + g;
}

}  // namespace detail

/// Remaining-uncertainty cost of outcome `s` within `outcomes`.
inline int cost(Mask s, const OutcomeSet& outcomes) {
  if ((s & ~full_mask(outcomes.n())) != 0 || !outcomes.contains(s)) {
    throw ArgumentError("outcome is not in the set");
  }
  return detail::cost_from(s, outcomes.infected_everywhere(), outcomes.infected_somewhere(),
                           full_mask(outcomes.n()));
}

inline int cost(const Outcome& s, const OutcomeSet& outcomes) {
  if (s.n() != outcomes.n()) throw ArgumentError("outcome and set sizes differ");
  return cost(s.bits(), outcomes);
}

namespace detail {

template <class Scalar>
Scalar gain_with(Mask pool, const OutcomeSet& outcomes, const std::vector<Scalar>& probs) {
  auto [neg, pos] = outcomes.split(pool);
  if (neg.is_empty() || pos.is_empty()) return Scalar(0);
  const Mask full = full_mask(outcomes.n());
  const Mask all = outcomes.infected_everywhere();
  const Mask any = outcomes.infected_somewhere();
  Scalar total = 0;
  for (const OutcomeSet* part : {&neg, &pos}) {
    const Mask part_all = part->infected_everywhere();
    const Mask part_any = part->infected_somewhere();
    part->for_each([&](Mask s) {
      const int before = cost_from(s, all, any, full);
      if (before == 0) return;
      const int after = cost_from(s, part_all, part_any, full);
      total += Scalar(1 - Scalar(after) / Scalar(before)) * probs[s];
    });
  }
  return total;
}

}  // namespace detail

/// Information gain of testing `pool` on `outcomes`: summed over both parts of
/// (1 - cost(S, part) / cost(S, outcomes)) * Pr(S). Outcomes with zero cost
/// contribute nothing; a pool leaving one part empty has gain 0.
template <class Scalar>
Scalar gain(Mask pool, const OutcomeSet& outcomes, const std::vector<Scalar>& priors) {
  check_priors(priors);
  if (outcomes.n() != static_cast<int>(priors.size())) throw ArgumentError("outcome set and priors differ in n");
  if (pool == 0) throw ArgumentError("pool must be non-empty");
  if ((pool & ~full_mask(outcomes.n())) != 0) throw ArgumentError("pool has members beyond n");
  return detail::gain_with(pool, outcomes, outcome_probabilities(priors));
}

template <class Scalar>
using GainTable = std::vector<std::pair<Mask, Scalar>>;

/// Gain of every pool over [n], in core pool order.
template <class Scalar>
GainTable<Scalar> gain_table(const OutcomeSet& outcomes, const std::vector<Scalar>& priors) {
  check_priors(priors);
  if (outcomes.n() != static_cast<int>(priors.size())) throw ArgumentError("outcome set and priors differ in n");
  const auto probs = outcome_probabilities(priors);
  GainTable<Scalar> table;
  for (Mask pool : pools_in_order(full_mask(outcomes.n()))) {
    table.emplace_back(pool, detail::gain_with(pool, outcomes, probs));
  }
  return table;
}

/// Picks the greedy pool at a node; shared by greedy_procedure and lazy sessions.
template <class Scalar>
class GreedyChooser {
 public:
  explicit GreedyChooser(std::vector<Scalar> priors) : priors_(std::move(priors)) {
    check_priors(priors_);
    const int n = static_cast<int>(priors_.size());
    if (n > kGreedyLimit) {
      throw UnsupportedSize("greedy heuristic over " + std::to_string(n) + " samples", kGreedyLimit);
    }
    probs_ = outcome_probabilities(priors_);
    pools_ = pools_in_order(full_mask(n));
  }

  int n() const noexcept { return static_cast<int>(priors_.size()); }
  const std::vector<Scalar>& priors() const noexcept { return priors_; }

  /// Highest-gain informative pool; the earliest in core order among equal gains.
  Mask choose(const OutcomeSet& outcomes) const {
    if (outcomes.size() < 2) throw ArgumentError("no test is needed on a decided node");
    const Scalar tol = TieTolerance<Scalar>::value();
    Mask best = 0;
    Scalar best_gain = 0;
    for (Mask pool : pools_) {
      auto neg = outcomes.negative_part(pool);
      if (neg.is_empty() || neg == outcomes) continue;
      Scalar g = detail::gain_with(pool, outcomes, probs_);
      if (best == 0 || g > best_gain + tol) {
        best = pool;
        best_gain = std::move(g);
      }
    }
    return best;
  }

 private:
  std::vector<Scalar> priors_;
  std::vector<Scalar> probs_;
  std::vector<Mask> pools_;
};

/// Full greedy tree: argmax-gain pool at every node, down to singletons.
template <class Scalar>
Procedure greedy_procedure(const std::vector<Scalar>& priors) {
  GreedyChooser<Scalar> chooser(priors);
  Procedure::Builder b(chooser.n());
  auto rec = [&](auto&& self, const OutcomeSet& s) -> void {
    if (s.is_singleton()) {
      b.leaf(s.first());
      return;
    }
    const Mask pool = chooser.choose(s);
    auto [neg, pos] = s.split(pool);
    b.node(pool, [&] { self(self, neg); }, [&] { self(self, pos); });
  };
  rec(rec, OutcomeSet::universe(chooser.n()));
  return std::move(b).finish();
}

// ---------------------------------------------------------------------------
// Pairing heuristic.

/// Largest block size, bounded by the available zone maps.
inline constexpr int kPairingLimit = kZoneLimit;

/// Zone map for block size k.
using ZoneProvider = std::function<const ZoneMap&(int k)>;

/// Process-wide cache of default-resolution zone maps, computed on first use.
inline const ZoneMap& default_zone_map(int k) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<ZoneMap>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[k];
  if (!slot) slot = std::make_unique<ZoneMap>(compute_metaprocedure(k));
  return *slot;
}

struct PairingBlock {
  std::vector<int> samples;  ///< 0-based sample indices, ascending
  std::vector<double> priors;
  Procedure procedure;       ///< over the block's own samples 1..size
  double expected_tests = 0;
};

struct PairingPlan {
  int n = 0;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<PairingBlock> blocks;

  double expected_tests() const {
    double t = 0;
    for (const auto& b : blocks) t += b.expected_tests;
    return t;
  }
};

enum class ZoneEvaluation {
  kMetaprocedure,  ///< least expected length among the map's procedures at the exact point
  kNearestGrid     ///< procedure of the nearest grid point
};

/// Splits the samples into blocks of size k after a seeded shuffle (the last
/// block may be smaller) and runs the block-size metaprocedure on each block.
inline PairingPlan pairing_strategy(const std::vector<double>& priors, int k, std::uint64_t seed,
                                    const ZoneProvider& zones = default_zone_map,
                                    ZoneEvaluation how = ZoneEvaluation::kMetaprocedure) {
  check_priors(priors);
  if (k < 1) throw ArgumentError("block size must be at least 1");
  if (k > kPairingLimit) throw UnsupportedSize("pairing block size " + std::to_string(k), kPairingLimit);
  const int n = static_cast<int>(priors.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  portable_shuffle(order, rng);
  PairingPlan plan;
  plan.n = n;
  plan.k = k;
  plan.seed = seed;
  for (int start = 0; start < n; start += k) {
    PairingBlock b;
    b.samples.assign(order.begin() + start, order.begin() + std::min(n, start + k));
    std::sort(b.samples.begin(), b.samples.end());
    for (int s : b.samples) b.priors.push_back(priors[static_cast<std::size_t>(s)]);
    const int size = static_cast<int>(b.samples.size());
    const ZoneMap& zm = zones(size);
    if (zm.n != size) throw NotFound("no zone map for block size " + std::to_string(size));
    b.procedure = how == ZoneEvaluation::kMetaprocedure ? metaprocedure_at(zm, b.priors) : lookup(zm, b.priors);
    b.expected_tests = expected_length(b.procedure, b.priors);
    plan.blocks.push_back(std::move(b));
  }
  return plan;
}

}  // namespace pooltest
