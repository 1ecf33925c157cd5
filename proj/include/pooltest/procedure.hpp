#pragma once

// Testing procedures: binary decision trees whose internal nodes carry pools
// and whose leaves carry outcomes. The negative child of a node receives the
// outcomes in which every pool member is clean.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pooltest/core.hpp"
#include "pooltest/outcome_set.hpp"

namespace pooltest {

struct ProcedureNode {
  Mask pool = 0;         ///< internal nodes only
  Mask outcome = 0;      ///< leaves only
  std::int32_t neg = -1;
  std::int32_t pos = -1;

  bool is_leaf() const noexcept { return neg < 0; }
  friend bool operator==(const ProcedureNode&, const ProcedureNode&) = default;
};

/// Immutable tree stored in preorder (node, negative subtree, positive subtree).
class Procedure {
 public:
  Procedure() = default;

  static Procedure leaf(int n, Mask outcome) {
    check_sample_count(n);
    Procedure p;
    p.n_ = n;
    p.nodes_.push_back({0, outcome, -1, -1});
    return p;
  }

  static Procedure node(Mask pool, const Procedure& neg, const Procedure& pos) {
    if (neg.n_ != pos.n_) throw ArgumentError("children over different sample counts");
    Procedure p;
    p.n_ = neg.n_;
    p.nodes_.reserve(1 + neg.nodes_.size() + pos.nodes_.size());
    p.nodes_.push_back({pool, 0, 1, static_cast<std::int32_t>(1 + neg.nodes_.size())});
    p.append(neg, 1);
    p.append(pos, static_cast<std::int32_t>(1 + neg.nodes_.size()));
    return p;
  }

  int n() const noexcept { return n_; }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const ProcedureNode& at(std::size_t i) const { return nodes_.at(i); }
  const ProcedureNode& root() const { return nodes_.at(0); }
  const std::vector<ProcedureNode>& nodes() const noexcept { return nodes_; }

  std::size_t leaf_count() const noexcept {
    std::size_t c = 0;
    for (const auto& nd : nodes_) c += nd.is_leaf() ? 1 : 0;
    return c;
  }

  /// Copy of the subtree rooted at node `i`.
  Procedure subtree(std::size_t i) const {
    Procedure p;
    p.n_ = n_;
    const auto base = static_cast<std::int32_t>(i);
    const std::size_t end = subtree_end(i);
    p.nodes_.reserve(end - i);
    for (std::size_t k = i; k < end; ++k) {
      ProcedureNode nd = nodes_[k];
      if (!nd.is_leaf()) {
        nd.neg -= base;
        nd.pos -= base;
      }
      p.nodes_.push_back(nd);
    }
    return p;
  }

  friend bool operator==(const Procedure&, const Procedure&) = default;

  /// Appends nodes in preorder; used by algorithms that grow trees top-down.
  class Builder {
   public:
    explicit Builder(int n) : n_(n) { check_sample_count(n); }

    std::int32_t leaf(Mask outcome) {
      nodes_.push_back({0, outcome, -1, -1});
      return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    /// Emits an internal node; `neg` and `pos` must append exactly one subtree each.
    template <class NegF, class PosF>
    std::int32_t node(Mask pool, NegF&& neg, PosF&& pos) {
      const auto idx = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back({pool, 0, -1, -1});
      nodes_[static_cast<std::size_t>(idx)].neg = static_cast<std::int32_t>(nodes_.size());
      neg();
      nodes_[static_cast<std::size_t>(idx)].pos = static_cast<std::int32_t>(nodes_.size());
      pos();
      return idx;
    }

    Procedure finish() && {
      Procedure p;
      p.n_ = n_;
      p.nodes_ = std::move(nodes_);
      return p;
    }

   private:
    int n_;
    std::vector<ProcedureNode> nodes_;
  };

 private:
  void append(const Procedure& other, std::int32_t offset) {
    for (ProcedureNode nd : other.nodes_) {
      if (!nd.is_leaf()) {
        nd.neg += offset;
        nd.pos += offset;
      }
      nodes_.push_back(nd);
    }
  }

  std::size_t subtree_end(std::size_t i) const {
    std::size_t pending = 1;
    std::size_t k = i;
    while (pending > 0) {
      pending += nodes_[k].is_leaf() ? 0 : 2;
      --pending;
      ++k;
    }
    return k;
  }

  int n_ = 0;
  std::vector<ProcedureNode> nodes_;
};

/// Walks the tree against a ground truth: a pool tests positive iff it
/// contains an infected sample. Returns the reached leaf outcome and the
/// number of tests performed.
inline std::pair<Mask, int> execute(const Procedure& proc, Mask truth) {
  std::size_t i = 0;
  int tests = 0;
  while (!proc.at(i).is_leaf()) {
    const auto& nd = proc.at(i);
    i = static_cast<std::size_t>((nd.pool & truth) != 0 ? nd.pos : nd.neg);
    ++tests;
  }
  return {proc.at(i).outcome, tests};
}

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string str() const {
    std::string s;
    for (const auto& v : violations) {
      if (!s.empty()) s += "; ";
      s += v;
    }
    return s;
  }
};

namespace detail {

inline void validate_rec(const Procedure& proc, std::size_t i, const OutcomeSet& set,
                         const std::string& path, ValidationReport& report) {
  const auto& nd = proc.at(i);
  if (nd.is_leaf()) {
    if (!set.is_singleton() || set.first() != nd.outcome) {
      report.violations.push_back(path + ": leaf " + Outcome::to_bit_string(nd.outcome, proc.n()) +
                                  " but node-set is " + set.str());
    }
    return;
  }
  if (nd.pool == 0 || (nd.pool & ~full_mask(proc.n())) != 0) {
    report.violations.push_back(path + ": pool is empty or has members beyond n");
    return;
  }
  auto [neg, pos] = set.split(nd.pool);
  if (neg.is_empty() || pos.is_empty()) {
    std::string members;
    for (int idx : mask_indices(nd.pool)) members += (members.empty() ? "" : ",") + std::to_string(idx);
    report.violations.push_back(path + ": pool {" + members +
                                "} leaves one child with an empty node-set");
  }
  validate_rec(proc, static_cast<std::size_t>(nd.neg), neg, path + ".neg", report);
  validate_rec(proc, static_cast<std::size_t>(nd.pos), pos, path + ".pos", report);
}

}  // namespace detail

/// Checks every procedure invariant against the root universe over n samples.
inline ValidationReport validate(const Procedure& proc, int n) {
  ValidationReport report;
  if (proc.empty()) {
    report.violations.push_back("empty procedure");
    return report;
  }
  if (proc.n() != n) {
    report.violations.push_back("procedure is over " + std::to_string(proc.n()) +
                                " samples, expected " + std::to_string(n));
    return report;
  }
  detail::validate_rec(proc, 0, OutcomeSet::universe(n), "root", report);
  return report;
}

/// Validates against an arbitrary root node-set (sub-procedures).
inline ValidationReport validate(const Procedure& proc, const OutcomeSet& root_set) {
  ValidationReport report;
  if (proc.empty() || proc.n() != root_set.n()) {
    report.violations.push_back("procedure and node-set disagree on sample count");
    return report;
  }
  detail::validate_rec(proc, 0, root_set, "root", report);
  return report;
}

/// Relabels every pool and leaf: sample i goes to sigma(i).
inline Procedure apply_permutation(const Procedure& proc, const Permutation& sigma) {
  if (sigma.size() != proc.n()) throw ArgumentError("permutation size does not match procedure");
  Procedure::Builder b(proc.n());
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    const auto& nd = proc.at(i);
    if (nd.is_leaf()) {
      b.leaf(sigma.apply(nd.outcome));
      return;
    }
    b.node(
        sigma.apply(nd.pool), [&] { rec(static_cast<std::size_t>(nd.neg)); },
        [&] { rec(static_cast<std::size_t>(nd.pos)); });
  };
  rec(0);
  return std::move(b).finish();
}

namespace detail {

struct TreeNode;
using TreePtr = std::shared_ptr<const TreeNode>;

struct TreeNode {
  Mask pool = 0;
  Mask outcome = 0;
  TreePtr neg;
  TreePtr pos;
  bool is_leaf() const noexcept { return !neg; }
};

inline TreePtr to_tree(const Procedure& proc, std::size_t i) {
  const auto& nd = proc.at(i);
  if (nd.is_leaf()) return std::make_shared<TreeNode>(TreeNode{0, nd.outcome, nullptr, nullptr});
  return std::make_shared<TreeNode>(TreeNode{nd.pool, 0, to_tree(proc, static_cast<std::size_t>(nd.neg)),
                                             to_tree(proc, static_cast<std::size_t>(nd.pos))});
}

// Returns a tree whose pools are reduced to undecided samples of their node-sets
// and in which no node has two equal-pool children whose pool precedes its own.
inline TreePtr canonical_reduced(const TreePtr& t, const OutcomeSet& set, int depth_guard) {
  if (t->is_leaf()) return t;
  if (depth_guard <= 0) throw ResourceError("canonicalize did not converge");
  const Mask pool = t->pool & set.undecided();
  auto [neg_set, pos_set] = set.split(pool);
  TreePtr a = canonical_reduced(t->neg, neg_set, depth_guard - 1);
  TreePtr b = canonical_reduced(t->pos, pos_set, depth_guard - 1);
  if (!a->is_leaf() && !b->is_leaf() && a->pool == b->pool && pool_less(a->pool, pool)) {
    // Interchange: (T1; (T2; A, B), (T2; C, D)) -> (T2; (T1; A, C), (T1; B, D)).
    const Mask top = a->pool;
    auto left = std::make_shared<TreeNode>(TreeNode{pool, 0, a->neg, b->neg});
    auto right = std::make_shared<TreeNode>(TreeNode{pool, 0, a->pos, b->pos});
    auto swapped = std::make_shared<TreeNode>(TreeNode{top, 0, left, right});
    return canonical_reduced(swapped, set, depth_guard - 1);
  }
  if (a == t->neg && b == t->pos && pool == t->pool) return t;
  return std::make_shared<TreeNode>(TreeNode{pool, 0, std::move(a), std::move(b)});
}

inline void emit_extended(const TreePtr& t, const OutcomeSet& set, Procedure::Builder& b) {
  if (t->is_leaf()) {
    b.leaf(t->outcome);
    return;
  }
  const Mask clean = full_mask(set.n()) & ~set.infected_somewhere();
  auto [neg_set, pos_set] = set.split(t->pool);
  b.node(
      t->pool | clean, [&] { emit_extended(t->neg, neg_set, b); },
      [&] { emit_extended(t->pos, pos_set, b); });
}

}  // namespace detail

/// Normal form with identical length vector: equal-pool sibling pairs are
/// interchanged with their parent when their pool precedes the parent's in the
/// core order, and every pool is extended with the samples known clean at its node.
inline Procedure canonicalize(const Procedure& proc) {
  const auto report = validate(proc, proc.n());
  if (!report.ok()) throw ArgumentError("canonicalize requires a valid procedure: " + report.str());
  const auto universe = OutcomeSet::universe(proc.n());
  auto reduced = detail::canonical_reduced(detail::to_tree(proc, 0), universe, 1 << 20);
  Procedure::Builder b(proc.n());
  detail::emit_extended(reduced, universe, b);
  return std::move(b).finish();
}

}  // namespace pooltest
