#pragma once

// Live execution of a strategy one test at a time, snapshots, and Monte Carlo
// simulation of whole strategies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pooltest/codec.hpp"
#include "pooltest/heuristics.hpp"
#include "pooltest/optimizer.hpp"
#include "pooltest/probability.hpp"
#include "pooltest/procedure.hpp"
#include "pooltest/random.hpp"
#include "pooltest/scalar.hpp"
#include "pooltest/zones.hpp"

namespace pooltest {

enum class StrategyKind { kNaive, kOptimal, kGreedy, kMetaprocedure, kPairing, kProcedure };

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kNaive: return "naive";
    case StrategyKind::kOptimal: return "optimal";
    case StrategyKind::kGreedy: return "greedy";
    case StrategyKind::kMetaprocedure: return "metaprocedure";
    case StrategyKind::kPairing: return "pairing";
    case StrategyKind::kProcedure: return "procedure";
  }
  return "?";
}

struct Strategy {
  StrategyKind kind = StrategyKind::kOptimal;
  int k = 2;                          ///< pairing block size
  std::uint64_t seed = 0;             ///< pairing shuffle seed
  std::optional<Procedure> procedure; ///< fixed tree for kProcedure

  static Strategy of(StrategyKind kind) {
    Strategy s;
    s.kind = kind;
    return s;
  }
  static Strategy naive() { return of(StrategyKind::kNaive); }
  static Strategy optimal() { return of(StrategyKind::kOptimal); }
  static Strategy greedy() { return of(StrategyKind::kGreedy); }
  static Strategy metaprocedure() { return of(StrategyKind::kMetaprocedure); }
  static Strategy pairing(int k, std::uint64_t seed) {
    Strategy s = of(StrategyKind::kPairing);
    s.k = k;
    s.seed = seed;
    return s;
  }
  static Strategy fixed(Procedure p) {
    Strategy s = of(StrategyKind::kProcedure);
    s.procedure = std::move(p);
    return s;
  }

  /// "naive", "optimal", "greedy", "metaprocedure", "pairing", "pairing(k)" or "pairing(k,seed)".
  static Strategy parse(std::string_view text) {
    if (text == "naive") return naive();
    if (text == "optimal") return optimal();
    if (text == "greedy") return greedy();
    if (text == "metaprocedure") return metaprocedure();
    if (text.starts_with("pairing")) {
      auto rest = text.substr(7);
      if (rest.empty()) return pairing(2, 0);
      if (rest.front() != '(' || rest.back() != ')') throw ParseError("bad pairing strategy '" + std::string(text) + "'");
      rest = rest.substr(1, rest.size() - 2);
      const auto comma = rest.find(',');
      auto num = [&](std::string_view s) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
          throw ParseError("bad pairing strategy '" + std::string(text) + "'");
        }
        return v;
      };
      const auto k = num(rest.substr(0, comma));
      if (k < 1 || k > static_cast<std::uint64_t>(kPairingLimit)) {
        throw UnsupportedSize("pairing block size " + std::to_string(k), kPairingLimit);
      }
      return pairing(static_cast<int>(k), comma == std::string_view::npos ? 0 : num(rest.substr(comma + 1)));
    }
    throw ParseError("unknown strategy '" + std::string(text) + "'");
  }

  std::string str() const {
    if (kind == StrategyKind::kPairing) return "pairing(" + std::to_string(k) + "," + std::to_string(seed) + ")";
    return std::string(to_string(kind));
  }
};

inline nlohmann::json to_json(const Strategy& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}};
  if (s.kind == StrategyKind::kPairing) {
    j["k"] = s.k;
    j["seed"] = s.seed;
  }
  if (s.kind == StrategyKind::kProcedure && s.procedure) j["procedure"] = encode(*s.procedure);
  return j;
}

inline Strategy strategy_from_json(const nlohmann::json& j) {
  if (j.is_string()) return Strategy::parse(j.get<std::string>());
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ParseError("strategy must be a string or an object with a 'kind'");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "procedure") {
    if (!j.contains("procedure") || !j["procedure"].is_string()) throw ParseError("procedure strategy needs 'procedure'");
    return Strategy::fixed(decode(j["procedure"].get<std::string>()));
  }
  Strategy s = Strategy::parse(kind);
  if (s.kind == StrategyKind::kPairing) {
    if (j.contains("k")) {
      if (!j["k"].is_number_integer()) throw ParseError("pairing 'k' must be an integer");
      s.k = j["k"].get<int>();
      if (s.k < 1) throw ArgumentError("block size must be at least 1");
      if (s.k > kPairingLimit) throw UnsupportedSize("pairing block size " + std::to_string(s.k), kPairingLimit);
    }
    if (j.contains("seed")) {
      const auto& seed = j["seed"];
      if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        throw ParseError("pairing 'seed' must be a non-negative integer");
      }
      s.seed = seed.get<std::uint64_t>();
    }
  }
  return s;
}

enum class TestResult { kNegative, kPositive };

inline std::string_view to_string(TestResult r) { return r == TestResult::kPositive ? "positive" : "negative"; }

inline TestResult parse_result(std::string_view text) {
  if (text == "negative" || text == "-" || text == "neg" || text == "0") return TestResult::kNegative;
  if (text == "positive" || text == "+" || text == "pos" || text == "1") return TestResult::kPositive;
  throw ParseError("result must be 'negative' or 'positive', got '" + std::string(text) + "'");
}

/// Priors with their evaluation mode; exact priors keep the rationals.
struct PriorVector {
  std::vector<double> values;
  std::optional<std::vector<Rational>> exact;

  static PriorVector of(std::vector<double> v) { return {std::move(v), std::nullopt}; }
  static PriorVector of(std::vector<Rational> v) {
    PriorVector p{to_doubles(v), std::move(v)};
    return p;
  }

  /// Decimal or fraction strings; any fraction (or force_exact) selects exact mode.
  static PriorVector parse(const std::vector<std::string>& items, bool force_exact = false) {
    std::vector<Rational> r;
    bool fraction = force_exact;
    for (const auto& s : items) {
      r.push_back(parse_rational(s));
      fraction = fraction || s.find('/') != std::string::npos;
    }
    if (fraction) return of(std::move(r));
    std::vector<double> d;
    for (const auto& s : items) {
      const auto first = s.find_first_not_of(" \t");
      const auto last = s.find_last_not_of(" \t");
      const std::string_view text =
          first == std::string::npos ? std::string_view{} : std::string_view(s).substr(first, last - first + 1);
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size()) throw ParseError("not a number: '" + s + "'");
      d.push_back(v);
    }
    return of(std::move(d));
  }

  int n() const noexcept { return static_cast<int>(values.size()); }
  EvalMode mode() const noexcept { return exact ? EvalMode::kExact : EvalMode::kFloat; }
  void check() const {
    if (exact) {
      check_priors(*exact);
    } else {
      check_priors(values);
    }
  }
};

inline nlohmann::json to_json(const PriorVector& p) {
  auto arr = nlohmann::json::array();
  if (p.exact) {
    for (const auto& r : *p.exact) arr.push_back(to_string(r));
  } else {
    for (double d : p.values) arr.push_back(d);
  }
  return arr;
}

/// Accepts numbers and numeric strings ("17/100", "0.17"); strings with a slash force exact mode.
inline PriorVector priors_from_json(const nlohmann::json& j, bool force_exact = false) {
  if (!j.is_array() || j.empty()) throw ArgumentError("priors must be a non-empty array");
  std::vector<std::string> items;
  bool all_numbers = true;
  for (const auto& v : j) {
    if (v.is_number()) {
      items.push_back(format_double(v.get<double>()));
    } else if (v.is_string()) {
      all_numbers = false;
      items.push_back(v.get<std::string>());
    } else {
      throw ParseError("priors must be numbers or numeric strings");
    }
  }
  PriorVector p;
  if (all_numbers && !force_exact) {
    std::vector<double> d;
    for (const auto& v : j) d.push_back(v.get<double>());
    p = PriorVector::of(std::move(d));
  } else {
    p = PriorVector::parse(items, force_exact);
  }
  p.check();
  return p;
}

/// Encoding, tree and expected length of a procedure at the given priors.
inline nlohmann::json procedure_report(const Procedure& proc, const PriorVector& priors) {
  nlohmann::json out{{"n", proc.n()}, {"mode", to_string(priors.mode())}};
  out["procedure"] = encode(proc);
  out["tree"] = to_json(proc)["tree"];
  if (priors.exact) {
    const Rational v = expected_length(proc, *priors.exact);
    out["expected_length"] = to_double(v);
    out["expected_length_exact"] = to_string(v);
  } else {
    out["expected_length"] = expected_length(proc, priors.values);
  }
  return out;
}

struct SessionOptions {
  ZoneProvider zones = default_zone_map;
};

struct HistoryEntry {
  Mask pool = 0;  ///< over all n samples
  TestResult result = TestResult::kNegative;
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// One block of samples driven by a fixed tree or by the lazy greedy chooser.
class SessionBlock {
 public:
  SessionBlock(std::vector<int> samples, Procedure proc)
      : samples_(std::move(samples)), set_(OutcomeSet::universe(static_cast<int>(samples_.size()))),
        procedure_(std::move(proc)) {}
  SessionBlock(std::vector<int> samples, std::shared_ptr<const GreedyChooser<double>> chooser)
      : samples_(std::move(samples)), set_(OutcomeSet::universe(static_cast<int>(samples_.size()))),
        chooser_(std::move(chooser)) {}

  const std::vector<int>& samples() const noexcept { return samples_; }
  const OutcomeSet& outcomes() const noexcept { return set_; }
  int size() const noexcept { return static_cast<int>(samples_.size()); }
  bool materialized() const noexcept { return procedure_.has_value(); }
  const std::optional<Procedure>& procedure() const noexcept { return procedure_; }
  std::size_t node() const noexcept { return node_; }

  bool complete() const {
    if (procedure_) return procedure_->at(node_).is_leaf();
    return set_.is_singleton();
  }

  Mask local_pool() const {
    if (procedure_) return procedure_->at(node_).pool;
    return chooser_->choose(set_);
  }

  Mask local_outcome() const { return procedure_ ? procedure_->at(node_).outcome : set_.first(); }

  void advance(Mask local_pool, TestResult r) {
    auto [neg, pos] = set_.split(local_pool);
    set_ = r == TestResult::kPositive ? pos : neg;
    if (procedure_) {
      const auto& nd = procedure_->at(node_);
      node_ = static_cast<std::size_t>(r == TestResult::kPositive ? nd.pos : nd.neg);
    }
    if (set_.is_empty()) throw StateError("result is inconsistent with the block's procedure");
  }

  /// Tree for the rest of this block (the current subtree, or the greedy tree from here).
  Procedure remaining_tree() const {
    if (procedure_) return procedure_->subtree(node_);
    Procedure::Builder b(size());
    auto rec = [&](auto&& self, const OutcomeSet& s) -> void {
      if (s.is_singleton()) {
        b.leaf(s.first());
        return;
      }
      const Mask pool = chooser_->choose(s);
      auto [neg, pos] = s.split(pool);
      b.node(pool, [&] { self(self, neg); }, [&] { self(self, pos); });
    };
    rec(rec, set_);
    return std::move(b).finish();
  }

  /// Expected remaining tests given the surviving outcomes.
  double expected_remaining(const std::vector<double>& block_priors) const {
    if (complete()) return 0;
    check_explicit_limit(size());
    const auto lv = length_vector(remaining_tree());
    const auto probs = outcome_probabilities(block_priors);
    double num = 0;
    double den = 0;
    set_.for_each([&](Mask o) {
      num += probs[o] * lv.depths[o];
      den += probs[o];
    });
    if (den > 0) return num / den;
    // Zero-probability branch: average uniformly over the surviving outcomes.
    set_.for_each([&](Mask o) { num += lv.depths[o]; });
    return num / static_cast<double>(set_.size());
  }

  Mask to_global(Mask local) const {
    Mask g = 0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if ((local >> i) & 1) g |= Mask{1} << samples_[i];
    }
    return g;
  }

  std::optional<Mask> to_local(Mask global) const {
    Mask l = 0;
    Mask covered = 0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const Mask bit = Mask{1} << samples_[i];
      covered |= bit;
      if (global & bit) l |= Mask{1} << i;
    }
    if ((global & ~covered) != 0) return std::nullopt;
    return l;
  }

 private:
  std::vector<int> samples_;  ///< 0-based global indices
  OutcomeSet set_;
  std::optional<Procedure> procedure_;
  std::size_t node_ = 0;
  std::shared_ptr<const GreedyChooser<double>> chooser_;
};

struct Complete {
  Outcome outcome;
};

using NextStep = std::variant<Pool, Complete>;

class Session {
 public:
  Session(std::string id, PriorVector priors, Strategy strategy, const SessionOptions& opt = {})
      : id_(std::move(id)), priors_(std::move(priors)), strategy_(std::move(strategy)) {
    priors_.check();
    const int n = priors_.n();
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    switch (strategy_.kind) {
      case StrategyKind::kNaive: {
        blocks_.emplace_back(all, naive_procedure(n));
        break;
      }
      case StrategyKind::kOptimal: {
        if (n > kOptimizerLimit) throw UnsupportedSize("optimal strategy over " + std::to_string(n) + " samples", kOptimizerLimit);
        Procedure p = priors_.exact ? find_optimal(*priors_.exact).procedure : find_optimal(priors_.values).procedure;
        blocks_.emplace_back(all, std::move(p));
        break;
      }
      case StrategyKind::kGreedy: {
        blocks_.emplace_back(all, std::make_shared<const GreedyChooser<double>>(priors_.values));
        break;
      }
      case StrategyKind::kMetaprocedure: {
        if (n > kZoneLimit) throw UnsupportedSize("metaprocedure over " + std::to_string(n) + " samples", kZoneLimit);
        const ZoneMap& zm = opt.zones(n);
        blocks_.emplace_back(all, priors_.exact ? metaprocedure_at(zm, *priors_.exact) : metaprocedure_at(zm, priors_.values));
        break;
      }
      case StrategyKind::kPairing: {
        const auto plan = pairing_strategy(priors_.values, strategy_.k, strategy_.seed, opt.zones);
        for (const auto& b : plan.blocks) blocks_.emplace_back(b.samples, b.procedure);
        break;
      }
      case StrategyKind::kProcedure: {
        if (!strategy_.procedure) throw ArgumentError("procedure strategy without a tree");
        if (strategy_.procedure->n() != n) throw ArgumentError("procedure and prior vector sizes differ");
        const auto report = validate(*strategy_.procedure, n);
        if (!report.ok()) throw ArgumentError("invalid procedure: " + report.str());
        blocks_.emplace_back(all, *strategy_.procedure);
        break;
      }
    }
    skip_complete_blocks();
  }

  /// Individual testing of every sample, in index order.
  static Procedure naive_procedure(int n) {
    Procedure::Builder b(n);
    auto rec = [&](auto&& self, int i, Mask acc) -> void {
      if (i == n) {
        b.leaf(acc);
        return;
      }
      const Mask bit = Mask{1} << i;
      b.node(bit, [&] { self(self, i + 1, acc); }, [&] { self(self, i + 1, acc | bit); });
    };
    rec(rec, 0, 0);
    return std::move(b).finish();
  }

  const std::string& id() const noexcept { return id_; }
  int n() const noexcept { return priors_.n(); }
  const PriorVector& priors() const noexcept { return priors_; }
  const Strategy& strategy() const noexcept { return strategy_; }
  const std::vector<HistoryEntry>& history() const noexcept { return history_; }
  const std::vector<SessionBlock>& blocks() const noexcept { return blocks_; }
  std::size_t tests() const noexcept { return history_.size(); }
  bool complete() const noexcept { return current_ >= blocks_.size(); }

  NextStep next() const {
    if (complete()) return Complete{outcome()};
    const auto& b = blocks_[current_];
    return Pool(n(), b.to_global(b.local_pool()));
  }

  std::optional<Pool> next_pool() const {
    if (complete()) return std::nullopt;
    return std::get<Pool>(next());
  }

  /// Final outcome; only valid when complete.
  Outcome outcome() const {
    if (!complete()) throw StateError("session is still running");
    Mask m = 0;
    for (const auto& b : blocks_) m |= b.to_global(b.local_outcome());
    return Outcome(n(), m);
  }

  /// Samples whose status is already known (clean, infected).
  std::pair<Mask, Mask> resolved() const {
    Mask clean = 0;
    Mask infected = 0;
    for (const auto& b : blocks_) {
      const Mask full = full_mask(b.size());
      const Mask all = b.outcomes().infected_everywhere();
      const Mask any = b.outcomes().infected_somewhere();
      clean |= b.to_global(full & ~any);
      infected |= b.to_global(all);
    }
    return {clean, infected};
  }

  void record(TestResult r) {
    if (complete()) throw StateError("session " + id_ + " is already complete");
    auto& b = blocks_[current_];
    const Mask local = b.local_pool();
    b.advance(local, r);
    history_.push_back({b.to_global(local), r});
    skip_complete_blocks();
  }

  /// Conditional expectation of the remaining number of tests.
  double expected_remaining() const {
    double total = 0;
    for (std::size_t i = current_; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      std::vector<double> bp;
      for (int s : b.samples()) bp.push_back(priors_.values[static_cast<std::size_t>(s)]);
      total += b.expected_remaining(bp);
    }
    return total;
  }

  /// Tree for the whole strategy when it is a single materialized block.
  std::optional<Procedure> procedure() const {
    if (blocks_.size() == 1 && blocks_[0].materialized()) return blocks_[0].procedure();
    return std::nullopt;
  }

 private:
  void skip_complete_blocks() {
    while (current_ < blocks_.size() && blocks_[current_].complete()) ++current_;
  }

  std::string id_;
  PriorVector priors_;
  Strategy strategy_;
  std::vector<SessionBlock> blocks_;
  std::size_t current_ = 0;
  std::vector<HistoryEntry> history_;
};

inline nlohmann::json to_json(const Session& s) {
  nlohmann::json j;
  j["id"] = s.id();
  j["n"] = s.n();
  j["priors"] = to_json(s.priors());
  j["mode"] = to_string(s.priors().mode());
  j["strategy"] = to_json(s.strategy());
  auto hist = nlohmann::json::array();
  for (const auto& h : s.history()) hist.push_back({{"pool", mask_indices(h.pool)}, {"result", to_string(h.result)}});
  j["history"] = hist;
  j["tests"] = s.tests();
  const auto [clean, infected] = s.resolved();
  std::string status(static_cast<std::size_t>(s.n()), '?');
  for (int i = 0; i < s.n(); ++i) {
    if ((clean >> i) & 1) status[static_cast<std::size_t>(i)] = '0';
    if ((infected >> i) & 1) status[static_cast<std::size_t>(i)] = '1';
  }
  j["samples"] = status;
  if (s.complete()) {
    j["status"] = "complete";
    j["outcome"] = s.outcome().str();
    j["next_pool"] = nullptr;
    j["expected_remaining"] = 0.0;
  } else {
    j["status"] = "running";
    j["next_pool"] = s.next_pool()->indices();
    j["expected_remaining"] = s.expected_remaining();
  }
  auto blocks = nlohmann::json::array();
  for (const auto& b : s.blocks()) {
    nlohmann::json bj{{"samples", nlohmann::json::array()}, {"outcomes", nlohmann::json::array()}};
    for (int i : b.samples()) bj["samples"].push_back(i + 1);
    b.outcomes().for_each([&](Mask o) { bj["outcomes"].push_back(Outcome::to_bit_string(o, b.size())); });
    if (b.materialized()) bj["remaining"] = encode(b.procedure()->subtree(b.node()));
    blocks.push_back(std::move(bj));
  }
  j["blocks"] = blocks;
  return j;
}

/// Rebuilds a session from a snapshot by replaying its history.
inline Session session_from_json(const nlohmann::json& j, const SessionOptions& opt = {}) {
  if (!j.is_object() || !j.contains("id") || !j.contains("priors") || !j.contains("strategy") || !j.contains("history")) {
    throw ParseError("session snapshot needs id, priors, strategy and history");
  }
  const bool exact = j.value("mode", std::string("float")) == "exact";
  Session s(j["id"].get<std::string>(), priors_from_json(j["priors"], exact), strategy_from_json(j["strategy"]), opt);
  for (const auto& h : j["history"]) {
    const auto expected = s.next_pool();
    if (!expected) throw ParseError("snapshot history is longer than the procedure");
    const auto pool = Pool::from_indices(s.n(), h.at("pool").get<std::vector<int>>());
    if (!(pool == *expected)) throw ParseError("snapshot history does not match the strategy");
    s.record(parse_result(h.at("result").get<std::string>()));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Simulation.

struct SimulationOptions {
  int threads = 0;  ///< 0 picks hardware concurrency
  SessionOptions session;
};

struct SimulationReport {
  int n = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::string strategy;
  bool uniform_priors = false;
  double mean_tests = 0;
  double std_error = 0;
  std::map<int, std::uint64_t> histogram;  ///< tests -> trials
};

inline nlohmann::json to_json(const SimulationReport& r) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : r.histogram) hist[std::to_string(k)] = v;
  return {{"n", r.n},
          {"trials", r.trials},
          {"seed", r.seed},
          {"strategy", r.strategy},
          {"prior_distribution", r.uniform_priors ? "uniform" : "fixed"},
          {"mean_tests", r.mean_tests},
          {"std_error", r.std_error},
          {"histogram", hist}};
}

namespace detail {

inline Mask draw_truth(Rng& rng, const std::vector<double>& p) {
  Mask m = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (uniform01(rng) < p[i]) m |= Mask{1} << i;
  }
  return m;
}

inline int run_to_completion(Session s, Mask truth) {
  while (auto pool = s.next_pool()) {
    s.record((pool->mask() & truth) != 0 ? TestResult::kPositive : TestResult::kNegative);
  }
  if (s.outcome().bits() != truth) throw StateError("session finished at the wrong outcome");
  return static_cast<int>(s.tests());
}

inline SimulationReport simulate_impl(int n, std::optional<PriorVector> fixed, const Strategy& strategy,
                                      std::uint64_t trials, std::uint64_t seed, const SimulationOptions& opt) {
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  std::optional<Session> prototype;
  if (fixed) prototype.emplace("sim", *fixed, strategy, opt.session);
  std::vector<std::uint16_t> counts(trials);
  auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t t = begin; t < end; ++t) {
      Rng rng(derive_seed(seed, t));
      if (prototype) {
        counts[t] = static_cast<std::uint16_t>(run_to_completion(*prototype, draw_truth(rng, fixed->values)));
      } else {
        std::vector<double> p(static_cast<std::size_t>(n));
        for (auto& x : p) x = uniform01(rng);
        Session s("sim", PriorVector::of(p), strategy, opt.session);
        counts[t] = static_cast<std::uint16_t>(run_to_completion(std::move(s), draw_truth(rng, p)));
      }
    }
  };
  unsigned threads = opt.threads > 0 ? static_cast<unsigned>(opt.threads) : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, (trials + 1023) / 1024));
  if (threads <= 1) {
    run_range(0, trials);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
          try {
            run_range(trials * w / threads, trials * (w + 1) / threads);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  SimulationReport r;
  r.n = n;
  r.trials = trials;
  r.seed = seed;
  r.strategy = strategy.str();
  r.uniform_priors = !fixed;
  double sum = 0;
  double sq = 0;
  for (auto c : counts) {
    sum += c;
    sq += static_cast<double>(c) * c;
    ++r.histogram[c];
  }
  const double t = static_cast<double>(trials);
  r.mean_tests = sum / t;
  const double var = trials > 1 ? std::max(0.0, (sq - sum * sum / t) / (t - 1)) : 0.0;
  r.std_error = std::sqrt(var / t);
  return r;
}

}  // namespace detail

/// Draws ground truths from fixed priors and runs the strategy to completion in each trial.
inline SimulationReport simulate(const PriorVector& priors, const Strategy& strategy, std::uint64_t trials,
                                 std::uint64_t seed, const SimulationOptions& opt = {}) {
  priors.check();
  return detail::simulate_impl(priors.n(), priors, strategy, trials, seed, opt);
}

/// Re-draws priors uniformly from the cube in each trial, then a ground truth from them.
inline SimulationReport simulate_uniform(int n, const Strategy& strategy, std::uint64_t trials, std::uint64_t seed,
                                         const SimulationOptions& opt = {}) {
  check_sample_count(n);
  if (strategy.kind == StrategyKind::kProcedure) throw ArgumentError("a fixed procedure needs fixed priors");
  return detail::simulate_impl(n, std::nullopt, strategy, trials, seed, opt);
}

}  // namespace pooltest
