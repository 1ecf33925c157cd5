#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "pooltest/core.hpp"

namespace pooltest {

/// Largest sample count for which outcome sets (2^n bits) are materialized.
inline constexpr int kMaxSetSamples = 16;

namespace detail {

// kNegativeLow[t] has bit j set iff j & t == 0, for j in [0, 64).
inline constexpr std::array<std::uint64_t, 64> kNegativeLow = [] {
  std::array<std::uint64_t, 64> table{};
  for (unsigned t = 0; t < 64; ++t) {
    std::uint64_t m = 0;
    for (unsigned j = 0; j < 64; ++j) {
      if ((j & t) == 0) m |= std::uint64_t{1} << j;
    }
    table[t] = m;
  }
  return table;
}();

}  // namespace detail

/// A set of outcomes over n samples, stored as a bitset indexed by outcome mask.
class OutcomeSet {
 public:
  using Words = boost::container::small_vector<std::uint64_t, 4>;

  OutcomeSet() = default;

  static OutcomeSet empty(int n) {
    check_set_samples(n);
    OutcomeSet s;
    s.n_ = n;
    s.words_.assign(word_count(n), 0);
    return s;
  }

  static OutcomeSet universe(int n) {
    OutcomeSet s = empty(n);
    for (auto& w : s.words_) w = ~std::uint64_t{0};
    s.words_.back() &= s.tail_mask();
    return s;
  }

  static OutcomeSet of(int n, std::initializer_list<Mask> outcomes) {
    OutcomeSet s = empty(n);
    for (Mask o : outcomes) s.insert(o);
    return s;
  }

  /// Parses bit strings such as {"010", "011"}.
  static OutcomeSet parse(std::initializer_list<std::string_view> outcomes) {
    OutcomeSet s;
    for (auto text : outcomes) {
      const Outcome o = Outcome::parse(text);
      if (s.n_ == 0) s = empty(o.n());
      if (o.n() != s.n_) throw ArgumentError("outcomes of different lengths");
      s.insert(o.bits());
    }
    return s;
  }

  int n() const noexcept { return n_; }

  bool contains(Mask outcome) const noexcept {
    return (words_[outcome >> 6] >> (outcome & 63)) & 1;
  }

  void insert(Mask outcome) {
    if ((outcome & ~full_mask(n_)) != 0) throw ArgumentError("outcome outside universe");
    words_[outcome >> 6] |= std::uint64_t{1} << (outcome & 63);
  }

  std::size_t size() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool is_empty() const noexcept {
    for (auto w : words_) {
      if (w != 0) return false;
    }
    return true;
  }

  bool is_singleton() const noexcept { return size() == 1; }

  /// Smallest outcome in the set; the set must be non-empty.
  Mask first() const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] != 0) return static_cast<Mask>((i << 6) + std::countr_zero(words_[i]));
    }
    throw ArgumentError("empty outcome set has no element");
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      while (w != 0) {
        f(static_cast<Mask>((i << 6) + std::countr_zero(w)));
        w &= w - 1;
      }
    }
  }

  std::vector<Mask> elements() const {
    std::vector<Mask> out;
    out.reserve(size());
    for_each([&](Mask o) { out.push_back(o); });
    return out;
  }

  /// Outcomes in which no member of `pool` is infected.
  OutcomeSet negative_part(Mask pool) const {
    OutcomeSet out = empty_like();
    const std::uint64_t low = detail::kNegativeLow[pool & 63];
    const Mask high = pool & ~Mask{63};
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if ((static_cast<Mask>(i << 6) & high) == 0) out.words_[i] = words_[i] & low;
    }
    return out;
  }

  /// (negative part, positive part) of the set with respect to `pool`.
  std::pair<OutcomeSet, OutcomeSet> split(Mask pool) const {
    OutcomeSet neg = negative_part(pool);
    OutcomeSet pos = empty_like();
    for (std::size_t i = 0; i < words_.size(); ++i) pos.words_[i] = words_[i] & ~neg.words_[i];
    return {std::move(neg), std::move(pos)};
  }

  /// Samples infected in every outcome (mask; all-ones over n for an empty set).
  Mask infected_everywhere() const noexcept {
    Mask acc = full_mask(n_);
    for_each([&](Mask o) { acc &= o; });
    return acc;
  }

  /// Samples infected in at least one outcome.
  Mask infected_somewhere() const noexcept {
    Mask acc = 0;
    for_each([&](Mask o) { acc |= o; });
    return acc;
  }

  /// Samples whose status differs between at least two outcomes.
  Mask undecided() const noexcept { return infected_somewhere() & ~infected_everywhere(); }

  OutcomeSet operator|(const OutcomeSet& o) const {
    require_same_n(o);
    OutcomeSet out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] |= o.words_[i];
    return out;
  }

  OutcomeSet operator&(const OutcomeSet& o) const {
    require_same_n(o);
    OutcomeSet out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= o.words_[i];
    return out;
  }

  bool is_subset_of(const OutcomeSet& o) const {
    require_same_n(o);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if ((words_[i] & ~o.words_[i]) != 0) return false;
    }
    return true;
  }

  const Words& words() const noexcept { return words_; }

  std::size_t hash() const noexcept {
    std::size_t h = static_cast<std::size_t>(n_) * 0x9e3779b97f4a7c15ULL;
    for (auto w : words_) h = (h ^ w) * 0x100000001b3ULL + (h >> 29);
    return h;
  }

  std::string str() const {
    std::string s = "{";
    bool first = true;
    for_each([&](Mask o) {
      if (!first) s += ',';
      first = false;
      s += Outcome::to_bit_string(o, n_);
    });
    return s + "}";
  }

  friend bool operator==(const OutcomeSet& a, const OutcomeSet& b) {
    return a.n_ == b.n_ && a.words_ == b.words_;
  }

  static std::size_t word_count(int n) { return n <= 6 ? 1 : (std::size_t{1} << (n - 6)); }

 private:
  static void check_set_samples(int n) {
    if (n < 1 || n > kMaxSetSamples) {
      throw UnsupportedSize("outcome sets over " + std::to_string(n) + " samples",
                            kMaxSetSamples);
    }
  }

  OutcomeSet empty_like() const {
    OutcomeSet s;
    s.n_ = n_;
    s.words_.assign(words_.size(), 0);
    return s;
  }

  std::uint64_t tail_mask() const noexcept {
    return n_ >= 6 ? ~std::uint64_t{0} : ((std::uint64_t{1} << (1u << n_)) - 1);
  }

  void require_same_n(const OutcomeSet& o) const {
    if (o.n_ != n_) throw ArgumentError("outcome sets over different sample counts");
  }

  int n_ = 0;
  Words words_;
};

struct OutcomeSetHash {
  std::size_t operator()(const OutcomeSet& s) const noexcept { return s.hash(); }
};

/// Partition of `outcomes` by the result of testing `pool`.
inline std::pair<OutcomeSet, OutcomeSet> split(const OutcomeSet& outcomes, const Pool& pool) {
  if (pool.n() != outcomes.n()) throw ArgumentError("pool and outcome set have different n");
  return outcomes.split(pool.mask());
}

struct DecidedPoints {
  Mask clean = 0;     ///< samples clean in every outcome
  Mask infected = 0;  ///< samples infected in every outcome
};

inline DecidedPoints decided_points(const OutcomeSet& outcomes) {
  if (outcomes.is_empty()) throw ArgumentError("decided points of an empty outcome set");
  return {full_mask(outcomes.n()) & ~outcomes.infected_somewhere(), outcomes.infected_everywhere()};
}

}  // namespace pooltest
