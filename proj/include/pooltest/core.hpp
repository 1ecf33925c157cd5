#pragma once

// Domain primitives: sample masks, pools, outcomes and permutations.
//
// Encoding used throughout the library: outcome bit i is 1 when sample i+1 is
// INFECTED and 0 when it is CLEAN. A pooled test on pool T is POSITIVE iff at
// least one member of T is infected. Priors are per-sample infection
// probabilities. External representations use 1-based sample indices and
// bit strings whose k-th character describes sample k.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pooltest/errors.hpp"

namespace pooltest {

using Mask = std::uint32_t;

/// Largest sample count representable by a Mask.
inline constexpr int kMaxSamples = 32;

constexpr Mask full_mask(int n) noexcept {
  return n >= 32 ? ~Mask{0} : ((Mask{1} << n) - 1);
}

constexpr int popcount(Mask m) noexcept { return std::popcount(m); }

/// Core total order on pools: smaller cardinality first, then lexicographic on
/// the ascending list of member indices.
constexpr bool pool_less(Mask a, Mask b) noexcept {
  const int ca = std::popcount(a);
  const int cb = std::popcount(b);
  if (ca != cb) return ca < cb;
  const Mask diff = a ^ b;
  if (diff == 0) return false;
  // Both lists agree below the lowest differing index; whoever owns that index
  // has the smaller element at the first position where the lists differ.
  return (a & (diff & (~diff + 1))) != 0;
}

/// All non-empty subsets of `universe`, sorted in the core pool order.
inline std::vector<Mask> pools_in_order(Mask universe) {
  std::vector<Mask> out;
  for (Mask sub = universe; sub != 0; sub = (sub - 1) & universe) out.push_back(sub);
  std::sort(out.begin(), out.end(), pool_less);
  return out;
}

/// 1-based indices of the set bits of `m`, ascending.
inline std::vector<int> mask_indices(Mask m) {
  std::vector<int> out;
  out.reserve(std::popcount(m));
  for (int i = 0; m != 0; ++i, m >>= 1) {
    if (m & 1) out.push_back(i + 1);
  }
  return out;
}

inline void check_sample_count(int n) {
  if (n < 1 || n > kMaxSamples) {
    throw ArgumentError("sample count must be in [1, " + std::to_string(kMaxSamples) +
                        "], got " + std::to_string(n));
  }
}

class Pool {
 public:
  Pool(int n, Mask members) : n_(n), members_(members) {
    check_sample_count(n);
    if (members == 0) throw ArgumentError("pool must be non-empty");
    if ((members & ~full_mask(n)) != 0) {
      throw ArgumentError("pool member index exceeds sample count " + std::to_string(n));
    }
  }

  /// From 1-based indices; duplicates are rejected.
  static Pool from_indices(int n, std::span<const int> indices) {
    check_sample_count(n);
    Mask m = 0;
    for (int i : indices) {
      if (i < 1 || i > n) {
        throw ArgumentError("pool index " + std::to_string(i) + " outside [1, " +
                            std::to_string(n) + "]");
      }
      const Mask bit = Mask{1} << (i - 1);
      if (m & bit) throw ArgumentError("duplicate pool index " + std::to_string(i));
      m |= bit;
    }
    return Pool(n, m);
  }

  int n() const noexcept { return n_; }
  Mask mask() const noexcept { return members_; }
  int size() const noexcept { return std::popcount(members_); }
  bool contains(int index) const noexcept {
    return index >= 1 && index <= n_ && ((members_ >> (index - 1)) & 1);
  }
  std::vector<int> indices() const { return mask_indices(members_); }

  friend bool operator==(const Pool&, const Pool&) = default;

 private:
  int n_;
  Mask members_;
};

inline bool operator<(const Pool& a, const Pool& b) noexcept {
  return pool_less(a.mask(), b.mask());
}

class Outcome {
 public:
  Outcome(int n, Mask infected) : n_(n), bits_(infected) {
    check_sample_count(n);
    if ((infected & ~full_mask(n)) != 0) throw ArgumentError("outcome has bits beyond n");
  }

  /// Parses a bit string such as "010" (sample 2 infected).
  static Outcome parse(std::string_view text) {
    if (text.empty() || text.size() > static_cast<std::size_t>(kMaxSamples)) {
      throw ParseError("outcome string must have 1.." + std::to_string(kMaxSamples) +
                       " characters");
    }
    Mask m = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '1') {
        m |= Mask{1} << i;
      } else if (text[i] != '0') {
        throw ParseError("outcome string may only contain 0 and 1: '" + std::string(text) + "'");
      }
    }
    return Outcome(static_cast<int>(text.size()), m);
  }

  int n() const noexcept { return n_; }
  Mask bits() const noexcept { return bits_; }
  bool infected(int index) const noexcept { return (bits_ >> (index - 1)) & 1; }

  std::string str() const { return to_bit_string(bits_, n_); }

  static std::string to_bit_string(Mask bits, int n) {
    std::string s(static_cast<std::size_t>(n), '0');
    for (int i = 0; i < n; ++i) {
      if ((bits >> i) & 1) s[static_cast<std::size_t>(i)] = '1';
    }
    return s;
  }

  friend bool operator==(const Outcome&, const Outcome&) = default;

 private:
  int n_;
  Mask bits_;
};

/// A bijection on sample indices. Stored 0-based: sample i+1 is sent to image(i)+1.
class Permutation {
 public:
  explicit Permutation(std::vector<int> zero_based_images) : map_(std::move(zero_based_images)) {
    std::vector<bool> hit(map_.size(), false);
    for (int v : map_) {
      if (v < 0 || v >= static_cast<int>(map_.size()) || hit[static_cast<std::size_t>(v)]) {
        throw ArgumentError("not a valid permutation");
      }
      hit[static_cast<std::size_t>(v)] = true;
    }
  }

  static Permutation identity(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return Permutation(std::move(v));
  }

  /// Transposition of two 1-based indices.
  static Permutation swap(int n, int a, int b) {
    auto id = identity(n).map_;
    std::swap(id.at(static_cast<std::size_t>(a - 1)), id.at(static_cast<std::size_t>(b - 1)));
    return Permutation(std::move(id));
  }

  /// Every permutation of n elements, identity first, lexicographic order.
  static std::vector<Permutation> all(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    std::vector<Permutation> out;
    do {
      out.emplace_back(v);
    } while (std::next_permutation(v.begin(), v.end()));
    return out;
  }

  int size() const noexcept { return static_cast<int>(map_.size()); }
  int operator[](int zero_based) const { return map_[static_cast<std::size_t>(zero_based)]; }
  const std::vector<int>& images() const noexcept { return map_; }

  Mask apply(Mask m) const noexcept {
    Mask out = 0;
    for (std::size_t i = 0; i < map_.size(); ++i) {
      if ((m >> i) & 1) out |= Mask{1} << map_[i];
    }
    return out;
  }

  Permutation inverse() const {
    std::vector<int> inv(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) inv[static_cast<std::size_t>(map_[i])] = static_cast<int>(i);
    return Permutation(std::move(inv));
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> map_;
};

/// Prior vector seen through a permutation: result[i] = priors[sigma(i)].
/// With this convention L_{sigma(T)}(x) == L_T(permute_priors(x, sigma)).
template <class Scalar>
std::vector<Scalar> permute_priors(std::span<const Scalar> priors, const Permutation& sigma) {
  if (static_cast<int>(priors.size()) != sigma.size()) {
    throw ArgumentError("permutation size does not match prior vector");
  }
  std::vector<Scalar> out;
  out.reserve(priors.size());
  for (int i = 0; i < sigma.size(); ++i) out.push_back(priors[static_cast<std::size_t>(sigma[i])]);
  return out;
}

}  // namespace pooltest
