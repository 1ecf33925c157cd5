#pragma once

// Outcome probabilities under independent per-sample infection priors, leaf
// depth vectors, and expected procedure length.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pooltest/core.hpp"
#include "pooltest/outcome_set.hpp"
#include "pooltest/procedure.hpp"
#include "pooltest/scalar.hpp"

namespace pooltest {

/// Default bound on n for explicit 2^n-term evaluation.
inline constexpr int kExplicitEvaluationLimit = 12;

template <class Scalar>
void check_priors(std::span<const Scalar> priors) {
  if (priors.empty()) throw ArgumentError("prior vector is empty");
  if (static_cast<int>(priors.size()) > kMaxSamples) {
    throw UnsupportedSize("prior vector with " + std::to_string(priors.size()) + " samples",
                          kMaxSamples);
  }
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const auto& p = priors[i];
    if (!(p >= 0 && p <= 1)) {
      throw ArgumentError("prior " + std::to_string(i + 1) + " outside [0, 1]");
    }
  }
}

template <class Scalar>
void check_priors(const std::vector<Scalar>& priors) {
  check_priors(std::span<const Scalar>(priors));
}

/// Product over samples of p_i (infected) or 1 - p_i (clean).
template <class Scalar>
Scalar outcome_probability(Mask outcome, std::span<const Scalar> priors) {
  Scalar r = 1;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    if ((outcome >> i) & 1) {
      r *= priors[i];
    } else {
      r *= Scalar(1 - priors[i]);
    }
  }
  return r;
}

template <class Scalar>
Scalar outcome_probability(const Outcome& omega, const std::vector<Scalar>& priors) {
  if (omega.n() != static_cast<int>(priors.size())) {
    throw ArgumentError("outcome and prior vector sizes differ");
  }
  return outcome_probability<Scalar>(omega.bits(), std::span<const Scalar>(priors));
}

/// Probabilities of all 2^n outcomes, indexed by outcome mask.
template <class Scalar>
std::vector<Scalar> outcome_probabilities(std::span<const Scalar> priors) {
  const int n = static_cast<int>(priors.size());
  if (n > kMaxSetSamples) throw UnsupportedSize("outcome table over n samples", kMaxSetSamples);
  std::vector<Scalar> probs(std::size_t{1} << n);
  probs[0] = 1;
  for (int i = 0; i < n; ++i) {
    const std::size_t half = std::size_t{1} << i;
    const Scalar p = priors[static_cast<std::size_t>(i)];
    const Scalar q = Scalar(1 - p);
    for (std::size_t k = 0; k < half; ++k) {
      probs[k + half] = probs[k] * p;
      probs[k] *= q;
    }
  }
  return probs;
}

template <class Scalar>
std::vector<Scalar> outcome_probabilities(const std::vector<Scalar>& priors) {
  return outcome_probabilities<Scalar>(std::span<const Scalar>(priors));
}

/// Sum of outcome probabilities over a set.
template <class Scalar>
Scalar set_probability(const OutcomeSet& outcomes, const std::vector<Scalar>& priors) {
  if (outcomes.n() != static_cast<int>(priors.size())) {
    throw ArgumentError("outcome set and prior vector sizes differ");
  }
  Scalar total = 0;
  const std::span<const Scalar> p(priors);
  outcomes.for_each([&](Mask o) { total += outcome_probability<Scalar>(o, p); });
  return total;
}

/// Number of tests performed for each outcome, indexed by outcome mask.
struct LengthVector {
  int n = 0;
  std::vector<std::uint16_t> depths;

  int operator[](Mask outcome) const { return depths.at(outcome); }
  long total() const {
    long s = 0;
    for (auto d : depths) s += d;
    return s;
  }
  bool is_constant() const {
    for (auto d : depths) {
      if (d != depths.front()) return false;
    }
    return true;
  }

  friend bool operator==(const LengthVector&, const LengthVector&) = default;
  friend auto operator<=>(const LengthVector& a, const LengthVector& b) {
    if (auto c = a.n <=> b.n; c != 0) return c;
    return a.depths <=> b.depths;
  }
};

struct LengthVectorHash {
  std::size_t operator()(const LengthVector& v) const noexcept {
    std::size_t h = static_cast<std::size_t>(v.n);
    for (auto d : v.depths) h = h * 1099511628211ULL ^ d;
    return h;
  }
};

inline LengthVector length_vector(const Procedure& proc) {
  if (proc.n() > kMaxSetSamples) throw UnsupportedSize("length vector over n samples", kMaxSetSamples);
  LengthVector lv{proc.n(), std::vector<std::uint16_t>(std::size_t{1} << proc.n(), 0)};
  std::function<void(std::size_t, int)> walk = [&](std::size_t i, int depth) {
    const auto& nd = proc.at(i);
    if (nd.is_leaf()) {
      lv.depths.at(nd.outcome) = static_cast<std::uint16_t>(depth);
      return;
    }
    walk(static_cast<std::size_t>(nd.neg), depth + 1);
    walk(static_cast<std::size_t>(nd.pos), depth + 1);
  };
  walk(0, 0);
  return lv;
}

/// Relabels a length vector under a sample permutation (consistent with apply_permutation).
inline LengthVector permute(const LengthVector& lv, const Permutation& sigma) {
  LengthVector out{lv.n, std::vector<std::uint16_t>(lv.depths.size(), 0)};
  for (std::size_t o = 0; o < lv.depths.size(); ++o) {
    out.depths[sigma.apply(static_cast<Mask>(o))] = lv.depths[o];
  }
  return out;
}

inline void check_explicit_limit(int n, int limit = kExplicitEvaluationLimit) {
  if (n > limit) {
    throw UnsupportedSize("explicit expected-length evaluation over " + std::to_string(n) +
                              " samples; use Monte Carlo simulation instead",
                          limit);
  }
}

/// Sum over outcomes of depth * probability.
template <class Scalar>
Scalar expected_length(const LengthVector& lengths, std::span<const Scalar> priors,
                       int limit = kExplicitEvaluationLimit) {
  if (lengths.n != static_cast<int>(priors.size())) {
    throw ArgumentError("length vector and prior vector sizes differ");
  }
  check_explicit_limit(lengths.n, limit);
  const auto probs = outcome_probabilities<Scalar>(priors);
  Scalar total = 0;
  for (std::size_t o = 0; o < probs.size(); ++o) {
    if (lengths.depths[o] != 0) total += probs[o] * Scalar(lengths.depths[o]);
  }
  return total;
}

template <class Scalar>
Scalar expected_length(const LengthVector& lengths, const std::vector<Scalar>& priors,
                       int limit = kExplicitEvaluationLimit) {
  return expected_length<Scalar>(lengths, std::span<const Scalar>(priors), limit);
}

template <class Scalar>
Scalar expected_length(const Procedure& proc, const std::vector<Scalar>& priors,
                       int limit = kExplicitEvaluationLimit) {
  if (proc.n() != static_cast<int>(priors.size())) {
    throw ArgumentError("procedure and prior vector sizes differ");
  }
  check_explicit_limit(proc.n(), limit);
  return expected_length<Scalar>(length_vector(proc), std::span<const Scalar>(priors), limit);
}

}  // namespace pooltest
