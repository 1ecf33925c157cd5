// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pooltest/pooltest.hpp"

using namespace pooltest;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::vector<double> uniform_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(n));
  for (auto& v : p) v = u(rng);
  return p;
}

std::vector<Rational> rational_point(std::mt19937_64& rng, int n, int lo = 0, int hi = 1000) {
  std::uniform_int_distribution<int> k(lo, hi);
  std::vector<Rational> p;
  for (int i = 0; i < n; ++i) p.emplace_back(k(rng), 1000);
  return p;
}

void criterion_counts(Verdict& v) {
  const auto t0 = Clock::now();
  const std::size_t want[] = {1, 4, 312};
  for (int n = 1; n <= 3; ++n) {
    std::size_t c = 0;
    for (const auto& p : enumerate_procedures(n)) {
      (void)p;
      ++c;
    }
    v.detail << " n=" << n << ":" << c;
    v.require(c == want[n - 1], "enumerated count at n=" + std::to_string(n));
  }
  const double t_enum = seconds_since(t0);
  v.require(t_enum < 60, "enumeration under 1 min");
  const auto t1 = Clock::now();
  const auto c4 = count_procedures(4).value;
  const double t_count = seconds_since(t1);
  v.detail << " n=4:" << c4 << " (" << t_enum << " s, " << t_count << " s)";
  v.require(c4 == 36585024, "count at n=4");
  v.require(t_count < 1800, "n=4 count under 30 min");
}

void criterion_zones(Verdict& v) {
  const std::size_t want[] = {0, 0, 3, 52};
  for (int n = 2; n <= 3; ++n) {
    const auto base = compute_metaprocedure(n);
    ZoneOptions opt;
    opt.resolution = 2 * default_zone_resolution(n);
    const auto doubled = compute_metaprocedure(n, opt);
    v.detail << " n=" << n << ": " << base.zone_count() << " at R=" << base.resolution << ", "
             << doubled.zone_count() << " at R=" << doubled.resolution << ";";
    v.require(base.zone_count() == want[n], "zone count at n=" + std::to_string(n));
    auto sorted = [](std::vector<LengthVector> l) {
      std::sort(l.begin(), l.end());
      return l;
    };
    v.require(sorted(base.lengths) == sorted(doubled.lengths), "stable under doubling at n=" + std::to_string(n));
    if (n == 3) {
      std::vector<std::size_t> sizes;
      for (const auto& o : orbit_census(base)) sizes.push_back(o.size());
      std::sort(sizes.rbegin(), sizes.rend());
      const std::vector<std::size_t> expect{6, 6, 6, 6, 6, 6, 6, 6, 3, 1};
      v.detail << " orbits:";
      for (auto s : sizes) v.detail << " " << s;
      v.require(sizes == expect, "orbit census 8x6+3+1");
    }
  }
  v.detail << " (n=4 stretch not asserted)";
}

double frontier_gap(double x1, double x2) {
  const double ab = frontier_ab(x1);
  const double ac = x1 < 1 ? frontier_ac(x1) : 1e9;
  return std::min({std::abs(x2 - ab), std::abs(x2 - ac), std::abs(x1 - x2)});
}

void criterion_frontiers(Verdict& v) {
  const ZoneMap zm = compute_metaprocedure(2);
  const std::map<ZoneN2, LengthVector> lv{{ZoneN2::kA, length_vector(n2_naive())},
                                          {ZoneN2::kB, length_vector(n2_pool_right())},
                                          {ZoneN2::kC, length_vector(n2_pool_left())}};
  std::mt19937_64 rng(2024);
  int checked = 0;
  int mismatches = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto p = uniform_point(rng, 2);
    if (frontier_gap(p[0], p[1]) < 1e-6) continue;
    ++checked;
    const auto z = classify_n2(p);
    if (zm.lengths[best_in_table(zm, p)] != lv.at(z)) ++mismatches;
    if (length_vector(find_optimal(p).procedure) != lv.at(z)) ++mismatches;
  }
  const double t = n2_triple_point();
  const std::vector<double> tp{t, t};
  const double a = expected_length(n2_naive(), tp);
  const double b = expected_length(n2_pool_right(), tp);
  const double c = expected_length(n2_pool_left(), tp);
  const double spread = std::max({a, b, c}) - std::min({a, b, c});
  v.detail << " " << checked << " points, " << mismatches << " mismatches; triple point spread " << spread;
  v.require(mismatches == 0, "classification");
  v.require(spread <= 1e-12, "triple point");
}

void criterion_fig9(Verdict& v) {
  const std::vector<double> p{0.01, 0.17, 0.51};
  const auto opt = find_optimal(p);
  const auto greedy = greedy_procedure(p);
  const double g = expected_length(greedy, p);
  v.detail << " optimal " << opt.value << " " << encode(opt.procedure) << "; greedy " << g << " "
           << encode(greedy);
  v.require(std::abs(opt.value - 1.889) <= 0.001, "optimal value");
  v.require(encode(opt.procedure) ==
                "P{1,2,3}[L(000),P{1,2}[L(001),P{1,3}[L(010),P{1}[L(011),P{2,3}[L(100),P{2}[L(101),"
                "P{3}[L(110),L(111)]]]]]]]",
            "optimal tree");
  v.require(std::abs(g - 1.96) <= 0.005, "greedy value");
  v.require(encode(greedy) ==
                "P{1,2,3}[L(000),P{1,2}[L(001),P{1}[P{3}[L(010),L(011)],P{2,3}[L(100),P{2}[L(101),"
                "P{3}[L(110),L(111)]]]]]]",
            "greedy tree");
}

void criterion_means(Verdict& v) {
  std::mt19937_64 rng(5);
  const int trials = 100000;
  double sum_opt = 0;
  double sum_greedy = 0;
  int below = 0;
  for (int k = 0; k < trials; ++k) {
    const auto p = uniform_point(rng, 3);
    const double o = find_optimal(p).value;
    const double g = expected_length(greedy_procedure(p), p);
    sum_opt += o;
    sum_greedy += g;
    if (g < o - 1e-12) ++below;
  }
  const double mo = sum_opt / trials;
  const double mg = sum_greedy / trials;
  v.detail << " mean optimal " << mo << " (target 2.661), mean greedy " << mg << " (target 2.666), "
           << below << " points with greedy < optimal";
  v.require(std::abs(mo - 2.661) <= 0.01, "mean optimal");
  v.require(std::abs(mg - 2.666) <= 0.01, "mean greedy");
  v.require(below == 0, "greedy >= optimal pointwise");
}

void criterion_oracle(Verdict& v) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(6);
  int mismatches = 0;
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 1000; ++k) {
      const auto p = rational_point(rng, n);
      if (find_optimal(p).value != brute_force_optimal(p).value) ++mismatches;
    }
  }
  const double t = seconds_since(t0);
  v.detail << " 3000 exact comparisons, " << mismatches << " mismatches, " << t << " s";
  v.require(mismatches == 0, "exact equality");
  v.require(t < 300, "under 5 min");
}

bool depths_monotone(const Procedure& p) {
  const auto lv = length_vector(p);
  for (Mask b0 = 0; b0 < (Mask{1} << p.n()); ++b0) {
    for (int i = 0; i < p.n(); ++i) {
      if (lv[b0] > lv[b0 | (Mask{1} << i)]) return false;
    }
  }
  return true;
}

void criterion_lemmas(Verdict& v) {
  std::mt19937_64 rng(7);
  int non_monotone[4] = {0, 0, 0, 0};
  int perm_failures = 0;
  int constant[4] = {0, 0, 0, 0};
  for (int n = 1; n <= 3; ++n) {
    const auto perms = Permutation::all(n);
    for (const auto& p : enumerate_procedures(n)) {
      if (!depths_monotone(p)) ++non_monotone[n];
      if (length_vector(p).is_constant()) ++constant[n];
      const auto x = rational_point(rng, n);
      for (const auto& sigma : perms) {
        if (expected_length(apply_permutation(p, sigma), x) !=
            expected_length(p, permute_priors<Rational>(std::span<const Rational>(x), sigma))) {
          ++perm_failures;
        }
      }
    }
  }
  int naive_failures = 0;
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 1000; ++k) {
      const auto x = rational_point(rng, n, 500, 1000);
      if (find_optimal(x).value != n) ++naive_failures;
    }
  }
  double worst_norm = 0;
  for (int n = 1; n <= 10; ++n) {
    for (int k = 0; k < 100; ++k) {
      const auto x = uniform_point(rng, n);
      double total = 0;
      for (Mask o = 0; o < (Mask{1} << n); ++o) total += outcome_probability<double>(o, x);
      worst_norm = std::max(worst_norm, std::abs(total - 1));
    }
  }
  v.detail << " non-monotone procedures n=1,2,3: " << non_monotone[1] << "," << non_monotone[2] << ","
           << non_monotone[3] << "; naive-region failures " << naive_failures << "; permutation failures "
           << perm_failures << "; constant-length n=2,3: " << constant[2] << "," << constant[3]
           << "; normalization error " << worst_norm;
  v.require(non_monotone[1] + non_monotone[2] + non_monotone[3] == 0, "single-bit monotonicity");
  v.require(naive_failures == 0, "naive region");
  v.require(perm_failures == 0, "permutation identity");
  v.require(constant[2] == 2 && constant[3] == 12 && count_naive(2).value == 2 && count_naive(3).value == 12,
            "P(2)=2, P(3)=12");
  v.require(worst_norm <= 1e-12, "normalization");
}

void criterion_sessions(Verdict& v) {
  int runs = 0;
  int failures = 0;
  for (int n = 1; n <= 3; ++n) {
    const std::vector<double> p(static_cast<std::size_t>(n), 0.3);
    for (const auto& proc : enumerate_procedures(n)) {
      const auto lv = length_vector(proc);
      const Session fresh("acceptance", PriorVector::of(p), Strategy::fixed(proc));
      for (Mask truth = 0; truth < (Mask{1} << n); ++truth) {
        Session s = fresh;
        while (auto pool = s.next_pool()) {
          s.record((pool->mask() & truth) ? TestResult::kPositive : TestResult::kNegative);
        }
        ++runs;
        if (s.outcome().bits() != truth || static_cast<int>(s.tests()) != lv[truth]) ++failures;
      }
    }
  }
  const std::vector<double> p{0.01, 0.17, 0.51};
  const auto r = simulate(PriorVector::of(p), Strategy::optimal(), 100000, 42);
  const double expected = find_optimal(p).value;
  const double z = std::abs(r.mean_tests - expected) / r.std_error;
  v.detail << " " << runs << " replays, " << failures << " failures; simulated mean " << r.mean_tests
           << " vs " << expected << " (" << z << " SE)";
  v.require(failures == 0, "replay");
  v.require(z <= 3, "simulation within 3 SE");
}

void criterion_heuristics(Verdict& v) {
  std::mt19937_64 rng(9);
  int greedy_over = 0;
  int pairing_over = 0;
  double worst_greedy = 0;
  double worst_pairing = 0;
  for (int n = 2; n <= 6; ++n) {
    int over_n = 0;
    for (int k = 0; k < 10000; ++k) {
      const auto p = uniform_point(rng, n);
      const double g = expected_length(greedy_procedure(p), p);
      if (g > n + 1e-12) {
        ++greedy_over;
        ++over_n;
      }
      worst_greedy = std::max(worst_greedy, g - n);
      for (int block = 2; block <= std::min(n, kPairingLimit); ++block) {
        const double t = pairing_strategy(p, block, static_cast<std::uint64_t>(k)).expected_tests();
        if (t > n + 1e-12) ++pairing_over;
        worst_pairing = std::max(worst_pairing, t - n);
      }
    }
    v.detail << " n=" << n << ": greedy > n at " << over_n << ";";
  }
  v.detail << " worst greedy excess " << worst_greedy << "; pairing > n at " << pairing_over
           << " (worst excess " << worst_pairing << ")";
  v.require(greedy_over == 0, "greedy <= n");
  v.require(pairing_over == 0, "pairing <= n");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
      {"enumeration counts", criterion_counts},
      {"zone counts", criterion_zones},
      {"n=2 frontiers", criterion_frontiers},
      {"counter-example point", criterion_fig9},
      {"uniform n=3 means", criterion_means},
      {"oracle equivalence", criterion_oracle},
      {"lemma suites", criterion_lemmas},
      {"session replay", criterion_sessions},
      {"heuristics vs naive", criterion_heuristics},
  };
  bool all = true;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Verdict v;
    const auto t0 = Clock::now();
    try {
      run(v);
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    all = all && v.ok;
    std::printf("%s %d %s (%.1f s):%s\n", v.ok ? "PASS" : "FAIL", index, name, seconds_since(t0),
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
