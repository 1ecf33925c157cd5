#pragma once

// Optimality zones: a sampled partition of the prior cube into regions, each
// tagged with the procedure optimal there (the metaprocedure).
//
// Sampling happens on the ordered simplex 1 >= p1 >= ... >= pn >= 0 at cell
// centres (i + 1/2) / R; the rest of the cube follows from the symmetry
// L_{sigma(T)}(x) = L_T(permute_priors(x, sigma)).

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <nlohmann/json.hpp>

#include "pooltest/codec.hpp"
#include "pooltest/core.hpp"
#include "pooltest/optimizer.hpp"
#include "pooltest/probability.hpp"
#include "pooltest/procedure.hpp"
#include "pooltest/scalar.hpp"
#include "pooltest/split_graph.hpp"

namespace pooltest {

/// Largest n for which zone maps are computed.
inline constexpr int kZoneLimit = 4;
/// Upper bound on simplex grid points in one zone map.
inline constexpr std::size_t kZoneGridLimit = 40'000'000;

inline int default_zone_resolution(int n) {
  switch (n) {
    case 1: return 512;
    case 2: return 512;
    case 3: return 128;
    case 4: return 32;
    default: throw UnsupportedSize("zone maps over " + std::to_string(n) + " samples", kZoneLimit);
  }
}

namespace detail {

inline std::uint64_t binomial(std::uint64_t a, std::uint64_t b) {
  if (b > a) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::vector<std::uint8_t>::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  if (text.size() % 4 != 0) throw ParseError("base64 length is not a multiple of 4");
  std::size_t pad = 0;
  while (!text.empty() && text.back() == '=') {
    text.pop_back();
    ++pad;
  }
  if (pad > 2) throw ParseError("bad base64 padding");
  for (char c : text) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '/') {
      throw ParseError("invalid base64 character");
    }
  }
  std::vector<std::uint8_t> out;
  try {
    out.assign(It(text.cbegin()), It(text.cend()));
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid base64: ") + e.what());
  }
  return out;
}

// FNV-1a, used as a content checksum for zone-map files.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15];
  return s;
}

}  // namespace detail

/// Index arithmetic for the grid of non-increasing index tuples i1 >= ... >= in
/// over [0, R), enumerated in lexicographic order.
class SimplexGrid {
 public:
  SimplexGrid(int n, int resolution) : n_(n), r_(resolution) {
    if (n < 1) throw ArgumentError("n must be at least 1");
    if (resolution < 2) throw ArgumentError("resolution must be at least 2");
    const auto total = detail::binomial(static_cast<std::uint64_t>(r_ + n_ - 1), static_cast<std::uint64_t>(n_));
    if (total > kZoneGridLimit) {
      throw UnsupportedSize("simplex grid with " + std::to_string(total) + " points",
                            static_cast<int>(kZoneGridLimit));
    }
    size_ = static_cast<std::size_t>(total);
  }

  int n() const noexcept { return n_; }
  int resolution() const noexcept { return r_; }
  std::size_t size() const noexcept { return size_; }

  std::size_t rank(const std::vector<int>& idx) const {
    std::uint64_t r = 0;
    for (int k = 0; k < n_; ++k) {
      const auto m = static_cast<std::uint64_t>(n_ - 1 - k);
      r += detail::binomial(static_cast<std::uint64_t>(idx[static_cast<std::size_t>(k)]) + m, m + 1);
    }
    return static_cast<std::size_t>(r);
  }

  /// First tuple in order: all zeros.
  std::vector<int> first() const { return std::vector<int>(static_cast<std::size_t>(n_), 0); }

  /// Advances to the lexicographic successor; returns false past the end.
  bool next(std::vector<int>& idx) const {
    for (int k = n_ - 1; k >= 0; --k) {
      const int cap = k == 0 ? r_ - 1 : idx[static_cast<std::size_t>(k - 1)];
      if (idx[static_cast<std::size_t>(k)] < cap) {
        ++idx[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < n_; ++j) idx[static_cast<std::size_t>(j)] = 0;
        return true;
      }
    }
    return false;
  }

  std::vector<int> unrank(std::size_t rank) const {
    std::vector<int> idx(static_cast<std::size_t>(n_));
    std::uint64_t rest = rank;
    int cap = r_ - 1;
    for (int k = 0; k < n_; ++k) {
      const auto m = static_cast<std::uint64_t>(n_ - 1 - k);
      int v = 0;
      // Largest v with C(v + m, m + 1) <= rest.
      while (v < cap && detail::binomial(static_cast<std::uint64_t>(v + 1) + m, m + 1) <= rest) ++v;
      rest -= detail::binomial(static_cast<std::uint64_t>(v) + m, m + 1);
      idx[static_cast<std::size_t>(k)] = v;
      cap = v;
    }
    return idx;
  }

  template <class Scalar>
  std::vector<Scalar> point(const std::vector<int>& idx) const {
    std::vector<Scalar> p;
    p.reserve(idx.size());
    for (int i : idx) {
      if constexpr (std::is_same_v<Scalar, Rational>) {
        p.emplace_back(2 * i + 1, 2 * r_);
      } else {
        p.push_back((i + 0.5) / r_);
      }
    }
    return p;
  }

  static bool strictly_decreasing(const std::vector<int>& idx) {
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (idx[k] >= idx[k - 1]) return false;
    }
    return true;
  }

 private:
  int n_;
  int r_;
  std::size_t size_ = 0;
};

struct ZoneMap {
  int n = 0;
  int resolution = 0;
  std::string domain = "simplex";
  std::uint64_t seed = 0;
  EvalMode mode = EvalMode::kFloat;
  /// Distinct optimal procedures over the whole cube, one per length vector,
  /// including permutation images of those found on the simplex.
  std::vector<Procedure> procedures;
  std::vector<LengthVector> lengths;
  /// Procedure id per simplex grid point, in SimplexGrid order.
  std::vector<std::uint16_t> assignment;
  /// Grid points on a tie hyperplane whose optimum was not already in the census.
  std::size_t tie_extras = 0;

  std::size_t zone_count() const noexcept { return procedures.size(); }
  SimplexGrid grid() const { return SimplexGrid(n, resolution); }
};

struct ZoneOptions {
  int resolution = 0;  ///< 0 selects default_zone_resolution(n)
  EvalMode mode = EvalMode::kFloat;
  unsigned threads = 1;
  std::function<void(double)> progress;  ///< fraction done, called from the calling thread
};

namespace detail {

template <class Scalar>
void compute_zone_rows(const std::shared_ptr<const SplitGraph>& graph, const SimplexGrid& grid,
                       std::size_t begin, std::size_t end, std::vector<LengthVector>& keys,
                       std::vector<std::int32_t>& local_ids, std::vector<Procedure>& local_procs,
                       std::atomic<std::size_t>& done, const std::function<void(double)>* progress = nullptr) {
  OptimizerContext<Scalar> ctx(graph);
  std::unordered_map<LengthVector, std::int32_t, LengthVectorHash> seen;
  auto idx = grid.unrank(begin);
  for (std::size_t r = begin; r < end; ++r, grid.next(idx)) {
    if (!SimplexGrid::strictly_decreasing(idx)) {
      local_ids[r] = -1;
    } else {
      ctx.solve(grid.point<Scalar>(idx));
      auto lv = ctx.lengths();
      auto it = seen.find(lv);
      if (it == seen.end()) {
        it = seen.emplace(lv, static_cast<std::int32_t>(keys.size())).first;
        keys.push_back(std::move(lv));
        local_procs.push_back(ctx.procedure());
      }
      local_ids[r] = it->second;
    }
    if ((r & 1023) == 0) {
      const auto d = done.fetch_add(1024, std::memory_order_relaxed) + 1024;
      if (progress && *progress && (r & 65535) == 0) {
        (*progress)(std::min(0.99, static_cast<double>(d) / static_cast<double>(grid.size())));
      }
    }
  }
}

}  // namespace detail

/// Index of the table procedure with least expected length at p (lowest id on ties).
template <class Scalar>
std::size_t best_in_table(const ZoneMap& zm, const std::vector<Scalar>& p) {
  if (static_cast<int>(p.size()) != zm.n) throw ArgumentError("prior vector size differs from zone map n");
  check_priors(p);
  const auto probs = outcome_probabilities<Scalar>(p);
  const Scalar tol = TieTolerance<Scalar>::value();
  std::size_t best = 0;
  Scalar best_value = 0;
  for (std::size_t id = 0; id < zm.lengths.size(); ++id) {
    Scalar v = 0;
    const auto& d = zm.lengths[id].depths;
    for (std::size_t o = 0; o < probs.size(); ++o) {
      if (d[o] != 0) v += probs[o] * Scalar(d[o]);
    }
    if (id == 0 || v < best_value - tol) {
      best = id;
      best_value = v;
    }
  }
  return best;
}

namespace detail {

template <class Scalar>
ZoneMap compute_metaprocedure_impl(int n, const ZoneOptions& opt) {
  const int resolution = opt.resolution == 0 ? default_zone_resolution(n) : opt.resolution;
  SimplexGrid grid(n, resolution);
  const auto graph = SplitGraph::for_universe(n);

  const unsigned threads = std::max(1u, opt.threads);
  const std::size_t total = grid.size();
  const std::size_t chunk = (total + threads - 1) / threads;
  std::vector<std::int32_t> local_ids(total, -1);
  std::vector<std::vector<LengthVector>> keys(threads);
  std::vector<std::vector<Procedure>> procs(threads);
  std::vector<std::exception_ptr> errors(threads);
  std::atomic<std::size_t> done{0};
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 1; t < threads; ++t) {
      const std::size_t b = std::min(total, t * chunk), e = std::min(total, (t + 1) * chunk);
      workers.emplace_back([&, t, b, e] {
        try {
          compute_zone_rows<Scalar>(graph, grid, b, e, keys[t], local_ids, procs[t], done);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    // Chunk 0 runs on the calling thread.
    try {
      compute_zone_rows<Scalar>(graph, grid, 0, std::min(total, chunk), keys[0], local_ids, procs[0], done,
                                &opt.progress);
    } catch (...) {
      errors[0] = std::current_exception();
    }
    if (opt.progress) opt.progress(std::min(1.0, static_cast<double>(done.load()) / static_cast<double>(total)));
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ZoneMap zm;
  zm.n = n;
  zm.resolution = resolution;
  zm.mode = opt.mode;
  zm.assignment.assign(total, 0);
  std::unordered_map<LengthVector, std::uint16_t, LengthVectorHash> ids;
  const auto perms = Permutation::all(n);
  auto add = [&](const LengthVector& lv, const Procedure& proc) -> std::uint16_t {
    if (auto it = ids.find(lv); it != ids.end()) return it->second;
    if (zm.procedures.size() >= 0xffff) throw ResourceError("more than 65535 zones");
    const auto id = static_cast<std::uint16_t>(zm.procedures.size());
    ids.emplace(lv, id);
    zm.procedures.push_back(proc);
    zm.lengths.push_back(lv);
    return id;
  };
  // Global ids in order of first appearance along the grid; each new zone is
  // immediately followed by its unseen permutation images.
  std::vector<std::vector<std::int32_t>> remap(threads);
  for (unsigned t = 0; t < threads; ++t) remap[t].assign(keys[t].size(), -1);
  for (std::size_t r = 0; r < total; ++r) {
    const std::int32_t local = local_ids[r];
    if (local < 0) continue;
    const auto t = static_cast<unsigned>(r / chunk);
    auto& slot = remap[t][static_cast<std::size_t>(local)];
    if (slot < 0) {
      const auto& lv = keys[t][static_cast<std::size_t>(local)];
      const auto& proc = procs[t][static_cast<std::size_t>(local)];
      slot = add(lv, proc);
      for (const auto& sigma : perms) add(permute(lv, sigma), apply_permutation(proc, sigma));
    }
    zm.assignment[r] = static_cast<std::uint16_t>(slot);
  }

  // Points with tied coordinates take the best census procedure at that point;
  // the optimizer confirms it is optimal there.
  OptimizerContext<Scalar> ctx(graph);
  const Scalar tol = TieTolerance<Scalar>::value() * 1000;
  auto idx = grid.first();
  for (std::size_t r = 0; r < total; ++r, grid.next(idx)) {
    if (local_ids[r] >= 0) continue;
    const auto p = grid.point<Scalar>(idx);
    const Scalar& opt_value = ctx.solve(p);
    if (auto hit = ids.find(ctx.lengths()); hit != ids.end()) {
      zm.assignment[r] = hit->second;
      continue;
    }
    std::size_t id = zm.procedures.empty() ? 0 : best_in_table(zm, p);
    if (zm.procedures.empty() || expected_length<Scalar>(zm.lengths[id], p) > opt_value + tol) {
      // The census missed the zone touching this point. Take the optimum just
      // inside the strict simplex, which is optimal on an open set; fall back to
      // the point's own optimum if that one does not reach the tie.
      ++zm.tie_extras;
      const Scalar optimum = opt_value;
      auto q = p;
      for (std::size_t k = 0; k < q.size(); ++k) {
        q[k] -= Scalar(static_cast<long>(k)) / Scalar(static_cast<long>(zm.resolution) * (1L << 24));
      }
      ctx.solve(q);
      if (expected_length<Scalar>(ctx.lengths(), p) > optimum + tol) ctx.solve(p);
      const auto lv = ctx.lengths();
      const auto proc = ctx.procedure();
      id = add(lv, proc);
      for (const auto& sigma : perms) add(permute(lv, sigma), apply_permutation(proc, sigma));
    }
    zm.assignment[r] = static_cast<std::uint16_t>(id);
  }
  if (opt.progress) opt.progress(1.0);
  return zm;
}

}  // namespace detail

/// Samples the ordered simplex and assigns each grid point its optimal procedure.
inline ZoneMap compute_metaprocedure(int n, const ZoneOptions& opt = {}) {
  if (n < 1) throw ArgumentError("n must be at least 1");
  if (n > kZoneLimit) throw UnsupportedSize("zone maps over " + std::to_string(n) + " samples", kZoneLimit);
  if (opt.mode == EvalMode::kExact) return detail::compute_metaprocedure_impl<Rational>(n, opt);
  return detail::compute_metaprocedure_impl<double>(n, opt);
}

/// Descending sort of p: returns sigma with q = permute_priors(p, sigma) non-increasing.
template <class Scalar>
Permutation sorting_permutation(const std::vector<Scalar>& p) {
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)];
  });
  return Permutation(std::move(order));
}

/// Procedure of the nearest simplex grid point, carried back to p's coordinates.
template <class Scalar>
Procedure lookup(const ZoneMap& zm, const std::vector<Scalar>& p) {
  if (static_cast<int>(p.size()) != zm.n) throw ArgumentError("prior vector size differs from zone map n");
  check_priors(p);
  const auto sigma = sorting_permutation(p);
  const auto q = permute_priors<Scalar>(std::span<const Scalar>(p), sigma);
  std::vector<int> idx;
  for (const auto& v : q) {
    const double x = to_double(v);
    idx.push_back(std::clamp(static_cast<int>(std::floor(x * zm.resolution)), 0, zm.resolution - 1));
  }
  const auto& proc = zm.procedures.at(zm.assignment.at(zm.grid().rank(idx)));
  return apply_permutation(proc, sigma);
}

/// Metaprocedure evaluated exactly: the least-expected-length table procedure at p.
template <class Scalar>
const Procedure& metaprocedure_at(const ZoneMap& zm, const std::vector<Scalar>& p) {
  return zm.procedures.at(best_in_table(zm, p));
}

// ---------------------------------------------------------------------------
// n = 2 analytic zones.

enum class ZoneN2 { kA, kB, kC };

inline char to_char(ZoneN2 z) { return z == ZoneN2::kA ? 'A' : (z == ZoneN2::kB ? 'B' : 'C'); }

/// Naive procedure (zone A).
inline Procedure n2_naive() { return decode("P{1}[P{2}[L(00),L(01)],P{2}[L(10),L(11)]]"); }
/// Pool {1,2} then sample 1 (zone C, optimal when p1 <= p2).
inline Procedure n2_pool_left() { return decode("P{1,2}[L(00),P{1}[L(01),P{2}[L(10),L(11)]]]"); }
/// Pool {1,2} then sample 2 (zone B, optimal when p1 > p2).
inline Procedure n2_pool_right() { return decode("P{1,2}[L(00),P{2}[L(10),P{1}[L(01),L(11)]]]"); }

/// Frontier between A and C: x2 = (2 x1 - 1) / (x1 - 1).
template <class Scalar>
Scalar frontier_ac(const Scalar& x1) {
  return Scalar((2 * x1 - 1) / (x1 - 1));
}

/// Frontier between A and B: x2 = (x1 - 1) / (x1 - 2).
template <class Scalar>
Scalar frontier_ab(const Scalar& x1) {
  return Scalar((x1 - 1) / (x1 - 2));
}

/// Triple point coordinate (3 - sqrt 5) / 2.
inline double n2_triple_point() { return (3.0 - std::sqrt(5.0)) / 2.0; }

/// Analytic classification. Equal expected lengths resolve as the optimizer
/// does: the naive tree wins against a pool tree, pool-left against pool-right.
template <class Scalar>
ZoneN2 classify_n2(const std::vector<Scalar>& p) {
  if (p.size() != 2) throw ArgumentError("classify_n2 needs exactly two priors");
  check_priors(p);
  const Scalar& x1 = p[0];
  const Scalar& x2 = p[1];
  // Pool-left beats naive iff x2 (1 - x1) < 1 - 2 x1, i.e. x2 below the A/C frontier.
  if (x1 <= x2) {
    return x2 * (1 - x1) < 1 - 2 * x1 ? ZoneN2::kC : ZoneN2::kA;
  }
  // Pool-right beats naive iff x2 (2 - x1) < 1 - x1, i.e. x2 below the A/B frontier.
  return x2 * (2 - x1) < 1 - x1 ? ZoneN2::kB : ZoneN2::kA;
}

// ---------------------------------------------------------------------------
// Slices of n = 3 maps.

struct SlicePlane {
  enum class Kind { kAxis, kDiagonal } kind = Kind::kAxis;
  int axis = 2;  ///< 0, 1, 2 for x, y, z (axis planes)
  Rational value = 0;

  /// "x=0.3", "y=1/2", "z=0.17" or "sum=1.5" (p1 + p2 + p3 = value, orthogonal to the diagonal).
  static SlicePlane parse(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError("plane must look like z=0.17 or sum=1.5");
    const auto name = text.substr(0, eq);
    SlicePlane pl;
    pl.value = parse_rational(text.substr(eq + 1));
    if (name == "x" || name == "y" || name == "z") {
      pl.kind = Kind::kAxis;
      pl.axis = name == "x" ? 0 : (name == "y" ? 1 : 2);
      if (pl.value < 0 || pl.value > 1) throw ArgumentError("plane lies outside the unit cube");
    } else if (name == "sum") {
      pl.kind = Kind::kDiagonal;
      if (pl.value < 0 || pl.value > 3) throw ArgumentError("plane lies outside the unit cube");
    } else {
      throw ParseError("unknown plane axis '" + std::string(name) + "'");
    }
    return pl;
  }

  std::string str() const {
    const std::string v = format_double(to_double(value));
    if (kind == Kind::kDiagonal) return "sum=" + v;
    return std::string(1, "xyz"[axis]) + "=" + v;
  }
};

struct Slice {
  SlicePlane plane;
  int resolution = 0;
  /// Row-major ids; rows follow the second free coordinate. -1 marks points
  /// outside the cube (diagonal planes only).
  std::vector<std::int32_t> ids;
  std::vector<std::uint16_t> legend;  ///< distinct ids in ascending order

  std::int32_t at(int row, int col) const {
    return ids.at(static_cast<std::size_t>(row) * static_cast<std::size_t>(resolution) +
                  static_cast<std::size_t>(col));
  }

  std::string csv() const {
    std::ostringstream out;
    for (int r = 0; r < resolution; ++r) {
      for (int c = 0; c < resolution; ++c) {
        if (c) out << ',';
        out << at(r, c);
      }
      out << '\n';
    }
    return out.str();
  }
};

/// Grid of zone ids on a plane through the cube; each point is classified by
/// the metaprocedure (least expected length among the map's procedures).
/// Axis planes fix one coordinate and sweep the other two in index order;
/// diagonal planes sweep (p1, p2) and set p3 = value - p1 - p2.
inline Slice slice(const ZoneMap& zm, const SlicePlane& plane, int resolution) {
  if (zm.n != 3) throw ArgumentError("slices need an n=3 zone map");
  if (resolution < 1 || resolution > 4096) throw UnsupportedSize("slice resolution", 4096);
  Slice s;
  s.plane = plane;
  s.resolution = resolution;
  s.ids.assign(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution), -1);
  const double v = to_double(plane.value);
  std::vector<bool> used(zm.procedures.size(), false);
  std::vector<double> p(3);
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      const double a = (c + 0.5) / resolution;
      const double b = (r + 0.5) / resolution;
      if (plane.kind == SlicePlane::Kind::kAxis) {
        int k = 0;
        for (int i = 0; i < 3; ++i) {
          if (i == plane.axis) {
            p[static_cast<std::size_t>(i)] = v;
          } else {
            p[static_cast<std::size_t>(i)] = k++ == 0 ? a : b;
          }
        }
      } else {
        p = {a, b, v - a - b};
        if (p[2] < 0 || p[2] > 1) continue;
      }
      const auto id = best_in_table(zm, p);
      used[id] = true;
      s.ids[static_cast<std::size_t>(r) * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(c)] =
          static_cast<std::int32_t>(id);
    }
  }
  for (std::size_t id = 0; id < used.size(); ++id) {
    if (used[id]) s.legend.push_back(static_cast<std::uint16_t>(id));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Boundary refinement.

struct BoundaryPoint {
  std::vector<Rational> point;  ///< midpoint of the final interval
  Rational t_low, t_high;       ///< bracketing parameters along the segment
  Procedure low_side, high_side;
};

namespace detail {

inline std::vector<Rational> along(const std::vector<Rational>& a, const std::vector<Rational>& b, const Rational& t) {
  std::vector<Rational> p;
  for (std::size_t i = 0; i < a.size(); ++i) p.emplace_back(a[i] + t * (b[i] - a[i]));
  return p;
}

}  // namespace detail

/// Bisects the segment a -> b in exact arithmetic until the parameter interval
/// is at most `tolerance`, tracking where the optimal procedure (by length
/// vector) changes. The endpoints must have different optimal procedures.
inline BoundaryPoint refine_boundary(const std::vector<Rational>& a, const std::vector<Rational>& b,
                                     const Rational& tolerance = Rational(1, 1'000'000'000'000LL)) {
  if (a.size() != b.size()) throw ArgumentError("segment endpoints differ in dimension");
  if (tolerance <= 0) throw ArgumentError("tolerance must be positive");
  const auto graph = SplitGraph::for_universe(static_cast<int>(a.size()));
  OptimizerContext<Rational> ctx(graph);
  auto lv_at = [&](const std::vector<Rational>& p) {
    ctx.solve(p);
    return ctx.lengths();
  };
  const auto la = lv_at(a);
  if (la == lv_at(b)) throw ArgumentError("both endpoints have the same optimal procedure");
  Rational lo = 0, hi = 1;
  while (hi - lo > tolerance) {
    const Rational mid = (lo + hi) / 2;
    if (lv_at(detail::along(a, b, mid)) == la) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  BoundaryPoint out;
  out.t_low = lo;
  out.t_high = hi;
  out.point = detail::along(a, b, (lo + hi) / 2);
  ctx.solve(detail::along(a, b, lo));
  out.low_side = ctx.procedure();
  ctx.solve(detail::along(a, b, hi));
  out.high_side = ctx.procedure();
  return out;
}

/// Bisects for the point where two given procedures have equal expected length.
inline BoundaryPoint refine_boundary(const std::vector<Rational>& a, const std::vector<Rational>& b,
                                     const Procedure& first, const Procedure& second,
                                     const Rational& tolerance = Rational(1, 1'000'000'000'000LL)) {
  if (a.size() != b.size()) throw ArgumentError("segment endpoints differ in dimension");
  const auto l1 = length_vector(first), l2 = length_vector(second);
  auto diff = [&](const Rational& t) {
    const auto p = detail::along(a, b, t);
    return Rational(expected_length<Rational>(l1, p) - expected_length<Rational>(l2, p));
  };
  const Rational d0 = diff(0), d1 = diff(1);
  if (d0 == 0 || d1 == 0 || (d0 < 0) == (d1 < 0)) {
    throw ArgumentError("the two procedures do not cross strictly inside the segment");
  }
  Rational lo = 0, hi = 1;
  while (hi - lo > tolerance) {
    const Rational mid = (lo + hi) / 2;
    if ((diff(mid) < 0) == (d0 < 0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {detail::along(a, b, (lo + hi) / 2), lo, hi, first, second};
}

// ---------------------------------------------------------------------------
// Orbits under coordinate permutations.

struct Orbit {
  std::uint16_t representative;  ///< id whose length vector is least in the orbit
  std::vector<std::uint16_t> members;
  std::size_t size() const noexcept { return members.size(); }
};

/// Groups the zone procedures into orbits of the symmetric group; largest first.
inline std::vector<Orbit> orbit_census(const ZoneMap& zm) {
  std::unordered_map<LengthVector, std::uint16_t, LengthVectorHash> ids;
  for (std::size_t i = 0; i < zm.lengths.size(); ++i) ids.emplace(zm.lengths[i], static_cast<std::uint16_t>(i));
  const auto perms = Permutation::all(zm.n);
  std::vector<bool> done(zm.lengths.size(), false);
  std::vector<Orbit> out;
  for (std::size_t i = 0; i < zm.lengths.size(); ++i) {
    if (done[i]) continue;
    Orbit o{static_cast<std::uint16_t>(i), {}};
    std::vector<std::uint16_t> members;
    const LengthVector* least = &zm.lengths[i];
    for (const auto& sigma : perms) {
      const auto img = permute(zm.lengths[i], sigma);
      const auto it = ids.find(img);
      if (it == ids.end()) throw StateError("zone table is not closed under permutations");
      if (!done[it->second]) {
        done[it->second] = true;
        members.push_back(it->second);
        if (zm.lengths[it->second] < *least) {
          least = &zm.lengths[it->second];
          o.representative = it->second;
        }
      }
    }
    std::sort(members.begin(), members.end());
    o.members = std::move(members);
    out.push_back(std::move(o));
  }
  std::stable_sort(out.begin(), out.end(), [](const Orbit& a, const Orbit& b) { return a.size() > b.size(); });
  return out;
}

// ---------------------------------------------------------------------------
// Persistence.

inline nlohmann::json zone_header(const ZoneMap& zm) {
  nlohmann::json procs = nlohmann::json::array();
  for (const auto& p : zm.procedures) procs.push_back(encode(p));
  return {{"format", "pooltest-zonemap"},
          {"version", 1},
          {"n", zm.n},
          {"resolution", zm.resolution},
          {"domain", zm.domain},
          {"seed", zm.seed},
          {"mode", std::string(to_string(zm.mode))},
          {"zones", zm.zone_count()},
          {"grid_points", zm.assignment.size()},
          {"procedures", std::move(procs)}};
}

inline std::string zone_assignment_base64(const ZoneMap& zm) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(zm.assignment.size() * 2);
  for (auto id : zm.assignment) {
    bytes.push_back(static_cast<std::uint8_t>(id & 0xff));
    bytes.push_back(static_cast<std::uint8_t>(id >> 8));
  }
  return detail::base64_encode(bytes);
}

inline nlohmann::json to_json(const ZoneMap& zm) {
  auto j = zone_header(zm);
  const auto assignment = zone_assignment_base64(zm);
  j["checksum"] = detail::hex64(detail::fnv1a(assignment, detail::fnv1a(j.dump())));
  j["assignment"] = assignment;
  return j;
}

inline ZoneMap zone_map_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "pooltest-zonemap" || j.at("version") != 1) {
      throw ParseError("not a version 1 zone map");
    }
    auto body = j;
    const auto checksum = body.at("checksum").get<std::string>();
    body.erase("checksum");
    const auto assignment_text = body.at("assignment").get<std::string>();
    body.erase("assignment");
    if (detail::hex64(detail::fnv1a(assignment_text, detail::fnv1a(body.dump()))) != checksum) {
      throw ParseError("zone map checksum mismatch");
    }
    ZoneMap zm;
    zm.n = j.at("n").get<int>();
    zm.resolution = j.at("resolution").get<int>();
    zm.domain = j.at("domain").get<std::string>();
    zm.seed = j.at("seed").get<std::uint64_t>();
    zm.mode = j.at("mode") == "exact" ? EvalMode::kExact : EvalMode::kFloat;
    for (const auto& text : j.at("procedures")) {
      zm.procedures.push_back(decode(text.get<std::string>()));
      if (zm.procedures.back().n() != zm.n) throw ParseError("zone procedure over the wrong n");
      zm.lengths.push_back(length_vector(zm.procedures.back()));
    }
    const auto bytes = detail::base64_decode(assignment_text);
    if (bytes.size() % 2 != 0) throw ParseError("assignment has an odd byte count");
    const SimplexGrid grid(zm.n, zm.resolution);
    if (bytes.size() / 2 != grid.size()) throw ParseError("assignment size does not match the grid");
    zm.assignment.resize(bytes.size() / 2);
    for (std::size_t i = 0; i < zm.assignment.size(); ++i) {
      zm.assignment[i] = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
      if (zm.assignment[i] >= zm.procedures.size()) throw ParseError("assignment refers to a missing procedure");
    }
    return zm;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed zone map: ") + e.what());
  }
}

/// File name derived from (n, resolution, mode).
inline std::string zone_file_name(int n, int resolution, EvalMode mode) {
  return "zonemap-n" + std::to_string(n) + "-r" + std::to_string(resolution) + "-" + std::string(to_string(mode)) +
         ".json";
}

inline void save_zone_map(const ZoneMap& zm, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + tmp);
    out << to_json(zm).dump() << '\n';
    if (!out) throw ResourceError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline ZoneMap load_zone_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("zone map file " + path.string() + " not found");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("zone map file is not JSON: " + std::string(e.what()));
  }
  return zone_map_from_json(j);
}

/// Loads the cached map for (n, resolution, mode) from `dir`, or computes and stores it.
/// A cached file that fails verification is recomputed.
inline ZoneMap load_or_compute_zone_map(const std::filesystem::path& dir, int n, const ZoneOptions& opt = {}) {
  const int resolution = opt.resolution == 0 ? default_zone_resolution(n) : opt.resolution;
  const auto path = dir / zone_file_name(n, resolution, opt.mode);
  if (std::filesystem::exists(path)) {
    try {
      auto zm = load_zone_map(path);
      if (zm.n == n && zm.resolution == resolution && zm.mode == opt.mode) return zm;
    } catch (const ParseError&) {
    }
  }
  auto options = opt;
  options.resolution = resolution;
  auto zm = compute_metaprocedure(n, options);
  std::filesystem::create_directories(dir);
  save_zone_map(zm, path);
  return zm;
}

}  // namespace pooltest
