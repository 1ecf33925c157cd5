#include <catch_amalgamated.hpp>

#include <random>

#include "pooltest/codec.hpp"
#include "pooltest/core.hpp"
#include "pooltest/enumeration.hpp"
#include "pooltest/outcome_set.hpp"
#include "pooltest/probability.hpp"
#include "pooltest/procedure.hpp"

using namespace pooltest;

namespace {

// Pool-first procedure for n=2: sample 2 is resolved before sample 1.
const char* kLeftPool = "P{1,2}[L(00),P{1}[L(01),P{2}[L(10),L(11)]]]";
const char* kRightPool = "P{1,2}[L(00),P{2}[L(10),P{1}[L(01),L(11)]]]";
const char* kNaive2 = "P{1}[P{2}[L(00),L(01)],P{2}[L(10),L(11)]]";

}  // namespace

TEST_CASE("pool order is cardinality then lexicographic") {
  CHECK(pool_less(0b100, 0b011));
  CHECK(pool_less(0b001, 0b010));
  CHECK(pool_less(0b011, 0b101));
  CHECK(pool_less(0b101, 0b110));
  CHECK_FALSE(pool_less(0b101, 0b101));
  const auto order = pools_in_order(0b111);
  const std::vector<Mask> expected{0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111};
  CHECK(order == expected);

  // Against a direct comparison of sorted index lists.
  for (Mask a = 1; a < 64; ++a) {
    for (Mask b = 1; b < 64; ++b) {
      const auto ia = mask_indices(a), ib = mask_indices(b);
      const bool ref = ia.size() != ib.size() ? ia.size() < ib.size() : ia < ib;
      CHECK(pool_less(a, b) == ref);
    }
  }
}

TEST_CASE("pool and outcome construction") {
  CHECK_THROWS_AS(Pool(3, 0), ArgumentError);
  CHECK_THROWS_AS(Pool(2, 0b100), ArgumentError);
  const std::vector<int> dup{1, 1};
  CHECK_THROWS_AS(Pool::from_indices(3, dup), ArgumentError);
  const std::vector<int> idx{3, 1};
  CHECK(Pool::from_indices(3, idx).mask() == 0b101);
  CHECK(Outcome::parse("010").bits() == 0b010);
  CHECK(Outcome::parse("100").bits() == 0b001);
  CHECK(Outcome::parse("100").infected(1));
  CHECK(Outcome(3, 0b110).str() == "011");
  CHECK_THROWS_AS(Outcome::parse("01x"), ParseError);
  CHECK_THROWS_AS(Outcome::parse(""), ParseError);
}

TEST_CASE("split examples") {
  const auto u2 = OutcomeSet::universe(2);
  auto [neg, pos] = split(u2, Pool(2, 0b11));
  CHECK(neg == OutcomeSet::parse({"00"}));
  CHECK(pos == OutcomeSet::parse({"01", "10", "11"}));

  const auto u3 = OutcomeSet::universe(3);
  auto [n3, p3] = split(u3, Pool(3, 0b011));
  CHECK(n3 == OutcomeSet::parse({"000", "001"}));
  CHECK(p3.size() == 6);

  const auto s = OutcomeSet::parse({"010", "011", "100", "101", "110", "111"});
  auto [a, b] = split(s, Pool::from_indices(3, std::vector<int>{1, 3}));
  CHECK(a == OutcomeSet::parse({"010"}));
  CHECK(b == OutcomeSet::parse({"011", "100", "101", "110", "111"}));

  CHECK_THROWS_AS(split(u3, Pool(2, 1)), ArgumentError);
}

TEST_CASE("split is a partition") {
  std::mt19937_64 rng(7);
  for (int n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 50; ++trial) {
      OutcomeSet s = OutcomeSet::empty(n);
      for (Mask o = 0; o < (Mask{1} << n); ++o) {
        if (rng() & 1) s.insert(o);
      }
      const Mask pool = static_cast<Mask>(rng() % full_mask(n)) + 1;
      auto [neg, pos] = s.split(pool);
      CHECK((neg | pos) == s);
      CHECK((neg & pos).is_empty());
      neg.for_each([&](Mask o) { CHECK((o & pool) == 0); });
      pos.for_each([&](Mask o) { CHECK((o & pool) != 0); });
    }
  }
}

TEST_CASE("decided points") {
  auto d = decided_points(OutcomeSet::parse({"101", "111"}));
  CHECK(d.clean == 0);
  CHECK(d.infected == 0b101);
  d = decided_points(OutcomeSet::universe(3));
  CHECK(d.clean == 0);
  CHECK(d.infected == 0);
  d = decided_points(OutcomeSet::parse({"010"}));
  CHECK(d.clean == 0b101);
  CHECK(d.infected == 0b010);
  CHECK_THROWS_AS(decided_points(OutcomeSet::empty(2)), ArgumentError);
}

TEST_CASE("validate") {
  CHECK(validate(decode(kNaive2), 2).ok());
  CHECK(validate(decode(kLeftPool), 2).ok());

  // Repeating pool {1,2} below its own positive branch.
  Procedure::Builder b(2);
  b.node(
      0b11, [&] { b.leaf(0b00); },
      [&] {
        b.node(
            0b11, [&] { b.leaf(0b01); },
            [&] {
              b.node(
                  0b01, [&] { b.leaf(0b10); }, [&] { b.leaf(0b11); });
            });
      });
  const auto repeated = std::move(b).finish();
  const auto report = validate(repeated, 2);
  CHECK_FALSE(report.ok());
  CHECK(report.str().find("root.pos") != std::string::npos);

  // Three leaves for n=2.
  const auto three = Procedure::node(0b01, Procedure::leaf(2, 0b00),
                                     Procedure::node(0b10, Procedure::leaf(2, 0b01), Procedure::leaf(2, 0b11)));
  CHECK_FALSE(validate(three, 2).ok());
  CHECK_FALSE(validate(decode(kNaive2), 3).ok());
}

TEST_CASE("execution reaches the true outcome") {
  for (int n = 1; n <= 3; ++n) {
    for (const auto& p : enumerate_procedures(n)) {
      for (Mask truth = 0; truth < (Mask{1} << n); ++truth) {
        REQUIRE(execute(p, truth).first == truth);
      }
    }
  }
}

TEST_CASE("permutations") {
  const auto left = decode(kLeftPool);
  CHECK(apply_permutation(left, Permutation::identity(2)) == left);
  const auto swap = Permutation::swap(2, 1, 2);
  CHECK(encode(apply_permutation(left, swap)) == kRightPool);
  CHECK(apply_permutation(apply_permutation(left, swap), swap) == left);
  CHECK_THROWS_AS(apply_permutation(left, Permutation::identity(3)), ArgumentError);
  CHECK_THROWS_AS(Permutation({0, 0}), ArgumentError);

  for (const auto& p : enumerate_procedures(3)) {
    for (const auto& sigma : Permutation::all(3)) {
      const auto q = apply_permutation(p, sigma);
      REQUIRE(validate(q, 3).ok());
      auto a = length_vector(p).depths;
      auto b = length_vector(q).depths;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      REQUIRE(a == b);
      REQUIRE(length_vector(q) == permute(length_vector(p), sigma));
    }
  }
}

TEST_CASE("single-bit monotonicity of leaf depths") {
  auto monotone = [](const Procedure& p) {
    const auto lv = length_vector(p);
    for (Mask b0 = 0; b0 < (Mask{1} << p.n()); ++b0) {
      for (int i = 0; i < p.n(); ++i) {
        const Mask b1 = b0 | (Mask{1} << i);
        if (lv[b0] > lv[b1]) return false;
      }
    }
    return true;
  };
  for (int n = 1; n <= 2; ++n) {
    for (const auto& p : enumerate_procedures(n)) CHECK(monotone(p));
  }
  // Not universal from n=3 on: testing {2,3} right after a positive {1}
  // resolves 100 in two tests while 000 needs three.
  const auto counter = decode(
      "P{1}[P{2}[P{3}[L(000),L(001)],P{3}[L(010),L(011)]],P{2,3}[L(100),P{2}[L(101),P{3}[L(110),L(111)]]]]");
  CHECK_FALSE(monotone(counter));
  int violations = 0;
  for (const auto& p : enumerate_procedures(3)) violations += monotone(p) ? 0 : 1;
  CHECK(violations == 42);
}

TEST_CASE("canonicalize") {
  const auto a = decode("P{1}[P{2}[L(00),L(01)],P{2}[L(10),L(11)]]");
  const auto b = decode("P{2}[P{1}[L(00),L(10)],P{1}[L(01),L(11)]]");
  CHECK(canonicalize(a) == canonicalize(b));

  // Sample 1 is clean-decided on the negative branch of {1}.
  const auto ext = canonicalize(decode("P{1}[P{2}[L(00),L(01)],P{2}[L(10),L(11)]]"));
  CHECK(encode(ext) == "P{1}[P{1,2}[L(00),L(01)],P{2}[L(10),L(11)]]");

  for (int n = 1; n <= 3; ++n) {
    for (const auto& p : enumerate_procedures(n)) {
      const auto c = canonicalize(p);
      REQUIRE(validate(c, n).ok());
      REQUIRE(length_vector(c) == length_vector(p));
      REQUIRE(canonicalize(c) == c);
    }
  }
  CHECK_THROWS_AS(canonicalize(Procedure::leaf(2, 0)), ArgumentError);
}

TEST_CASE("text codec") {
  CHECK(encode(decode(kLeftPool)) == kLeftPool);
  CHECK_THROWS_AS(decode("P{1}[L(0)]"), ParseError);
  CHECK_THROWS_AS(decode("P{1}[L(0),L(1)"), ParseError);
  CHECK_THROWS_AS(decode("P{2,1}[L(00),L(11)]"), ParseError);
  CHECK_THROWS_AS(decode("P{3}[L(00),L(01)]"), ParseError);
  CHECK_THROWS_AS(decode("P{1}[L(00),L(1)]"), ParseError);
  CHECK_THROWS_AS(decode("P{1}[L(1),L(0)]"), ParseError);
  CHECK_THROWS_AS(decode(" L(0)"), ParseError);
  CHECK_THROWS_AS(decode("L(0)"), ParseError);
  CHECK(encode(decode("P{1}[L(0),L(1)]")) == "P{1}[L(0),L(1)]");
  for (int n = 1; n <= 3; ++n) {
    for (const auto& p : enumerate_procedures(n)) {
      REQUIRE(decode(encode(p)) == p);
      REQUIRE(procedure_from_json(to_json(p)) == p);
    }
  }
}

TEST_CASE("json codec") {
  const auto j = to_json(decode(kLeftPool));
  CHECK(j["n"] == 2);
  CHECK(j["tree"]["pool"] == nlohmann::json::array({1, 2}));
  CHECK(j["tree"]["neg"]["leaf"] == "00");
  CHECK_THROWS_AS(procedure_from_json(nlohmann::json::object()), ParseError);
  auto bad = j;
  bad["tree"]["pool"] = nlohmann::json::array({1, 3});
  CHECK_THROWS_AS(procedure_from_json(bad), ParseError);
}
