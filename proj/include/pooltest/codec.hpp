#pragma once

// Text and JSON encodings of procedures.
//
//   leaf := "L(" bits ")"            bits: n characters, '1' = infected
//   node := "P{" i1 "," i2 ... "}[" negative "," positive "]"
//
// Indices are 1-based and ascending; no whitespace is produced or accepted.

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pooltest/core.hpp"
#include "pooltest/procedure.hpp"

namespace pooltest {

inline std::string pool_text(Mask pool) {
  std::string s;
  for (int idx : mask_indices(pool)) {
    if (!s.empty()) s += ',';
    s += std::to_string(idx);
  }
  return s;
}

inline std::string encode(const Procedure& proc) {
  std::string out;
  out.reserve(proc.node_count() * 8);
  auto rec = [&](auto&& self, std::size_t i) -> void {
    const auto& nd = proc.at(i);
    if (nd.is_leaf()) {
      out += "L(";
      out += Outcome::to_bit_string(nd.outcome, proc.n());
      out += ')';
      return;
    }
    out += "P{";
    out += pool_text(nd.pool);
    out += "}[";
    self(self, static_cast<std::size_t>(nd.neg));
    out += ',';
    self(self, static_cast<std::size_t>(nd.pos));
    out += ']';
  };
  rec(rec, 0);
  return out;
}

namespace detail {

class TextDecoder {
 public:
  explicit TextDecoder(std::string_view text) : text_(text) {}

  Procedure run() {
    // First pass determines n from the leaves.
    const auto bits_start = text_.find("L(");
    if (bits_start == std::string_view::npos) fail("no leaf found");
    const auto bits_end = text_.find(')', bits_start);
    if (bits_end == std::string_view::npos) fail("unterminated leaf");
    n_ = static_cast<int>(bits_end - bits_start - 2);
    if (n_ < 1 || n_ > kMaxSamples) fail("leaf has invalid length");
    Procedure::Builder b(n_);
    parse(b);
    if (pos_ != text_.size()) fail("trailing characters");
    return std::move(b).finish();
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("cannot decode procedure at offset " + std::to_string(pos_) + ": " + why);
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void parse(Procedure::Builder& b) {
    if (++depth_ > 4096) fail("nesting too deep");
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == 'L') {
      ++pos_;
      expect('(');
      const auto end = text_.find(')', pos_);
      if (end == std::string_view::npos) fail("unterminated leaf");
      const auto bits = text_.substr(pos_, end - pos_);
      if (static_cast<int>(bits.size()) != n_) fail("leaf length differs from other leaves");
      const Outcome o = Outcome::parse(bits);
      pos_ = end + 1;
      b.leaf(o.bits());
    } else if (text_[pos_] == 'P') {
      ++pos_;
      expect('{');
      Mask pool = 0;
      int last = 0;
      while (true) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        if (start == pos_ || pos_ - start > 3) fail("expected a sample index");
        const int idx = std::stoi(std::string(text_.substr(start, pos_ - start)));
        if (idx < 1 || idx > n_) fail("sample index " + std::to_string(idx) + " outside [1, n]");
        if (idx <= last) fail("pool indices must be strictly ascending");
        last = idx;
        pool |= Mask{1} << (idx - 1);
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        break;
      }
      expect('}');
      expect('[');
      b.node(
          pool, [&] { parse(b); },
          [&] {
            expect(',');
            parse(b);
          });
      expect(']');
    } else {
      fail("expected 'L' or 'P'");
    }
    --depth_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int n_ = 0;
  int depth_ = 0;
};

}  // namespace detail

/// Decodes and validates; invalid trees are rejected with the validation report.
inline Procedure decode(std::string_view text) {
  Procedure proc = detail::TextDecoder(text).run();
  const auto report = validate(proc, proc.n());
  if (!report.ok()) throw ParseError("decoded tree is not a valid procedure: " + report.str());
  return proc;
}

inline nlohmann::json to_json(const Procedure& proc) {
  auto rec = [&](auto&& self, std::size_t i) -> nlohmann::json {
    const auto& nd = proc.at(i);
    if (nd.is_leaf()) return {{"leaf", Outcome::to_bit_string(nd.outcome, proc.n())}};
    return {{"pool", mask_indices(nd.pool)},
            {"neg", self(self, static_cast<std::size_t>(nd.neg))},
            {"pos", self(self, static_cast<std::size_t>(nd.pos))}};
  };
  return {{"n", proc.n()}, {"tree", rec(rec, 0)}};
}

inline Procedure procedure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("tree") || !j["n"].is_number_integer()) {
    throw ParseError("procedure JSON needs integer 'n' and object 'tree'");
  }
  const int n = j["n"].get<int>();
  check_sample_count(n);
  Procedure::Builder b(n);
  auto rec = [&](auto&& self, const nlohmann::json& node, int depth) -> void {
    if (depth > 4096) throw ParseError("procedure JSON nested too deeply");
    if (!node.is_object()) throw ParseError("tree node must be an object");
    if (node.contains("leaf")) {
      if (!node["leaf"].is_string()) throw ParseError("leaf must be a bit string");
      const Outcome o = Outcome::parse(node["leaf"].get<std::string>());
      if (o.n() != n) throw ParseError("leaf length differs from n");
      b.leaf(o.bits());
      return;
    }
    if (!node.contains("pool") || !node.contains("neg") || !node.contains("pos") ||
        !node["pool"].is_array()) {
      throw ParseError("internal node needs 'pool', 'neg' and 'pos'");
    }
    std::vector<int> idx;
    for (const auto& v : node["pool"]) {
      if (!v.is_number_integer()) throw ParseError("pool entries must be integers");
      idx.push_back(v.get<int>());
    }
    Mask pool = 0;
    try {
      pool = Pool::from_indices(n, idx).mask();
    } catch (const ArgumentError& e) {
      throw ParseError(e.what());
    }
    b.node(
        pool, [&] { self(self, node["neg"], depth + 1); },
        [&] { self(self, node["pos"], depth + 1); });
  };
  rec(rec, j["tree"], 0);
  Procedure proc = std::move(b).finish();
  const auto report = validate(proc, n);
  if (!report.ok()) throw ParseError("procedure JSON is not a valid procedure: " + report.str());
  return proc;
}

}  // namespace pooltest
