#pragma once

#include <optional>
#include <vector>

#include "wagerlab/adversary_walk.hpp"
#include "wagerlab/io.hpp"

namespace wagerlab {

// A deterministic toy prefix-free machine standing in for the universal
// machine. Programs are bit strings: a sequence of self-delimiting
// instructions terminated by HALT, and a program is valid only if parsing
// consumes every bit exactly. That makes the set of valid programs
// prefix-free, so the Kraft inequality holds over them.
//
// Instruction encoding (2-bit tags):
//   00 LITERAL-RUN  gamma(len) then len raw bits             -> the bits
//   01 REPEAT       1 bit b, gamma(count-17), count >= 18    -> b repeated
//   10 REPLAY       2-bit registry key, gamma(t+1), gamma(pad+1)
//                   -> the registered adversary's prefix at measure
//                      milestone t (t=0: at its terminal stall), extended by
//                      pad lexicographically-least bits inside that node
//   11 HALT
//
// Numbers use a unary length header followed by the value bits (gamma-style):
// gamma(n) = (bitlen(n)-1 zeros) ++ binary(n).  The REPEAT run-length floor
// of 18 keeps short runs out of the code space; desk-scale compressible
// strings start around that length.
class ToyMachine {
 public:
  explicit ToyMachine(std::vector<const BettingTree*> registry = {},
                      long walk_budget = 1u << 20)
      : registry_(std::move(registry)), walk_budget_(walk_budget) {
    require(registry_.size() <= 4, Code::registry, "registry holds at most 4 strategies");
  }

  static constexpr size_t kRepeatFloor = 18;

  const std::vector<const BettingTree*>& registry() const { return registry_; }

  static void append_gamma(std::string& out, uint64_t n) {
    require(n >= 1, Code::parse, "gamma encodes positive integers");
    int bits = 64 - __builtin_clzll(n);
    out.append(bits - 1, '0');
    for (int i = bits - 1; i >= 0; --i) out.push_back((n >> i) & 1 ? '1' : '0');
  }

  static Word encode_literal(const Word& bits) {
    require(!bits.empty(), Code::parse, "literal run must be nonempty");
    std::string p = "00";
    append_gamma(p, bits.length());
    p += bits.bits();
    p += "11";
    return Word(std::move(p));
  }

  static Word encode_repeat(int bit, size_t count) {
    require(count >= kRepeatFloor, Code::parse, "repeat count below the floor");
    std::string p = "01";
    p.push_back(bit ? '1' : '0');
    append_gamma(p, count - (kRepeatFloor - 1));
    p += "11";
    return Word(std::move(p));
  }

  static Word encode_replay(int key, int t, size_t pad) {
    require(key >= 0 && key < 4, Code::registry, "replay key must be 0..3");
    std::string p = "10";
    p.push_back((key >> 1) ? '1' : '0');
    p.push_back((key & 1) ? '1' : '0');
    append_gamma(p, static_cast<uint64_t>(t) + 1);
    append_gamma(p, static_cast<uint64_t>(pad) + 1);
    p += "11";
    return Word(std::move(p));
  }

  // Runs a program for at most step_budget steps. Returns the output word,
  // or nothing if the program is invalid or does not halt within budget.
  std::optional<Word> run(const Word& program, long step_budget) const {
    const std::string& p = program.bits();
    size_t pos = 0;
    long steps = 0;
    std::string out;
    auto read_gamma = [&](uint64_t& value) -> bool {
      size_t zeros = 0;
      while (pos < p.size() && p[pos] == '0') {
        ++pos;
        ++zeros;
        if (zeros > 57) return false;
      }
      if (pos + zeros + 1 > p.size()) return false;
      value = 0;
      for (size_t i = 0; i <= zeros; ++i) value = (value << 1) | (p[pos++] == '1' ? 1u : 0u);
      return true;
    };
    while (true) {
      if (pos + 2 > p.size()) return std::nullopt;
      int tag = (p[pos] == '1' ? 2 : 0) | (p[pos + 1] == '1' ? 1 : 0);
      pos += 2;
      ++steps;
      if (tag == 3) {  // HALT: must land exactly on the end
        if (pos != p.size()) return std::nullopt;
        return Word(std::move(out));
      }
      if (tag == 0) {  // LITERAL-RUN
        uint64_t len;
        if (!read_gamma(len)) return std::nullopt;
        if (pos + len > p.size()) return std::nullopt;
        steps += static_cast<long>(len);
        if (steps > step_budget) return std::nullopt;
        out.append(p, pos, len);
        pos += len;
      } else if (tag == 1) {  // REPEAT
        if (pos >= p.size()) return std::nullopt;
        char b = p[pos++];
        uint64_t g;
        if (!read_gamma(g)) return std::nullopt;
        uint64_t count = g + (kRepeatFloor - 1);
        if (static_cast<long>(count) > step_budget) return std::nullopt;
        steps += static_cast<long>(count);
        if (steps > step_budget) return std::nullopt;
        out.append(count, b);
      } else {  // REPLAY
        if (pos + 2 > p.size()) return std::nullopt;
        int key = (p[pos] == '1' ? 2 : 0) | (p[pos + 1] == '1' ? 1 : 0);
        pos += 2;
        uint64_t t1, pad1;
        if (!read_gamma(t1)) return std::nullopt;
        if (!read_gamma(pad1)) return std::nullopt;
        if (static_cast<size_t>(key) >= registry_.size()) return std::nullopt;
        int t = static_cast<int>(t1 - 1);
        size_t pad = static_cast<size_t>(pad1 - 1);
        auto walk = adversary_walk(*registry_[key], walk_budget_);
        steps += static_cast<long>(walk.visited.size());
        Word base;
        int node;
        if (t == 0) {
          base = walk.stall_prefix;
          node = walk.terminal_node;
        } else {
          const WalkMilestone* hit = nullptr;
          for (const auto& m : walk.milestones)
            if (m.t == t) { hit = &m; break; }
          if (!hit) return std::nullopt;  // t beyond the milestones reached
          base = hit->prefix;
          node = hit->node;
        }
        steps += static_cast<long>(pad);
        if (steps > step_budget) return std::nullopt;
        Word chunk =
            lex_least_fill(registry_[key]->node(node).set, base, base.length() + pad);
        out += chunk.bits();
      }
    }
  }

  // Dovetails all programs in length-then-lexicographic order, each for
  // step_budget steps; every halting program whose output is strictly longer
  // than the program yields an Emission.
  std::vector<Emission> enumerate(size_t max_program_len, long step_budget) const {
    require(max_program_len <= 26, Code::depth, "enumeration capped at 26-bit programs");
    std::vector<Emission> out;
    size_t seq = 0;
    for (size_t len = 1; len <= max_program_len; ++len) {
      for (uint64_t idx = 0; idx < (1ULL << len); ++idx) {
        std::string bits(len, '0');
        for (size_t b = 0; b < len; ++b)
          if (idx & (1ULL << (len - 1 - b))) bits[b] = '1';
        auto result = run(Word(bits), step_budget);
        if (!result) continue;
        if (result->length() <= len) continue;
        Emission e;
        e.prefix = std::move(*result);
        e.program_length = len;
        e.savings = static_cast<long>(e.prefix.length()) - static_cast<long>(len);
        e.sequence_number = seq++;
        out.push_back(std::move(e));
      }
    }
    return out;
  }

 private:
  std::vector<const BettingTree*> registry_;
  long walk_budget_;
};

// Sum of 2^-l(p) over emissions with savings >= k, where a prefix extending
// an earlier-kept prefix contributes no extra mass.
inline Rational kraft_mass(const std::vector<Emission>& emissions, long k) {
  std::vector<const Word*> kept;
  Rational total = 0;
  for (const auto& e : emissions) {
    if (e.savings < k) continue;
    bool covered = false;
    for (const auto* w : kept)
      if (w->is_prefix_of(e.prefix)) { covered = true; break; }
    if (covered) continue;
    kept.push_back(&e.prefix);
    total += pow2_neg(static_cast<unsigned>(e.prefix.length()));
  }
  return total;
}

// The deterministic opponents behind the builtin REPLAY registry: single-path
// chains that keep betting three quarters of their mass against a fixed bit
// pattern, so the less-mass descent follows the pattern all the way down.
// Pattern for key k: the two bits of k, then "10" repeated. Depths 18, 19,
// 20, 20.
inline std::vector<BettingTree> builtin_chain_opponents() {
  const size_t depths[4] = {18, 19, 20, 20};
  std::vector<BettingTree> out;
  for (int key = 0; key < 4; ++key) {
    BettingTree tree(Variant::standard, SequenceSet::whole_space(), Rational(1));
    int cur = tree.root();
    std::string prefix;
    for (size_t d = 0; d < depths[key]; ++d) {
      char bit;
      if (d == 0)
        bit = (key >> 1) ? '1' : '0';
      else if (d == 1)
        bit = (key & 1) ? '1' : '0';
      else
        bit = (d % 2 == 0) ? '1' : '0';
      Rational m = tree.node(cur).mass;
      std::string follow = prefix + bit;
      std::string avoid = prefix + (bit == '0' ? '1' : '0');
      auto [c0, c1] = tree.apply_decision(cur, SequenceSet({Word(follow)}), m / 4,
                                          SequenceSet({Word(avoid)}), m * 3 / 4);
      cur = c0;
      prefix = follow;
    }
    out.push_back(std::move(tree));
  }
  return out;
}

}  // namespace wagerlab
