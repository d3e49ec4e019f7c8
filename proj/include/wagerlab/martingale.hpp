#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "wagerlab/betting_tree.hpp"

namespace wagerlab {

inline Word word_from_index(size_t len, uint64_t idx) {
  std::string bits(len, '0');
  for (size_t b = 0; b < len; ++b)
    if (idx & (1ULL << (len - 1 - b))) bits[b] = '1';
  return Word(std::move(bits));
}

inline uint64_t index_from_word(const Word& w) {
  uint64_t idx = 0;
  for (size_t b = 0; b < w.length(); ++b) idx = (idx << 1) | static_cast<uint64_t>(w.bit(b));
  return idx;
}

struct EquivalenceClass {
  size_t length = 0;
  std::vector<Word> members;
};

struct FairnessViolation {
  size_t length = 0;
  Word representative;
  Rational lhs, rhs;
};

// A finite-depth table of d-values: every word of length <= depth has a
// nonnegative value. The fairness condition averages over equivalence
// classes of words with identical value histories; classes relate words of
// equal length only (the fairness sum pairs each word with its two one-bit
// extensions).
class MartingaleProcess {
 public:
  explicit MartingaleProcess(size_t depth, Rational fill = Rational(0))
      : depth_(depth) {
    require(depth <= 16, Code::depth, "process depth capped at 16");
    values_.resize(depth + 1);
    for (size_t l = 0; l <= depth; ++l) values_[l].assign(1ULL << l, fill);
  }

  size_t depth() const { return depth_; }

  const Rational& value(const Word& w) const {
    require(w.length() <= depth_, Code::depth, "word beyond table depth: " + w.str());
    return values_[w.length()][index_from_word(w)];
  }
  void set_value(const Word& w, const Rational& v) {
    require(w.length() <= depth_, Code::depth, "word beyond table depth: " + w.str());
    require(v >= 0, Code::measure, "d-values must be nonnegative");
    values_[w.length()][index_from_word(w)] = v;
  }
  const Rational& value_at(size_t len, uint64_t idx) const { return values_[len][idx]; }
  void set_value_at(size_t len, uint64_t idx, const Rational& v) { values_[len][idx] = v; }

  // Class ids per word at a level: two words are equivalent iff their full
  // prefix value vectors agree, i.e. iff their parents are equivalent and
  // their own values are equal.
  std::vector<int> class_ids(size_t len) const {
    std::vector<int> ids(1, 0);  // the empty word
    for (size_t l = 1; l <= len; ++l) {
      std::map<std::pair<int, Rational>, int> fresh;
      std::vector<int> next(1ULL << l);
      for (uint64_t i = 0; i < (1ULL << l); ++i) {
        std::pair<int, Rational> key{ids[i >> 1], values_[l][i]};
        auto [it, inserted] = fresh.try_emplace(key, static_cast<int>(fresh.size()));
        next[i] = it->second;
      }
      ids = std::move(next);
    }
    return ids;
  }

  EquivalenceClass eq_class(const Word& w) const {
    require(w.length() <= depth_, Code::depth, "word beyond table depth: " + w.str());
    auto ids = class_ids(w.length());
    int mine = ids[index_from_word(w)];
    EquivalenceClass out;
    out.length = w.length();
    for (uint64_t i = 0; i < ids.size(); ++i)
      if (ids[i] == mine) out.members.push_back(word_from_index(w.length(), i));
    return out;
  }

  // For every class C at each length < depth: 2*sum d(v) over C must equal
  // sum d(v0)+d(v1) over C, exactly. Violations are data, not errors.
  std::vector<FairnessViolation> check_fairness() const {
    std::vector<FairnessViolation> out;
    for (size_t l = 0; l < depth_; ++l) {
      auto ids = class_ids(l);
      std::map<int, Rational> lhs, rhs;
      std::map<int, uint64_t> rep;
      for (uint64_t i = 0; i < (1ULL << l); ++i) {
        int c = ids[i];
        lhs[c] += values_[l][i] * 2;
        rhs[c] += values_[l + 1][i << 1] + values_[l + 1][(i << 1) | 1];
        rep.try_emplace(c, i);
      }
      for (auto& [c, sum] : lhs)
        if (sum != rhs[c])
          out.push_back({l, word_from_index(l, rep[c]), sum, rhs[c]});
    }
    return out;
  }

 private:
  size_t depth_;
  std::vector<std::vector<Rational>> values_;
};

namespace detail {

inline void strategy_grow(BettingTree& tree, const MartingaleProcess& d, int node_id,
                          const std::vector<Word>& cls, size_t level, const Rational& val) {
  for (size_t n = level + 1; n <= d.depth(); ++n) {
    // Materialize all length-n extensions of the class, lexicographically.
    std::vector<Word> exts;
    {
      SequenceSet s((std::vector<Word>(cls)));
      exts = s.refined(n).words();
    }
    bool all_equal_val = true;
    for (const auto& e : exts)
      if (d.value(e) != val) { all_equal_val = false; break; }
    if (all_equal_val) continue;
    // Split by value, groups ordered by first occurrence at this level.
    std::vector<Rational> group_vals;
    std::vector<std::vector<Word>> groups;
    for (const auto& e : exts) {
      const Rational& v = d.value(e);
      size_t g = 0;
      for (; g < group_vals.size(); ++g)
        if (group_vals[g] == v) break;
      if (g == group_vals.size()) {
        group_vals.push_back(v);
        groups.emplace_back();
      }
      groups[g].push_back(e);
    }
    // Peel groups left to right as a chain of binary modified decisions.
    int cur = node_id;
    for (size_t g = 0; g + 1 < groups.size(); ++g) {
      SequenceSet own(std::vector<Word>(groups[g]));
      Rational own_mass = group_vals[g] * own.measure();
      std::vector<Word> rest_words;
      Rational rest_mass = 0;
      for (size_t h = g + 1; h < groups.size(); ++h) {
        rest_words.insert(rest_words.end(), groups[h].begin(), groups[h].end());
        rest_mass += group_vals[h] * SequenceSet(std::vector<Word>(groups[h])).measure();
      }
      auto [c0, c1] =
          tree.apply_decision(cur, own, own_mass, SequenceSet(std::move(rest_words)), rest_mass);
      strategy_grow(tree, d, c0, groups[g], n, group_vals[g]);
      cur = c1;
    }
    strategy_grow(tree, d, cur, groups.back(), n, group_vals.back());
    return;
  }
  // No value change through the table depth: stall here. The finite table
  // cannot certify "no change ever", so the leaf carries a truncation marker.
  tree.truncated.insert(node_id);
}

}  // namespace detail

// Builds the modified-variant tree whose nodes correspond to equivalence
// classes V with mass d(w)*lambda(V). Requires a fair process.
inline BettingTree strategy_from_process(const MartingaleProcess& d) {
  auto violations = d.check_fairness();
  require(violations.empty(), Code::unfair,
          "process violates fairness in " + std::to_string(violations.size()) + " class(es)");
  BettingTree tree(Variant::modified, SequenceSet::whole_space(), d.value(Word()));
  detail::strategy_grow(tree, d, tree.root(), {Word()}, 0, d.value(Word()));
  return tree;
}

namespace detail {

inline void process_fill(MartingaleProcess& d, const std::vector<Word>& region, size_t from,
                         size_t to, const Rational& val) {
  // Sets val on every extension of the region at lengths (from, to].
  for (const auto& w : region) {
    for (size_t j = from + 1; j <= to; ++j) {
      uint64_t base = index_from_word(w) << (j - w.length());
      uint64_t count = 1ULL << (j - w.length());
      for (uint64_t i = 0; i < count; ++i) d.set_value_at(j, base + i, val);
    }
  }
}

inline void process_assign(MartingaleProcess& d, const BettingTree& tree, int node_id,
                           const std::vector<Word>& cls, size_t level, const Rational& val) {
  const auto& n = tree.node(node_id);
  if (!n.decided()) {
    // No betting decision: the value propagates to all extensions.
    process_fill(d, cls, level, d.depth(), val);
    return;
  }
  const auto& c0 = tree.node(n.child0);
  const auto& c1 = tree.node(n.child1);
  size_t np = std::max(level + 1,
                       std::max(c0.set.max_length(), c1.set.max_length()));
  require(np <= d.depth(), Code::depth,
          "table depth " + std::to_string(d.depth()) +
              " smaller than required split length " + std::to_string(np));
  // Intermediate lengths inherit the parent value; length np takes the
  // child capitals on the respective extensions.
  process_fill(d, cls, level, np - 1, val);
  Rational v0 = c0.mass / c0.set.measure();
  Rational v1 = c1.mass / c1.set.measure();
  std::vector<Word> v0_words, v1_words;
  for (const auto& w : cls) {
    uint64_t base = index_from_word(w) << (np - w.length());
    uint64_t count = 1ULL << (np - w.length());
    for (uint64_t i = 0; i < count; ++i) {
      Word e = word_from_index(np, base + i);
      if (c0.set.covers_meets(e)) {
        d.set_value_at(np, base + i, v0);
        v0_words.push_back(e);
      } else {
        d.set_value_at(np, base + i, v1);
        v1_words.push_back(e);
      }
    }
  }
  process_assign(d, tree, n.child0, v0_words, np, v0);
  process_assign(d, tree, n.child1, v1_words, np, v1);
}

}  // namespace detail

// Reads a standard or modified tree back into a value table filled to the
// requested depth. Words outside the root region keep the root capital at
// every length, so fairness holds globally.
inline MartingaleProcess process_from_strategy(const BettingTree& tree, size_t depth) {
  require(tree.variant() != Variant::nonmonotonic, Code::variant,
          "conversion is defined for standard and modified trees");
  Rational c_root = tree.capital(tree.root());
  MartingaleProcess d(depth, c_root);
  const auto& root_set = tree.node(tree.root()).set;
  size_t root_level = root_set.max_length();
  require(root_level <= depth, Code::depth, "root set deeper than the table");
  std::vector<Word> region = root_set.refined(root_level).words();
  detail::process_assign(d, tree, tree.root(), region, root_level, c_root);
  return d;
}

}  // namespace wagerlab
