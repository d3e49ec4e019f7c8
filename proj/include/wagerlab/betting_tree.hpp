#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wagerlab/sequence_set.hpp"

namespace wagerlab {

enum class Variant { standard, modified, nonmonotonic };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::modified: return "modified";
    case Variant::nonmonotonic: return "nonmonotonic";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "standard") return Variant::standard;
  if (s == "modified") return Variant::modified;
  if (s == "nonmonotonic") return Variant::nonmonotonic;
  fail(Code::parse, "unknown variant: " + s);
}

struct BettingNode {
  int id = 0;
  SequenceSet set;
  Rational mass;
  int parent = -1;
  int child0 = -1;
  int child1 = -1;
  bool set_released = false;  // set freed; reconstructible as the child union
  bool decided() const { return child0 >= 0; }
};

// A betting decision tree: the (S, m) game states and the lazily grown map of
// decisions. Partial trees are first-class; an undecided leaf means "no
// further bets". Decisions are validated eagerly and never repaired. Node ids
// are dense integers in creation order.
class BettingTree {
 public:
  BettingTree(Variant variant, SequenceSet root_set, Rational root_mass)
      : variant_(variant) {
    require(!root_set.empty(), Code::measure, "root set must be nonempty");
    require(root_mass >= 0, Code::mass, "root mass must be nonnegative");
    nodes_.push_back(BettingNode{0, std::move(root_set), std::move(root_mass), -1, -1, -1});
  }

  Variant variant() const { return variant_; }
  int root() const { return 0; }
  size_t node_count() const { return nodes_.size(); }
  const BettingNode& node(int id) const {
    require(id >= 0 && static_cast<size_t>(id) < nodes_.size(), Code::parse,
            "no such node id " + std::to_string(id));
    return nodes_[id];
  }

  std::vector<int> leaves() const {
    std::vector<int> out;
    for (const auto& n : nodes_)
      if (!n.decided()) out.push_back(n.id);
    return out;
  }

  Rational capital(int id) const {
    const auto& n = node(id);
    Rational lam = n.set.measure();
    require(lam > 0, Code::measure, "capital of zero-measure node");
    return n.mass / lam;
  }

  // Records a decision under `parent`, enforcing every variant invariant:
  // the children partition the parent's cylinder union exactly, masses are
  // conserved, and the measure constraint of the variant holds.
  std::pair<int, int> apply_decision(int parent, SequenceSet s0, Rational m0,
                                     SequenceSet s1, Rational m1) {
    const auto& p = node(parent);
    require(!p.decided(), Code::already_decided,
            "node " + std::to_string(parent) + " already has a decision");
    require(m0 >= 0 && m1 >= 0, Code::mass, "child masses must be nonnegative");
    require(m0 + m1 == p.mass, Code::mass, "m0+m1 must equal the parent mass");
    require(!s0.empty() && !s1.empty(), Code::partition, "child sets must be nonempty");
    // The merged word list being an antichain makes the children pairwise
    // unrelated, hence disjoint as cylinder unions; containment plus the
    // measure identity then force an exact partition. All checks are linear
    // in the set sizes.
    {
      std::vector<Word> merged;
      merged.reserve(s0.size() + s1.size());
      std::merge(s0.words().begin(), s0.words().end(), s1.words().begin(), s1.words().end(),
                 std::back_inserter(merged));
      for (size_t i = 0; i + 1 < merged.size(); ++i)
        require(merged[i] != merged[i + 1] && !merged[i].is_prefix_of(merged[i + 1]),
                Code::partition, "children overlap near " + merged[i].str());
      SequenceSet u;
      u.adopt_sorted(std::move(merged));
      require(p.set.intersect(u).measure() == u.measure(), Code::partition,
              "children escape the parent set");
    }
    Rational lam0 = s0.measure(), lam1 = s1.measure(), lamp = p.set.measure();
    require(lam0 + lam1 == lamp, Code::partition, "children do not cover the parent");
    if (variant_ != Variant::modified)
      require(lam0 == lam1, Code::measure, "standard variant requires equal halves");
    if (variant_ == Variant::nonmonotonic)
      require(find_bet_position(s0, s1).has_value(), Code::position,
              "no position separates the children by bit value");
    int c0 = static_cast<int>(nodes_.size());
    int c1 = c0 + 1;
    nodes_.push_back(BettingNode{c0, std::move(s0), std::move(m0), parent, -1, -1});
    nodes_.push_back(BettingNode{c1, std::move(s1), std::move(m1), parent, -1, -1});
    nodes_[parent].child0 = c0;
    nodes_[parent].child1 = c1;
    return {c0, c1};
  }

  // Walks from the root following the child whose set covers the sequence,
  // recording capital at every visited node. Stops at an undecided leaf or
  // after max_steps decisions. The provided bits must suffice to resolve
  // membership at each decision taken.
  std::vector<Rational> simulate(const Word& bits, size_t max_steps,
                                 std::vector<int>* visited = nullptr) const {
    int cur = root();
    std::vector<Rational> traj{capital(cur)};
    if (visited) visited->push_back(cur);
    size_t steps = 0;
    while (nodes_[cur].decided() && steps < max_steps) {
      int next = resolve_child(cur, bits);
      traj.push_back(capital(next));
      if (visited) visited->push_back(next);
      cur = next;
      ++steps;
    }
    return traj;
  }

  struct Bet {
    size_t position;
    int favored_bit;
    Rational wager;
  };

  // For a non-monotonic decision: the distinguishing position (smallest if
  // several qualify), the favored bit and the wager |m0-m1|/measure(parent).
  Bet extract_bet(int parent) const {
    const auto& p = node(parent);
    require(variant_ == Variant::nonmonotonic, Code::variant,
            "bet extraction requires the non-monotonic variant");
    require(p.decided(), Code::variant, "node has no decision");
    const auto& c0 = nodes_[p.child0];
    const auto& c1 = nodes_[p.child1];
    auto pos = find_bet_position(c0.set, c1.set);
    require(pos.has_value(), Code::position, "decision is not in non-monotonic form");
    Rational diff = c0.mass >= c1.mass ? c0.mass - c1.mass : c1.mass - c0.mass;
    return Bet{*pos, c0.mass >= c1.mass ? 0 : 1, diff / p.set.measure()};
  }

  // Frees a decided node's materialized set; it stays reconstructible as the
  // union of its children. Keeps peak memory proportional to the leaf
  // frontier when growing wide subtrees.
  void release_set(int id) {
    auto& n = nodes_[id];
    require(n.decided(), Code::usage, "only decided nodes can release their set");
    n.set = SequenceSet();
    n.set_released = true;
  }

  std::vector<Word> words_of(int id) const {
    const auto& n = node(id);
    if (!n.set_released) return n.set.words();
    auto a = words_of(n.child0);
    auto b = words_of(n.child1);
    std::vector<Word> m;
    m.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m));
    return m;
  }

  std::set<int> truncated;            // leaves cut off by a finite table depth
  std::vector<std::string> notes;     // free-form lines preserved in files

 private:
  static std::optional<size_t> find_bet_position(const SequenceSet& s0,
                                                 const SequenceSet& s1) {
    size_t min_len = std::string::npos;
    for (const auto& w : s0.words()) min_len = std::min(min_len, w.length());
    for (const auto& w : s1.words()) min_len = std::min(min_len, w.length());
    for (size_t n = 0; n < min_len; ++n) {
      bool ok = true;
      for (const auto& w : s0.words())
        if (w.bit(n) != 0) { ok = false; break; }
      if (ok)
        for (const auto& w : s1.words())
          if (w.bit(n) != 1) { ok = false; break; }
      if (ok) return n;
    }
    return std::nullopt;
  }

  int resolve_child(int parent, const Word& bits) const {
    const auto& p = nodes_[parent];
    const auto& c0 = nodes_[p.child0];
    const auto& c1 = nodes_[p.child1];
    auto decided_in = [&](const SequenceSet& s) {
      for (const auto& m : s.words())
        if (m.is_prefix_of(bits)) return true;
      return false;
    };
    bool in0 = decided_in(c0.set);
    bool in1 = decided_in(c1.set);
    if (in0 || in1) return in0 ? p.child0 : p.child1;
    size_t need = std::max(c0.set.max_length(), c1.set.max_length());
    require(bits.length() < need, Code::partition,
            "neither child covers the sequence (corrupt tree)");
    fail(Code::ambiguous, "sequence prefix too short to decide at node " +
                              std::to_string(parent) + "; need up to " +
                              std::to_string(need) + " bits");
  }

  Variant variant_;
  std::vector<BettingNode> nodes_;
};

// True iff the trajectory's maximum reaches the threshold (finite-horizon
// success proxy; max, not final value).
inline bool succeeds(const std::vector<Rational>& trajectory, const Rational& threshold) {
  for (const auto& c : trajectory)
    if (c >= threshold) return true;
  return false;
}

}  // namespace wagerlab
