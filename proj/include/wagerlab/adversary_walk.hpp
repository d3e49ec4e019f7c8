#pragma once

#include <limits>
#include <vector>

#include "wagerlab/betting_tree.hpp"

namespace wagerlab {

// Deterministic descent against an opponent tree: at every decision move to
// the child with less mass (ties go to the child holding the lexicographically
// least word). The emitted prefix is the longest common prefix of the current
// node's cylinder union, which only grows along the descent. Waiting for a
// bet is modeled as a query budget; a leaf with no decision is a permanent
// stall.
struct WalkMilestone {
  int t = 0;         // measure milestone index: fired when measure < 2^-t
  int node = 0;      // node where it fired
  Word prefix;       // emitted prefix at that moment
};

struct AdversaryWalk {
  std::vector<int> visited;
  std::vector<Rational> capitals;
  std::vector<WalkMilestone> milestones;
  Word stall_prefix;
  int terminal_node = 0;
  long queries = 0;
  bool budget_stall = false;  // stopped by the wait budget, not by a leaf
};

// Lexicographically least continuation of `from` inside the set, padded with
// zeros, cut to `len` bits. `from` must be the common prefix of the set.
inline Word lex_least_fill(const SequenceSet& set, const Word& from, size_t len) {
  Word m = set.least_member_related(from);
  std::string bits = m.bits();
  if (bits.size() < len) bits.append(len - bits.size(), '0');
  bits.resize(len);
  return Word(std::move(bits));
}

inline AdversaryWalk adversary_walk(const BettingTree& tree, long wait_budget,
                                    size_t stop_prefix_len = std::numeric_limits<size_t>::max()) {
  require(tree.variant() != Variant::nonmonotonic, Code::variant,
          "adversary plays standard or modified opponents");
  AdversaryWalk walk;
  int cur = tree.root();
  Word prefix = tree.node(cur).set.common_prefix();
  int next_t = 1;
  auto arrive = [&](int id) {
    walk.visited.push_back(id);
    walk.capitals.push_back(tree.capital(id));
    Rational lam = tree.node(id).set.measure();
    while (lam < pow2_neg(static_cast<unsigned>(next_t))) {
      walk.milestones.push_back({next_t, id, prefix});
      ++next_t;
    }
  };
  arrive(cur);
  while (prefix.length() < stop_prefix_len) {
    // One query per node: a static tree answers "is there a bet here yet"
    // the same way forever, so exceeding the per-node wait budget and a
    // decision-less leaf are the same permanent stall.
    if (wait_budget <= 0) {
      walk.budget_stall = true;
      break;
    }
    ++walk.queries;
    const auto& n = tree.node(cur);
    if (!n.decided()) break;
    const auto& c0 = tree.node(n.child0);
    const auto& c1 = tree.node(n.child1);
    int pick;
    if (c0.mass < c1.mass)
      pick = n.child0;
    else if (c1.mass < c0.mass)
      pick = n.child1;
    else
      pick = c0.set.words().front() < c1.set.words().front() ? n.child0 : n.child1;
    cur = pick;
    Word next_prefix = tree.node(cur).set.common_prefix();
    require(prefix.is_prefix_of(next_prefix), Code::measure,
            "descent prefix is not monotone (corrupt tree)");
    prefix = next_prefix;
    arrive(cur);
  }
  walk.stall_prefix = prefix;
  walk.terminal_node = cur;
  return walk;
}

}  // namespace wagerlab
