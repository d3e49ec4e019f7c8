#pragma once

#include <random>

#include "wagerlab/betting_tree.hpp"
#include "wagerlab/martingale.hpp"

// Seeded generators shared by the unit and acceptance suites. All randomness
// flows from explicit mt19937_64 seeds; two runs with the same seed produce
// identical cases.

namespace wagerlab::testgen {

using Rng = std::mt19937_64;

inline Word random_word(Rng& rng, size_t len) {
  std::string bits(len, '0');
  for (auto& c : bits)
    if (rng() & 1) c = '1';
  return Word(std::move(bits));
}

// Random antichain: carve a random subtree frontier of the binary tree,
// keeping each frontier node with probability keep_pct.
inline SequenceSet random_antichain(Rng& rng, size_t max_depth, int keep_pct = 70) {
  std::vector<Word> out;
  std::vector<Word> frontier{Word()};
  while (!frontier.empty()) {
    Word w = frontier.back();
    frontier.pop_back();
    bool must_split = w.empty();  // avoid the trivial whole-space set most of the time
    if (!must_split && (w.length() >= max_depth || rng() % 100 < 60)) {
      if (rng() % 100 < keep_pct) out.push_back(w);
      continue;
    }
    frontier.push_back(w.append('0'));
    frontier.push_back(w.append('1'));
  }
  return SequenceSet(std::move(out));
}

inline Rational random_small_rational(Rng& rng, int max_num = 8, int max_den = 8) {
  int num = static_cast<int>(rng() % (max_num + 1));
  int den = 1 + static_cast<int>(rng() % max_den);
  return Rational(num, den);
}

// Random fair martingale process built top-down: each class's child values
// are a random nonnegative split of twice the class total, so fairness holds
// by construction.
inline MartingaleProcess random_fair_process(Rng& rng, size_t depth) {
  MartingaleProcess d(depth);
  d.set_value(Word(), Rational(1 + static_cast<int>(rng() % 3)));
  for (size_t l = 0; l < depth; ++l) {
    auto ids = d.class_ids(l);
    std::map<int, std::vector<uint64_t>> classes;
    for (uint64_t i = 0; i < (1ULL << l); ++i) classes[ids[i]].push_back(i);
    for (auto& [cid, members] : classes) {
      Rational total = 0;
      for (uint64_t i : members) total += d.value_at(l, i) * 2;
      size_t slots = members.size() * 2;
      std::vector<uint64_t> weights(slots);
      uint64_t wsum = 0;
      for (auto& w : weights) {
        w = rng() % 5;
        wsum += w;
      }
      if (wsum == 0) {
        weights[0] = 1;
        wsum = 1;
      }
      size_t slot = 0;
      for (uint64_t i : members) {
        d.set_value_at(l + 1, i << 1, total * weights[slot] / wsum);
        d.set_value_at(l + 1, (i << 1) | 1, total * weights[slot + 1] / wsum);
        slot += 2;
      }
    }
  }
  return d;
}

// Random valid betting tree of the given variant, grown by a fixed number of
// leaf splits. Standard trees split a leaf's refinement into two equal-count
// halves; modified trees cut an arbitrary nonempty strict subset.
inline BettingTree random_tree(Rng& rng, Variant variant, size_t decisions, size_t max_depth,
                               Rational root_mass = Rational(1)) {
  BettingTree tree(variant, SequenceSet::whole_space(), root_mass);
  for (size_t step = 0; step < decisions; ++step) {
    auto leaves = tree.leaves();
    std::vector<int> eligible;
    for (int id : leaves)
      if (tree.node(id).set.max_length() < max_depth) eligible.push_back(id);
    if (eligible.empty()) break;
    int target = eligible[rng() % eligible.size()];
    const auto& node = tree.node(target);
    size_t to = node.set.max_length() + 1 + rng() % 2;
    if (to > max_depth) to = max_depth;
    auto ext = node.set.refined(to).words();
    if (ext.size() < 2) continue;
    std::shuffle(ext.begin(), ext.end(), rng);
    size_t cut;
    if (variant == Variant::modified) {
      cut = 1 + rng() % (ext.size() - 1);
    } else {
      if (ext.size() % 2 != 0) continue;
      cut = ext.size() / 2;
    }
    std::vector<Word> left(ext.begin(), ext.begin() + cut);
    std::vector<Word> right(ext.begin() + cut, ext.end());
    Rational m = node.mass;
    Rational m0 = 0;
    if (m > 0) {
      uint64_t a = rng() % 9, b = rng() % 9;
      if (a + b == 0) a = 1;
      m0 = m * a / (a + b);
    }
    tree.apply_decision(target, SequenceSet(std::move(left)), m0, SequenceSet(std::move(right)),
                        m - m0);
  }
  return tree;
}

// Non-monotonic trees bet on a fresh position at every node, splitting the
// node's refinement by the bit at that position.
inline BettingTree random_nonmonotonic_tree(Rng& rng, size_t decisions, size_t max_depth) {
  BettingTree tree(Variant::nonmonotonic, SequenceSet::whole_space(), Rational(1));
  for (size_t step = 0; step < decisions; ++step) {
    auto leaves = tree.leaves();
    std::vector<int> eligible;
    for (int id : leaves)
      if (tree.node(id).set.max_length() < max_depth) eligible.push_back(id);
    if (eligible.empty()) break;
    int target = eligible[rng() % eligible.size()];
    const auto& node = tree.node(target);
    size_t width = node.set.max_length() + 1;
    auto ext = node.set.refined(width).words();
    // a position whose bit is not yet constant over the node's set
    std::vector<size_t> positions;
    for (size_t pos = 0; pos < width; ++pos) {
      bool saw0 = false, saw1 = false;
      for (const auto& w : ext) (w.bit(pos) ? saw1 : saw0) = true;
      if (saw0 && saw1) positions.push_back(pos);
    }
    if (positions.empty()) continue;
    size_t pos = positions[rng() % positions.size()];
    std::vector<Word> zeros, ones;
    for (const auto& w : ext) (w.bit(pos) ? ones : zeros).push_back(w);
    Rational m = node.mass;
    Rational m0 = 0;
    if (m > 0) {
      uint64_t a = rng() % 9, b = rng() % 9;
      if (a + b == 0) a = 1;
      m0 = m * a / (a + b);
    }
    tree.apply_decision(target, SequenceSet(std::move(zeros)), m0, SequenceSet(std::move(ones)),
                        m - m0);
  }
  return tree;
}

}  // namespace wagerlab::testgen
