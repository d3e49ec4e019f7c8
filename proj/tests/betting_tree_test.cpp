#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "wagerlab/betting_tree.hpp"

using namespace wagerlab;

namespace {

BettingTree all_in_on_zero() {
  BettingTree t(Variant::standard, SequenceSet::whole_space(), Rational(1));
  t.apply_decision(t.root(), SequenceSet::of({"0"}), Rational(1), SequenceSet::of({"1"}),
                   Rational(0));
  return t;
}

}  // namespace

TEST_CASE("apply_decision accepts the spec examples") {
  auto t = all_in_on_zero();
  CHECK(t.capital(1) == Rational(2));
  CHECK(t.capital(2) == Rational(0));

  BettingTree pairs(Variant::standard, SequenceSet::whole_space(), Rational(1));
  CHECK_NOTHROW(pairs.apply_decision(0, SequenceSet::of({"00", "11"}), Rational(1, 2),
                                     SequenceSet::of({"01", "10"}), Rational(1, 2)));
}

TEST_CASE("apply_decision rejects bad partitions, masses and variants") {
  BettingTree t(Variant::modified, SequenceSet::whole_space(), Rational(1));
  // {0} and {10} leave {11} uncovered: measures 1/2 + 1/4 != 1
  CHECK_THROWS_AS(t.apply_decision(0, SequenceSet::of({"0"}), Rational(1, 2),
                                   SequenceSet::of({"10"}), Rational(1, 2)),
                  Error);
  // mass violation
  CHECK_THROWS_AS(t.apply_decision(0, SequenceSet::of({"0"}), Rational(1, 2),
                                   SequenceSet::of({"1"}), Rational(1, 4)),
                  Error);
  // overlapping children
  CHECK_THROWS_AS(t.apply_decision(0, SequenceSet::of({"0"}), Rational(1, 2),
                                   SequenceSet::of({"00", "1"}), Rational(1, 2)),
                  Error);
  // standard requires equal halves
  BettingTree s(Variant::standard, SequenceSet::whole_space(), Rational(1));
  CHECK_THROWS_AS(s.apply_decision(0, SequenceSet::of({"00"}), Rational(1, 2),
                                   SequenceSet::of({"01", "1"}), Rational(1, 2)),
                  Error);
  // parent already decided
  auto t2 = all_in_on_zero();
  CHECK_THROWS_AS(t2.apply_decision(0, SequenceSet::of({"0"}), Rational(1),
                                    SequenceSet::of({"1"}), Rational(0)),
                  Error);
  // modified variant allows unequal halves
  BettingTree m(Variant::modified, SequenceSet::whole_space(), Rational(1));
  CHECK_NOTHROW(m.apply_decision(0, SequenceSet::of({"00"}), Rational(1, 2),
                                 SequenceSet::of({"01", "1"}), Rational(1, 2)));
}

TEST_CASE("capital on the spec examples") {
  BettingTree t(Variant::standard, SequenceSet::of({"00", "01", "10"}), Rational(3, 8));
  CHECK(t.capital(t.root()) == Rational(1, 2));
  BettingTree u(Variant::standard, SequenceSet::of({"0"}), Rational(1));
  CHECK(u.capital(u.root()) == Rational(2));
}

TEST_CASE("simulate walks the covering children") {
  auto t = all_in_on_zero();
  CHECK(t.simulate(Word("0111"), 100) == std::vector<Rational>{Rational(1), Rational(2)});
  CHECK(t.simulate(Word("1000"), 100) == std::vector<Rational>{Rational(1), Rational(0)});

  // two-level doubling on 0 then 0
  BettingTree two = all_in_on_zero();
  two.apply_decision(1, SequenceSet::of({"00"}), Rational(1), SequenceSet::of({"01"}),
                     Rational(0));
  CHECK(two.simulate(Word("00"), 100) ==
        std::vector<Rational>{Rational(1), Rational(2), Rational(4)});
  // max_steps truncates
  CHECK(two.simulate(Word("00"), 1) == std::vector<Rational>{Rational(1), Rational(2)});
  // identical inputs give identical trajectories
  CHECK(two.simulate(Word("0011"), 100) == two.simulate(Word("0011"), 100));
}

TEST_CASE("simulate asks for more bits when membership is unresolved") {
  BettingTree pairs(Variant::standard, SequenceSet::whole_space(), Rational(1));
  pairs.apply_decision(0, SequenceSet::of({"00", "11"}), Rational(1, 2),
                       SequenceSet::of({"01", "10"}), Rational(1, 2));
  CHECK_THROWS_MATCHES(pairs.simulate(Word("0"), 10), Error,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("AMBIGUOUS")));
  CHECK(pairs.simulate(Word("01"), 10).size() == 2);
}

TEST_CASE("succeeds uses the trajectory maximum") {
  CHECK(succeeds({Rational(1), Rational(2), Rational(4)}, Rational(4)));
  CHECK_FALSE(succeeds({Rational(1), Rational(1, 2)}, Rational(2)));
  CHECK(succeeds({Rational(1), Rational(2), Rational(1)}, Rational(2)));
}

TEST_CASE("extract_bet reads position, favored bit and wager") {
  BettingTree t(Variant::nonmonotonic, SequenceSet::of({"00", "01", "10", "11"}), Rational(1));
  t.apply_decision(0, SequenceSet::of({"00", "10"}), Rational(3, 4),
                   SequenceSet::of({"01", "11"}), Rational(1, 4));
  auto bet = t.extract_bet(0);
  CHECK(bet.position == 1);
  CHECK(bet.favored_bit == 0);
  CHECK(bet.wager == Rational(1, 2));

  BettingTree even(Variant::nonmonotonic, SequenceSet::whole_space(), Rational(1));
  even.apply_decision(0, SequenceSet::of({"0"}), Rational(1, 2), SequenceSet::of({"1"}),
                      Rational(1, 2));
  CHECK(even.extract_bet(0).wager == Rational(0));

  // all words share bit 0: the both-children condition is unsatisfiable
  BettingTree fixed(Variant::nonmonotonic, SequenceSet::of({"00", "01"}), Rational(1));
  CHECK_THROWS_AS(fixed.apply_decision(0, SequenceSet::of({"00", "11"}), Rational(1, 2),
                                       SequenceSet::of({"01", "10"}), Rational(1, 2)),
                  Error);
}

TEST_CASE("mass conservation and capital mean-preservation (property)") {
  testgen::Rng rng(777);
  for (int i = 0; i < 40; ++i) {
    auto tree = testgen::random_tree(rng, Variant::standard, 12, 8);
    Rational leaf_mass = 0;
    for (int id : tree.leaves()) leaf_mass += tree.node(id).mass;
    CHECK(leaf_mass == tree.node(tree.root()).mass);
    for (size_t n = 0; n < tree.node_count(); ++n) {
      const auto& node = tree.node(static_cast<int>(n));
      if (!node.decided()) continue;
      CHECK(tree.capital(node.id) ==
            (tree.capital(node.child0) + tree.capital(node.child1)) / 2);
    }
  }
}

TEST_CASE("non-monotonic positions are fresh along every path (property)") {
  testgen::Rng rng(778);
  for (int i = 0; i < 20; ++i) {
    auto tree = testgen::random_nonmonotonic_tree(rng, 10, 7);
    // walk every root-to-leaf path and collect bet positions
    std::vector<std::pair<int, std::vector<size_t>>> stack{{tree.root(), {}}};
    while (!stack.empty()) {
      auto [id, positions] = stack.back();
      stack.pop_back();
      const auto& node = tree.node(id);
      if (!node.decided()) continue;
      auto bet = tree.extract_bet(id);
      for (size_t p : positions) CHECK(p != bet.position);
      auto next = positions;
      next.push_back(bet.position);
      stack.push_back({node.child0, next});
      stack.push_back({node.child1, next});
    }
  }
}
