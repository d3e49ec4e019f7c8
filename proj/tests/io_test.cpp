#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "wagerlab/io.hpp"

using namespace wagerlab;

TEST_CASE("tree files are a write-read-write fixpoint") {
  testgen::Rng rng(33001);
  for (int i = 0; i < 10; ++i) {
    Variant v = (i % 3 == 0)   ? Variant::standard
                : (i % 3 == 1) ? Variant::modified
                               : Variant::nonmonotonic;
    BettingTree tree = (v == Variant::nonmonotonic)
                           ? testgen::random_nonmonotonic_tree(rng, 8, 7)
                           : testgen::random_tree(rng, v, 8, 7);
    tree.notes.push_back("generated for round-trip");
    if (!tree.leaves().empty()) tree.truncated.insert(tree.leaves().front());
    std::string text = tree_to_text(tree);
    BettingTree back = tree_from_text(text);
    CHECK(tree_to_text(back) == text);
    CHECK(back.variant() == tree.variant());
    CHECK(back.node_count() == tree.node_count());
  }
}

TEST_CASE("tree parsing re-validates decisions") {
  BettingTree t(Variant::standard, SequenceSet::whole_space(), Rational(1));
  t.apply_decision(0, SequenceSet::of({"0"}), Rational(1, 2), SequenceSet::of({"1"}),
                   Rational(1, 2));
  std::string good = tree_to_text(t);
  CHECK_NOTHROW(tree_from_text(good));

  // tamper with a child mass: conservation fails on reload
  std::string bad = good;
  auto pos = bad.find("m=1/2");
  REQUIRE(pos != std::string::npos);
  bad.replace(pos, 5, "m=1/3");
  CHECK_THROWS_AS(tree_from_text(bad), Error);

  // tamper with a set: the partition fails
  std::string bad2 = good;
  pos = bad2.find("S=0 ");
  REQUIRE(pos != std::string::npos);
  bad2.replace(pos, 4, "S=00 ");
  CHECK_THROWS_AS(tree_from_text(bad2), Error);

  CHECK_THROWS_AS(tree_from_text("node 0 parent=- S=- m=1/1\n"), Error);  // missing header
}

TEST_CASE("process files are a write-read-write fixpoint") {
  testgen::Rng rng(33002);
  for (int i = 0; i < 6; ++i) {
    auto d = testgen::random_fair_process(rng, 4);
    std::string text = process_to_text(d, {"intermediate-values=parent-inherited"});
    ProcessFile back = process_from_text(text);
    CHECK(process_to_text(back.process, back.notes) == text);
  }
  // incomplete tables are rejected
  CHECK_THROWS_AS(process_from_text("process depth=1\nd - 1/1\nd 0 1/1\n"), Error);
}

TEST_CASE("emission and certificate files round-trip") {
  std::string etext =
      "emit seq=0 p=000000000000000000 proglen=6\n"
      "emit seq=3 p=110101010101010101 proglen=8\n";
  auto es = emissions_from_text(etext);
  REQUIRE(es.size() == 2);
  CHECK(es[1].savings == 10);
  CHECK(emissions_to_text(es) == etext);
  // non-increasing seq rejected
  CHECK_THROWS_AS(
      emissions_from_text("emit seq=2 p=000000000000000000 proglen=6\n"
                          "emit seq=2 p=100000000000000000 proglen=6\n"),
      Error);
  // savings below one rejected
  CHECK_THROWS_AS(emissions_from_text("emit seq=0 p=01 proglen=2\n"), Error);

  std::string ctext = "cert t=0 prefix=000000 program=010111 k=0\n";
  auto cs = certs_from_text(ctext);
  REQUIRE(cs.size() == 1);
  CHECK(certs_to_text(cs) == ctext);
}
