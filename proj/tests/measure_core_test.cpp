#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "wagerlab/sequence_set.hpp"

using namespace wagerlab;

namespace {

// Brute-force bit-vector oracle: mark every length-`depth` word covered by
// the set and count. Independent of the rational measure path.
Rational measure_oracle(const SequenceSet& s, size_t depth) {
  REQUIRE(s.max_length() <= depth);
  uint64_t covered = 0;
  std::vector<bool> mark(1ULL << depth, false);
  for (const auto& w : s.words()) {
    uint64_t base = index_from_word(w) << (depth - w.length());
    uint64_t count = 1ULL << (depth - w.length());
    for (uint64_t i = 0; i < count; ++i) mark[base + i] = true;
  }
  for (bool b : mark) covered += b;
  return Rational(covered, pow2(static_cast<unsigned>(depth)));
}

}  // namespace

TEST_CASE("measure on the spec examples") {
  CHECK(SequenceSet::whole_space().measure() == Rational(1));
  CHECK(SequenceSet().measure() == Rational(0));
  // {0,10}: 1/2 + 1/4 by direct summation
  CHECK(SequenceSet::of({"0", "10"}).measure() == Rational(3, 4));
}

TEST_CASE("non-antichain input is rejected") {
  CHECK_THROWS_AS(SequenceSet::of({"0", "01"}), Error);
  CHECK_THROWS_AS(SequenceSet::of({"-", "1"}), Error);
  CHECK_NOTHROW(SequenceSet::of({"0", "10", "11"}));
}

TEST_CASE("refine expands cylinders to a common length") {
  CHECK(SequenceSet::of({"0"}).refined(2) == SequenceSet::of({"00", "01"}));
  CHECK(SequenceSet::whole_space().refined(1) == SequenceSet::of({"0", "1"}));
  CHECK(SequenceSet::of({"0", "10"}).refined(2) == SequenceSet::of({"00", "01", "10"}));
  CHECK_THROWS_AS(SequenceSet::of({"00", "1"}).refined(1), Error);
}

TEST_CASE("intersect keeps the longer word of each related pair") {
  CHECK(SequenceSet::of({"0"}).intersect(SequenceSet::of({"00"})) == SequenceSet::of({"00"}));
  CHECK(SequenceSet::of({"0"}).intersect(SequenceSet::of({"1"})).empty());
  CHECK(SequenceSet::of({"0", "10"}).intersect(SequenceSet::of({"01", "1"})) ==
        SequenceSet::of({"01", "10"}));
}

TEST_CASE("covers distinguishes meets from containment") {
  auto s = SequenceSet::of({"0", "10"});
  CHECK(s.covers_meets(Word("011")));
  CHECK(s.covers_contains(Word("011")));
  CHECK_FALSE(s.covers_meets(Word("11")));
  CHECK_FALSE(s.covers_contains(Word("11")));
  // 10 extends 1 but 11 is outside: the cylinder of 1 meets but is not inside
  CHECK(s.covers_meets(Word("1")));
  CHECK_FALSE(s.covers_contains(Word("1")));
  // containment via several members
  CHECK(SequenceSet::of({"00", "01"}).covers_contains(Word("0")));
}

TEST_CASE("measure is preserved by refine (property)") {
  testgen::Rng rng(20250801);
  for (int i = 0; i < 200; ++i) {
    auto s = testgen::random_antichain(rng, 10);
    if (s.empty()) continue;
    size_t n = s.max_length() + rng() % 3;
    auto r = s.refined(n);
    CHECK(r.measure() == s.measure());
    if (!r.empty())
      for (const auto& w : r.words()) CHECK(w.length() == n);
  }
}

TEST_CASE("inclusion-exclusion against the bit-vector oracle (property)") {
  testgen::Rng rng(20250802);
  for (int i = 0; i < 100; ++i) {
    auto s = testgen::random_antichain(rng, 6);
    auto t = testgen::random_antichain(rng, 6);
    if (s.empty() || t.empty()) continue;
    auto both = s.intersect(t);
    // union as cylinders measured by the oracle at depth 12
    std::vector<Word> merged = s.words();
    merged.insert(merged.end(), t.words().begin(), t.words().end());
    // The merged list need not be an antichain; measure the union with the
    // oracle directly.
    std::vector<bool> mark(1ULL << 12, false);
    for (const auto& w : merged) {
      uint64_t base = index_from_word(w) << (12 - w.length());
      for (uint64_t j = 0; j < (1ULL << (12 - w.length())); ++j) mark[base + j] = true;
    }
    uint64_t covered = 0;
    for (bool b : mark) covered += b;
    Rational union_measure(covered, pow2(12));
    CHECK(s.measure() + t.measure() == union_measure + both.measure());
    CHECK(both.measure() == measure_oracle(both, 12));
  }
}

TEST_CASE("rational text form round-trips in lowest terms") {
  CHECK(format_rational(Rational(6, 8)) == "3/4");
  CHECK(format_rational(Rational(5)) == "5/1");
  CHECK(parse_rational("3/4") == Rational(3, 4));
  CHECK(parse_rational("7") == Rational(7));
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational("x/2"), Error);
}

TEST_CASE("word and set text forms") {
  CHECK(Word().str() == "-");
  CHECK(Word::parse("-") == Word());
  CHECK(Word::parse("0101").bits() == "0101");
  CHECK(SequenceSet::of({"10", "0"}).str() == "0,10");
  CHECK(SequenceSet::parse("0,10") == SequenceSet::of({"0", "10"}));
  CHECK(SequenceSet::parse("-") == SequenceSet::whole_space());
  CHECK(SequenceSet::parse("").empty());
  CHECK_THROWS_AS(Word::parse("012"), Error);
}
