#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wagerlab/rational.hpp"
#include "wagerlab/word.hpp"

namespace wagerlab {

// A finite antichain of words denoting a union of cylinders. Words are kept
// sorted lexicographically (the serialized order). Construction rejects
// non-antichain input; equal words are collapsed to one copy.
class SequenceSet {
 public:
  SequenceSet() = default;

  explicit SequenceSet(std::vector<Word> words) : words_(std::move(words)) {
    std::sort(words_.begin(), words_.end());
    words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
    // In lex order a prefix sorts immediately-ish before its extensions, but
    // not adjacently in general ("0" < "00" < "01"), so scan pairwise per
    // candidate: any prefix of words_[i] that is itself a member violates the
    // antichain. Sorted order makes the adjacent check sufficient: if u is a
    // strict prefix of w, every word between u and w in lex order also
    // extends u; in particular words_[i-1] does.
    for (size_t i = 1; i < words_.size(); ++i)
      require(!words_[i - 1].is_prefix_of(words_[i]), Code::antichain,
              "not an antichain: " + words_[i - 1].str() + " prefixes " + words_[i].str());
  }

  static SequenceSet whole_space() { return SequenceSet({Word()}); }
  static SequenceSet of(std::initializer_list<const char*> ws) {
    std::vector<Word> v;
    for (auto* s : ws) v.push_back(Word::parse(s));
    return SequenceSet(std::move(v));
  }

  const std::vector<Word>& words() const { return words_; }
  bool empty() const { return words_.empty(); }
  size_t size() const { return words_.size(); }

  size_t max_length() const {
    size_t m = 0;
    for (const auto& w : words_) m = std::max(m, w.length());
    return m;
  }

  // Lebesgue measure of the cylinder union: sum of 2^-l(w).
  Rational measure() const {
    // Aggregate counts per length first; keeps rational arithmetic short.
    std::map<size_t, unsigned long long> counts;
    for (const auto& w : words_) counts[w.length()]++;
    Rational total = 0;
    for (auto& [len, count] : counts) total += Rational(count, pow2(static_cast<unsigned>(len)));
    return total;
  }

  // All length-n extensions of the members; measure is unchanged and the
  // result is an equal-length antichain. n must dominate every member.
  SequenceSet refined(size_t n) const {
    require(n >= max_length(), Code::depth,
            "refine: target length below a member length");
    std::vector<Word> out;
    for (const auto& w : words_) {
      size_t extra = n - w.length();
      if (extra == 0) {
        out.push_back(w);
        continue;
      }
      require(extra < 63, Code::depth, "refine: extension too wide");
      unsigned long long count = 1ULL << extra;
      for (unsigned long long i = 0; i < count; ++i) {
        std::string tail(extra, '0');
        for (size_t b = 0; b < extra; ++b)
          if (i & (1ULL << (extra - 1 - b))) tail[b] = '1';
        out.push_back(w.concat(Word(tail)));
      }
    }
    return SequenceSet(std::move(out));
  }

  // Antichain denoting the intersection of the two cylinder unions: for each
  // related pair keep the longer word; equal words keep one copy. Two-pointer
  // merge over the sorted antichains, O(|this| + |other| + |result|).
  SequenceSet intersect(const SequenceSet& other) const {
    std::vector<Word> out;
    size_t i = 0, j = 0;
    while (i < words_.size() && j < other.words_.size()) {
      const Word& a = words_[i];
      const Word& b = other.words_[j];
      if (a.is_prefix_of(b)) {
        out.push_back(b);
        ++j;  // further words of `other` may still extend a
      } else if (b.is_prefix_of(a)) {
        out.push_back(a);
        ++i;
      } else if (a < b) {
        ++i;
      } else {
        ++j;
      }
    }
    SequenceSet r;
    r.words_ = std::move(out);  // sorted and an antichain by construction
    return r;
  }

  // Meets: the cylinder of w intersects the union. Contains: the cylinder of
  // w lies entirely inside the union.
  bool covers_meets(const Word& w) const {
    for (const auto& m : words_)
      if (m.related(w)) return true;
    return false;
  }

  bool covers_contains(const Word& w) const {
    Rational inside = 0;
    for (const auto& m : words_) {
      if (m.is_prefix_of(w)) return true;
      if (w.is_prefix_of(m)) inside += pow2_neg(static_cast<unsigned>(m.length()));
    }
    return inside == pow2_neg(static_cast<unsigned>(w.length()));
  }

  // Members that w is a prefix of, or that are prefixes of w, clipped to the
  // part inside w's cylinder (used for carving prefix extensions out).
  SequenceSet clip_inside(const Word& w) const {
    std::vector<Word> out;
    for (const auto& m : words_) {
      if (w.is_prefix_of(m))
        out.push_back(m);
      else if (m.is_strict_prefix_of(w))
        out.push_back(w);
    }
    return SequenceSet(std::move(out));
  }

  bool contains_word(const Word& w) const {
    return std::binary_search(words_.begin(), words_.end(), w);
  }

  // Longest common prefix of all sequences in the union.
  Word common_prefix() const {
    require(!words_.empty(), Code::measure, "common prefix of empty set");
    std::string lcp = words_.front().bits();
    for (const auto& w : words_) {
      size_t i = 0;
      while (i < lcp.size() && i < w.length() && lcp[i] == w.bits()[i]) ++i;
      lcp.resize(i);
    }
    return Word(lcp);
  }

  // Lexicographically least member extending `from` (or covered by it).
  Word least_member_related(const Word& from) const {
    for (const auto& m : words_)
      if (m.related(from)) return m;
    fail(Code::measure, "no member related to " + from.str());
  }

  SequenceSet set_minus_words(const SequenceSet& remove) const {
    std::vector<Word> out;
    for (const auto& w : words_)
      if (!remove.contains_word(w)) out.push_back(w);
    return SequenceSet(std::move(out));
  }

  SequenceSet set_union(const SequenceSet& other) const {
    std::vector<Word> out = words_;
    out.insert(out.end(), other.words_.begin(), other.words_.end());
    return SequenceSet(std::move(out));
  }

  // Comma-separated members in lexicographic order; the empty set serializes
  // as the empty string.
  std::string str() const {
    std::ostringstream os;
    for (size_t i = 0; i < words_.size(); ++i) {
      if (i) os << ',';
      os << words_[i].str();
    }
    return os.str();
  }

  static SequenceSet parse(std::string_view text) {
    std::vector<Word> ws;
    if (!text.empty()) {
      size_t start = 0;
      while (start <= text.size()) {
        size_t comma = text.find(',', start);
        if (comma == std::string_view::npos) {
          ws.push_back(Word::parse(text.substr(start)));
          break;
        }
        ws.push_back(Word::parse(text.substr(start, comma - start)));
        start = comma + 1;
      }
    }
    return SequenceSet(std::move(ws));
  }

  bool operator==(const SequenceSet&) const = default;

  // Takes ownership of an already-sorted, already-antichain word list.
  // Callers are responsible for both properties (construction fast paths).
  void adopt_sorted(std::vector<Word> words) { words_ = std::move(words); }

 private:
  std::vector<Word> words_;
};

}  // namespace wagerlab
