#pragma once

#include <compare>
#include <string>
#include <string_view>

#include "wagerlab/error.hpp"

namespace wagerlab {

// A finite binary word. The empty word is valid and serializes as "-"
// (empty strings are ambiguous in line-oriented formats).
class Word {
 public:
  Word() = default;
  explicit Word(std::string bits) : bits_(std::move(bits)) {
    for (char c : bits_)
      require(c == '0' || c == '1', Code::parse, "word must be over {0,1}: " + bits_);
  }

  static Word parse(std::string_view text) {
    if (text == "-") return Word();
    return Word(std::string(text));
  }

  const std::string& bits() const { return bits_; }
  size_t length() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  int bit(size_t i) const { return bits_[i] == '1' ? 1 : 0; }

  bool is_prefix_of(const Word& other) const {
    return bits_.size() <= other.bits_.size() &&
           other.bits_.compare(0, bits_.size(), bits_) == 0;
  }
  bool is_strict_prefix_of(const Word& other) const {
    return bits_.size() < other.bits_.size() && is_prefix_of(other);
  }
  // Two words are related iff one extends the other (their cylinders meet).
  bool related(const Word& other) const {
    return is_prefix_of(other) || other.is_prefix_of(*this);
  }

  Word prefix(size_t len) const { return Word(bits_.substr(0, std::min(len, bits_.size()))); }
  Word append(char bit) const { return Word(bits_ + bit); }
  Word concat(const Word& tail) const { return Word(bits_ + tail.bits_); }

  std::string str() const { return bits_.empty() ? "-" : bits_; }

  auto operator<=>(const Word&) const = default;

 private:
  std::string bits_;
};

}  // namespace wagerlab
