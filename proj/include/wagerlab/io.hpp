#pragma once

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wagerlab/betting_tree.hpp"
#include "wagerlab/martingale.hpp"

namespace wagerlab {

// Every file format is line-oriented UTF-8 with LF endings and round-trips
// bit-identically (write -> read -> write is a fixpoint).

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

// "key=value" -> value; empty value is allowed ("S=").
inline std::string field(const std::string& token, const std::string& key, size_t line_no) {
  if (token.size() < key.size() + 1 || token.compare(0, key.size(), key) != 0 ||
      token[key.size()] != '=')
    fail(Code::parse, "line " + std::to_string(line_no) + ": expected " + key + "=..., got " + token);
  return token.substr(key.size() + 1);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Code::io, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Code::io, "cannot write " + path);
  out << data;
  require(out.good(), Code::io, "short write to " + path);
}

inline std::vector<std::string> lines_of(const std::string& data) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : data) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Betting tree files.
//   tree variant=<standard|modified|nonmonotonic>
//   note <free text>
//   node <id> parent=<id|-> S=<set> m=<rational>
//   decision <parent-id> <child0-id> <child1-id>
//   truncated <id>

inline std::string tree_to_text(const BettingTree& tree) {
  std::ostringstream os;
  os << "tree variant=" << variant_name(tree.variant()) << "\n";
  for (const auto& n : tree.notes) os << "note " << n << "\n";
  for (size_t i = 0; i < tree.node_count(); ++i) {
    const auto& n = tree.node(static_cast<int>(i));
    os << "node " << n.id << " parent=" << (n.parent < 0 ? std::string("-") : std::to_string(n.parent))
       << " S=";
    if (n.set_released) {
      auto words = tree.words_of(n.id);
      for (size_t w = 0; w < words.size(); ++w) {
        if (w) os << ',';
        os << words[w].str();
      }
    } else {
      os << n.set.str();
    }
    os << " m=" << format_rational(n.mass) << "\n";
  }
  for (size_t i = 0; i < tree.node_count(); ++i) {
    const auto& n = tree.node(static_cast<int>(i));
    if (n.decided()) os << "decision " << n.id << " " << n.child0 << " " << n.child1 << "\n";
  }
  for (int id : tree.truncated) os << "truncated " << id << "\n";
  return os.str();
}

inline BettingTree tree_from_text(const std::string& data, bool release_internal = false) {
  struct Rec {
    int parent = -1;
    SequenceSet set;
    Rational mass;
    bool seen = false;
  };
  std::vector<Rec> recs;
  std::vector<std::array<int, 3>> decisions;
  std::vector<int> truncated;
  std::vector<std::string> notes;
  Variant variant = Variant::standard;
  bool header = false;
  size_t line_no = 0;
  for (const auto& line : lines_of(data)) {
    ++line_no;
    if (line.empty()) continue;
    auto toks = split_ws(line);
    if (toks[0] == "tree") {
      require(toks.size() == 2, Code::parse, "line 1: bad tree header");
      variant = parse_variant(field(toks[1], "variant", line_no));
      header = true;
    } else if (toks[0] == "note") {
      notes.push_back(line.substr(5));
    } else if (toks[0] == "node") {
      require(toks.size() == 5, Code::parse, "line " + std::to_string(line_no) + ": bad node line");
      int id = std::stoi(toks[1]);
      require(id >= 0, Code::parse, "negative node id");
      if (recs.size() <= static_cast<size_t>(id)) recs.resize(id + 1);
      Rec& r = recs[id];
      require(!r.seen, Code::parse, "line " + std::to_string(line_no) + ": duplicate node " + toks[1]);
      r.seen = true;
      std::string p = field(toks[2], "parent", line_no);
      r.parent = (p == "-") ? -1 : std::stoi(p);
      r.set = SequenceSet::parse(field(toks[3], "S", line_no));
      r.mass = parse_rational(field(toks[4], "m", line_no));
    } else if (toks[0] == "decision") {
      require(toks.size() == 4, Code::parse, "line " + std::to_string(line_no) + ": bad decision line");
      decisions.push_back({std::stoi(toks[1]), std::stoi(toks[2]), std::stoi(toks[3])});
    } else if (toks[0] == "truncated") {
      require(toks.size() == 2, Code::parse, "line " + std::to_string(line_no) + ": bad truncated line");
      truncated.push_back(std::stoi(toks[1]));
    } else {
      fail(Code::parse, "line " + std::to_string(line_no) + ": unknown record " + toks[0]);
    }
  }
  require(header, Code::parse, "missing tree header");
  require(!recs.empty() && recs[0].seen, Code::parse, "missing root node 0");
  require(recs[0].parent == -1, Code::parse, "root must have parent=-");
  for (size_t i = 0; i < recs.size(); ++i)
    require(recs[i].seen, Code::parse, "node ids not dense: missing " + std::to_string(i));

  // Rebuild through apply_decision so every recorded decision is re-validated
  // and ids come out in the original creation order.
  std::sort(decisions.begin(), decisions.end(),
            [](const auto& a, const auto& b) { return a[1] < b[1]; });
  BettingTree tree(variant, recs[0].set, recs[0].mass);
  tree.notes = notes;
  for (const auto& d : decisions) {
    int p = d[0], c0 = d[1], c1 = d[2];
    require(c0 >= 0 && c1 == c0 + 1 && static_cast<size_t>(c1) < recs.size(), Code::parse,
            "decision children must be consecutive fresh ids");
    require(recs[c0].parent == p && recs[c1].parent == p, Code::parse,
            "child parent fields disagree with decision");
    auto [r0, r1] = tree.apply_decision(p, std::move(recs[c0].set), recs[c0].mass,
                                        std::move(recs[c1].set), recs[c1].mass);
    require(r0 == c0 && r1 == c1, Code::parse, "decision ids out of creation order");
    if (release_internal) tree.release_set(p);
  }
  require(tree.node_count() == recs.size(), Code::parse,
          "orphan nodes: tree is not a single decision tree");
  for (int id : truncated) {
    require(id >= 0 && static_cast<size_t>(id) < recs.size(), Code::parse, "bad truncated id");
    require(!tree.node(id).decided(), Code::parse, "truncated marker on a decided node");
    tree.truncated.insert(id);
  }
  return tree;
}

inline BettingTree load_tree(const std::string& path, bool release_internal = false) {
  return tree_from_text(read_file(path), release_internal);
}
inline void save_tree(const std::string& path, const BettingTree& t) {
  write_file(path, tree_to_text(t));
}

// ---------------------------------------------------------------------------
// Process table files.
//   process depth=<N>
//   note <free text>
//   d <word> <rational>      (length-then-lexicographic order, total table)

struct ProcessFile {
  MartingaleProcess process{0};
  std::vector<std::string> notes;
};

inline std::string process_to_text(const MartingaleProcess& d,
                                   const std::vector<std::string>& notes = {}) {
  std::ostringstream os;
  os << "process depth=" << d.depth() << "\n";
  for (const auto& n : notes) os << "note " << n << "\n";
  for (size_t l = 0; l <= d.depth(); ++l)
    for (uint64_t i = 0; i < (1ULL << l); ++i)
      os << "d " << word_from_index(l, i).str() << " " << format_rational(d.value_at(l, i))
         << "\n";
  return os.str();
}

inline ProcessFile process_from_text(const std::string& data) {
  size_t line_no = 0;
  bool header = false;
  size_t depth = 0;
  std::vector<std::string> notes;
  std::map<std::pair<size_t, uint64_t>, Rational> vals;
  for (const auto& line : lines_of(data)) {
    ++line_no;
    if (line.empty()) continue;
    auto toks = split_ws(line);
    if (toks[0] == "process") {
      require(toks.size() == 2, Code::parse, "bad process header");
      depth = std::stoul(field(toks[1], "depth", line_no));
      header = true;
    } else if (toks[0] == "note") {
      notes.push_back(line.substr(5));
    } else if (toks[0] == "d") {
      require(header, Code::parse, "d line before header");
      require(toks.size() == 3, Code::parse, "line " + std::to_string(line_no) + ": bad d line");
      Word w = Word::parse(toks[1]);
      require(w.length() <= depth, Code::parse, "word beyond declared depth: " + toks[1]);
      auto key = std::make_pair(w.length(), index_from_word(w));
      require(!vals.count(key), Code::parse, "duplicate d line for " + toks[1]);
      vals[key] = parse_rational(toks[2]);
    } else {
      fail(Code::parse, "line " + std::to_string(line_no) + ": unknown record " + toks[0]);
    }
  }
  require(header, Code::parse, "missing process header");
  ProcessFile out;
  out.process = MartingaleProcess(depth);
  out.notes = notes;
  size_t expected = 0;
  for (size_t l = 0; l <= depth; ++l) expected += (1ULL << l);
  require(vals.size() == expected, Code::parse, "process table is not total");
  for (auto& [key, v] : vals) out.process.set_value_at(key.first, key.second, v);
  return out;
}

inline ProcessFile load_process(const std::string& path) {
  return process_from_text(read_file(path));
}
inline void save_process(const std::string& path, const MartingaleProcess& d,
                         const std::vector<std::string>& notes = {}) {
  write_file(path, process_to_text(d, notes));
}

// ---------------------------------------------------------------------------
// Emission files: lines `emit seq=<int> p=<word> proglen=<int>`.

struct Emission {
  Word prefix;
  size_t program_length = 0;
  long savings = 0;
  size_t sequence_number = 0;
};

inline std::string emissions_to_text(const std::vector<Emission>& es) {
  std::ostringstream os;
  for (const auto& e : es)
    os << "emit seq=" << e.sequence_number << " p=" << e.prefix.str()
       << " proglen=" << e.program_length << "\n";
  return os.str();
}

inline std::vector<Emission> emissions_from_text(const std::string& data) {
  std::vector<Emission> out;
  size_t line_no = 0;
  for (const auto& line : lines_of(data)) {
    ++line_no;
    if (line.empty()) continue;
    auto toks = split_ws(line);
    require(toks[0] == "emit" && toks.size() == 4, Code::parse,
            "line " + std::to_string(line_no) + ": bad emit line");
    Emission e;
    e.sequence_number = std::stoul(field(toks[1], "seq", line_no));
    e.prefix = Word::parse(field(toks[2], "p", line_no));
    e.program_length = std::stoul(field(toks[3], "proglen", line_no));
    e.savings = static_cast<long>(e.prefix.length()) - static_cast<long>(e.program_length);
    require(e.savings >= 1, Code::parse,
            "line " + std::to_string(line_no) + ": emission must save at least one bit");
    if (!out.empty())
      require(e.sequence_number > out.back().sequence_number, Code::parse,
              "emissions must be strictly ordered by seq");
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Certificate files: lines `cert t=<int> prefix=<word> program=<bits> k=<int>`.

struct Certificate {
  int milestone = 0;       // 0 = terminal stall, >=1 = measure milestone index
  Word prefix;             // target the program must reproduce
  Word program;            // toy machine program bits
  long claimed_k = 0;      // l(prefix) - l(program)
};

inline std::string certs_to_text(const std::vector<Certificate>& cs) {
  std::ostringstream os;
  for (const auto& c : cs)
    os << "cert t=" << c.milestone << " prefix=" << c.prefix.str()
       << " program=" << c.program.str() << " k=" << c.claimed_k << "\n";
  return os.str();
}

inline std::vector<Certificate> certs_from_text(const std::string& data) {
  std::vector<Certificate> out;
  size_t line_no = 0;
  for (const auto& line : lines_of(data)) {
    ++line_no;
    if (line.empty()) continue;
    auto toks = split_ws(line);
    require(toks[0] == "cert" && toks.size() == 5, Code::parse,
            "line " + std::to_string(line_no) + ": bad cert line");
    Certificate c;
    c.milestone = std::stoi(field(toks[1], "t", line_no));
    c.prefix = Word::parse(field(toks[2], "prefix", line_no));
    c.program = Word::parse(field(toks[3], "program", line_no));
    c.claimed_k = std::stol(field(toks[4], "k", line_no));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace wagerlab
