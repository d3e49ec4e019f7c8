#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wagerlab/digest.hpp"
#include "wagerlab/io.hpp"

namespace wagerlab {

// Append-only line traces. A trace directory holds exactly one manifest plus
// the two tree files and the event log; the verifier streams all of them.
inline constexpr int kTraceFormatVersion = 1;

inline int trace_format_version() {
  if (const char* env = std::getenv("WAGERLAB_TRACE_V")) return std::atoi(env);
  return kTraceFormatVersion;
}

struct Manifest {
  int version = kTraceFormatVersion;
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::pair<std::string, std::string>> digests;

  std::string to_text() const {
    std::ostringstream os;
    os << "manifest version=" << version << "\n";
    os << "subcommand " << subcommand << "\n";
    for (const auto& [k, v] : params) os << "param " << k << "=" << v << "\n";
    for (const auto& [k, v] : digests) os << "digest " << k << "=" << v << "\n";
    return os.str();
  }

  static Manifest from_text(const std::string& data) {
    Manifest m;
    bool header = false;
    size_t line_no = 0;
    for (const auto& line : lines_of(data)) {
      ++line_no;
      if (line.empty()) continue;
      auto toks = split_ws(line);
      if (toks[0] == "manifest") {
        require(toks.size() == 2, Code::v_manifest, "bad manifest header");
        m.version = std::stoi(field(toks[1], "version", line_no));
        header = true;
      } else if (toks[0] == "subcommand") {
        require(toks.size() == 2, Code::v_manifest, "bad subcommand line");
        m.subcommand = toks[1];
      } else if (toks[0] == "param" || toks[0] == "digest") {
        require(toks.size() == 2, Code::v_manifest, "bad " + toks[0] + " line");
        auto eq = toks[1].find('=');
        require(eq != std::string::npos, Code::v_manifest, "bad " + toks[0] + " line");
        auto& dst = toks[0] == "param" ? m.params : m.digests;
        dst.emplace_back(toks[1].substr(0, eq), toks[1].substr(eq + 1));
      } else {
        fail(Code::v_manifest, "line " + std::to_string(line_no) + ": unknown manifest record");
      }
    }
    require(header, Code::v_manifest, "missing manifest header");
    return m;
  }

  std::string param(const std::string& key) const {
    for (const auto& [k, v] : params)
      if (k == key) return v;
    fail(Code::v_manifest, "manifest is missing param " + key);
  }
};

class TraceWriter {
 public:
  TraceWriter() = default;

  void open(const std::string& dir) {
    dir_ = dir;
    std::filesystem::create_directories(dir);
    events_.open(dir + "/events.txt", std::ios::binary | std::ios::trunc);
    require(events_.good(), Code::io, "cannot create " + dir + "/events.txt");
    enabled_ = true;
  }

  bool enabled() const { return enabled_; }
  const std::string& dir() const { return dir_; }

  void line(const std::string& text) {
    if (!enabled_) return;
    events_ << text << "\n";
    require(events_.good(), Code::io, "short write to events.txt");
  }

  void finish(const Manifest& manifest, const BettingTree& tree_a, const BettingTree& tree_b) {
    if (!enabled_) return;
    events_.flush();
    write_file(dir_ + "/tree_a.txt", tree_to_text(tree_a));
    write_file(dir_ + "/tree_b.txt", tree_to_text(tree_b));
    write_file(dir_ + "/manifest.txt", manifest.to_text());
  }

 private:
  std::string dir_;
  std::ofstream events_;
  bool enabled_ = false;
};

}  // namespace wagerlab
