#pragma once

#include <stdexcept>
#include <string>

namespace wagerlab {

// Machine-readable violation / error codes. The verifier reports these and
// the CLI maps them onto exit statuses (domain errors exit 1, usage errors 2).
enum class Code {
  ok = 0,
  usage,
  parse,
  io,
  antichain,
  measure,
  partition,
  mass,
  variant,
  position,
  already_decided,
  ambiguous,
  depth,
  unfair,
  replay_mismatch,
  registry,
  exhausted,
  sliver,
  routing,
  // verifier codes
  v_manifest,
  v_version,
  v_format,
  v_tree_mass,
  v_tree_measure,
  v_tree_partition,
  v_pair_band,
  v_prep_ratio,
  v_assign_sum,
  v_me_positive,
  v_ms_negative,
  v_mass_conserve,
  v_kraft,
  v_params,
  v_doubling,
  v_spawn_stake,
};

inline const char* code_name(Code c) {
  switch (c) {
    case Code::ok: return "OK";
    case Code::usage: return "USAGE";
    case Code::parse: return "PARSE";
    case Code::io: return "IO";
    case Code::antichain: return "ANTICHAIN";
    case Code::measure: return "MEASURE";
    case Code::partition: return "PARTITION";
    case Code::mass: return "MASS";
    case Code::variant: return "VARIANT";
    case Code::position: return "POSITION";
    case Code::already_decided: return "ALREADY_DECIDED";
    case Code::ambiguous: return "AMBIGUOUS";
    case Code::depth: return "DEPTH";
    case Code::unfair: return "UNFAIR";
    case Code::replay_mismatch: return "REPLAY_MISMATCH";
    case Code::registry: return "REGISTRY";
    case Code::exhausted: return "EXHAUSTED";
    case Code::sliver: return "SLIVER";
    case Code::routing: return "ROUTING";
    case Code::v_manifest: return "V_MANIFEST";
    case Code::v_version: return "V_VERSION";
    case Code::v_format: return "V_FORMAT";
    case Code::v_tree_mass: return "V_TREE_MASS";
    case Code::v_tree_measure: return "V_TREE_MEASURE";
    case Code::v_tree_partition: return "V_TREE_PARTITION";
    case Code::v_pair_band: return "V_PAIR_BAND";
    case Code::v_prep_ratio: return "V_PREP_RATIO";
    case Code::v_assign_sum: return "V_ASSIGN_SUM";
    case Code::v_me_positive: return "V_ME_POSITIVE";
    case Code::v_ms_negative: return "V_MS_NEGATIVE";
    case Code::v_mass_conserve: return "V_MASS_CONSERVE";
    case Code::v_kraft: return "V_KRAFT";
    case Code::v_params: return "V_PARAMS";
    case Code::v_doubling: return "V_DOUBLING";
    case Code::v_spawn_stake: return "V_SPAWN_STAKE";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(Code code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

[[noreturn]] inline void fail(Code code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Code code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace wagerlab
