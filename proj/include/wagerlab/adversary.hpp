#pragma once

#include "wagerlab/toy_machine.hpp"

namespace wagerlab {

// Construction of an unpredictable-but-compressible sequence against one
// opponent strategy, with machine-checkable compressibility certificates.
// Certificates are REPLAY programs: the sequence is computable from the
// strategy, so a program naming (strategy, milestone, padding) reproduces it.

struct AdversaryResult {
  Word prefix;                            // the length-horizon output
  std::vector<Rational> trajectory;       // opponent capital along the descent
  std::vector<Certificate> certificates;  // milestone certs, then the final one
  AdversaryWalk walk;
  size_t horizon = 0;
};

namespace detail {

inline Certificate make_cert(const ToyMachine& machine, int key, int t, size_t pad,
                             const Word& expected) {
  Certificate c;
  c.milestone = t;
  c.prefix = expected;
  c.program = ToyMachine::encode_replay(key, t, pad);
  c.claimed_k = static_cast<long>(c.prefix.length()) - static_cast<long>(c.program.length());
  auto replayed = machine.run(c.program, 1L << 30);
  require(replayed.has_value() && *replayed == expected, Code::replay_mismatch,
          "certificate does not replay to its target (nondeterminism bug)");
  return c;
}

}  // namespace detail

// The opponent must be registered with the machine under `key`; REPLAY
// programs refer to it by that registry key.
inline AdversaryResult build_unpredictable(const ToyMachine& machine, int key, size_t horizon,
                                           long wait_budget) {
  require(key >= 0 && static_cast<size_t>(key) < machine.registry().size(), Code::registry,
          "strategy key " + std::to_string(key) + " is not registered");
  const BettingTree& tree = *machine.registry()[key];
  auto walk = adversary_walk(tree, wait_budget, horizon);
  AdversaryResult r;
  r.horizon = horizon;
  r.trajectory = walk.capitals;
  for (const auto& m : walk.milestones)
    r.certificates.push_back(detail::make_cert(machine, key, m.t, 0, m.prefix));
  if (walk.stall_prefix.length() >= horizon) {
    // The descent alone reached the horizon; milestone certificates cover
    // the reachable prefixes and there is no stall padding to encode.
    r.prefix = walk.stall_prefix.prefix(horizon);
  } else {
    r.prefix = lex_least_fill(tree.node(walk.terminal_node).set, walk.stall_prefix, horizon);
    r.certificates.push_back(detail::make_cert(
        machine, key, 0, horizon - walk.stall_prefix.length(), r.prefix));
  }
  r.walk = std::move(walk);
  return r;
}

// Rebuilds the certificate for an arbitrary prefix produced by the adversary
// against the registered strategy: t >= 1 names a milestone, t = 0 the stall;
// the prefix must equal that base extended by lex-least padding. Validity is
// checked by executing the machine.
inline Certificate certify(const ToyMachine& machine, const Word& prefix, int key, int t) {
  require(key >= 0 && static_cast<size_t>(key) < machine.registry().size(), Code::registry,
          "strategy key " + std::to_string(key) + " is not registered");
  auto walk = adversary_walk(*machine.registry()[key], 1L << 20);
  Word base;
  if (t == 0) {
    base = walk.stall_prefix;
  } else {
    const WalkMilestone* hit = nullptr;
    for (const auto& m : walk.milestones)
      if (m.t == t) { hit = &m; break; }
    require(hit != nullptr, Code::registry,
            "milestone " + std::to_string(t) + " was never reached");
    base = hit->prefix;
  }
  require(base.length() <= prefix.length(), Code::replay_mismatch,
          "prefix shorter than the replay base");
  return detail::make_cert(machine, key, t, prefix.length() - base.length(), prefix);
}

}  // namespace wagerlab
