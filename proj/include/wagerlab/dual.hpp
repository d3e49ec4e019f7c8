#pragma once

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <tuple>

#include "wagerlab/adversary.hpp"
#include "wagerlab/trace.hpp"

namespace wagerlab {

// The central construction: grow one pair of standard betting decision trees
// (strategies A and B) so that for every enumerated compressible prefix p,
// A or B multiplies its capital on p's isolated extensions; each isolated
// extension spawns a recursive instance staked with the isolated mass.

struct InstanceParams {
  Word s;
  Rational ma, mb;  // stakes assigned to the prefix by A and B
  Rational m;       // doubling mass: min(ma, mb)/2
  Rational c;       // capital target on compressible prefixes: 4(ma+mb)/lambda(s)
  Rational cs;      // pair-band constant, 0 < cs < 1
  int k = 0;        // smallest k with 2^-k < m^2(1-cs)/(2 lambda(s) c^2 (1+cs)^2)
};

inline InstanceParams compute_params(const Word& s, const Rational& ma, const Rational& mb,
                                     const Rational& cs) {
  require(ma > 0 && mb > 0, Code::mass, "instance stakes must be positive");
  require(cs > 0 && cs < 1, Code::usage, "cs must lie strictly between 0 and 1");
  InstanceParams p;
  p.s = s;
  p.ma = ma;
  p.mb = mb;
  p.cs = cs;
  p.m = (ma < mb ? ma : mb) / 2;
  Rational lam_s = pow2_neg(static_cast<unsigned>(s.length()));
  p.c = 4 * (ma + mb) / lam_s;
  Rational threshold = p.m * p.m * (1 - cs) / (2 * lam_s * p.c * p.c * (1 + cs) * (1 + cs));
  int k = 1;
  while (pow2_neg(static_cast<unsigned>(k)) >= threshold) {
    ++k;
    require(k < 512, Code::depth, "instance k out of range");
  }
  p.k = k;
  return p;
}

// A considered leaf: live words, doubling mass ms, reserve mass me, and the
// accumulated measure L of already-isolated prefix extensions. The leaf may
// span several betting-tree nodes; their masses sum to ms + me.
struct DualLeaf {
  int id = -1;
  SequenceSet set;
  Rational ms, me, L;
  std::vector<int> tree_nodes;
  int from = -1;  // leaf this one was split from, -1 for instance roots
  bool live = true;
};

struct SpawnInfo {
  Word s;
  Rational stake_a, stake_b;
  int k = 0;
  int child = -1;
};

struct DualInstance {
  int id = 0;
  int parent = -1;
  InstanceParams params;
  std::array<std::vector<DualLeaf>, 2> leaves;  // [0] = A, [1] = B
  std::vector<Word> processed;                  // prefixes that moved mass
  Rational kraft = 0;                           // containment-deduped sum of 2^-l(p)
  std::vector<SpawnInfo> spawns;
  size_t cursor = 0;  // position in the emission stream
  bool dormant = false;
};

struct RunOptions {
  Rational cs = Rational(1, 2);
  bool file_mode = false;
  std::vector<Emission> file_emissions;
  size_t max_program_len = 12;
  long step_budget = 4096;
  size_t step_limit = 64;
  bool check_invariants = true;
  std::string trace_dir;        // empty: tracing disabled
  std::string programs_digest;  // recorded in the manifest in file mode
};

struct RunReport {
  size_t processed = 0;
  size_t skipped = 0;
  size_t turns = 0;
  size_t instance_count = 0;
  size_t emission_count = 0;
};

namespace detail {

inline Word suffix_word(uint64_t value, size_t width) { return word_from_index(width, value); }

// Removes one cylinder from an antichain: the unique member prefixing `cyl`
// is replaced by the off-path siblings between its length and the cylinder's.
inline SequenceSet remove_cylinder(const SequenceSet& s, const Word& cyl) {
  std::vector<Word> out;
  bool done = false;
  for (const auto& w : s.words()) {
    if (!done && w.is_prefix_of(cyl)) {
      for (size_t i = w.length(); i < cyl.length(); ++i)
        out.push_back(cyl.prefix(i).append(cyl.bit(i) ? '0' : '1'));
      done = true;
    } else {
      require(!cyl.is_prefix_of(w), Code::routing,
              "cylinder " + cyl.str() + " covers several members");
      out.push_back(w);
    }
  }
  require(done, Code::routing, "cylinder " + cyl.str() + " is not inside the set");
  return SequenceSet(std::move(out));
}

// Splits `target` measure off the front of a word list, refining the boundary
// word as needed. Returns (taken, rest).
inline std::pair<std::vector<Word>, std::vector<Word>> take_measure(
    const std::vector<Word>& words, Rational target) {
  std::deque<Word> queue(words.begin(), words.end());
  std::vector<Word> taken, rest;
  while (target > 0) {
    require(!queue.empty(), Code::routing, "not enough measure to split off");
    Word w = queue.front();
    queue.pop_front();
    require(w.length() < 64, Code::routing, "split refinement too deep");
    Rational lam = pow2_neg(static_cast<unsigned>(w.length()));
    if (lam <= target) {
      taken.push_back(w);
      target -= lam;
    } else {
      queue.push_front(w.append('1'));
      queue.push_front(w.append('0'));
    }
  }
  rest.insert(rest.end(), queue.begin(), queue.end());
  return {std::move(taken), std::move(rest)};
}

struct CarveUnit {
  Word piece;      // the cylinder to isolate (an extension of the prefix p)
  Rational sigma;  // exact final mass of the singleton node
};

struct NeedFiner {
  Word piece;
};

struct CarvePlanNode {
  SequenceSet set;
  Rational mass;
  std::optional<Word> singleton;
  int left = -1, right = -1;
};

struct CarvePlan {
  std::vector<CarvePlanNode> nodes;
  int root = -1;
};

// Plans the standard halvings isolating every unit inside a tree node with
// set S and mass M: units keep their exact sigma, remainder mass follows the
// uncarved measure. Throws NeedFiner when a unit exceeds half of some
// intermediate node.
inline int plan_carve_rec(CarvePlan& plan, SequenceSet set, Rational mass,
                          std::vector<CarveUnit> units) {
  int idx = static_cast<int>(plan.nodes.size());
  plan.nodes.push_back({});
  if (units.empty()) {
    plan.nodes[idx] = {std::move(set), std::move(mass), std::nullopt, -1, -1};
    return idx;
  }
  if (set.size() == 1 && units.size() == 1 && set.words()[0] == units[0].piece) {
    require(mass == units[0].sigma, Code::mass, "singleton mass mismatch in carve plan");
    plan.nodes[idx] = {std::move(set), std::move(mass), units[0].piece, -1, -1};
    return idx;
  }
  Rational half = set.measure() / 2;
  SequenceSet nonunit = set;
  Rational sigma_total = 0;
  for (const auto& u : units) {
    nonunit = remove_cylinder(nonunit, u.piece);
    sigma_total += u.sigma;
  }
  Rational residual = mass - sigma_total;
  require(residual >= 0, Code::exhausted, "carve units demand more than the node mass");
  // greedy packing, big units first (unit measures are powers of two)
  std::vector<size_t> order(units.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (units[a].piece.length() != units[b].piece.length())
      return units[a].piece.length() < units[b].piece.length();
    return units[a].piece < units[b].piece;
  });
  Rational packed = 0;
  std::vector<bool> in_left(units.size(), false);
  for (size_t oi : order) {
    Rational lam = pow2_neg(static_cast<unsigned>(units[oi].piece.length()));
    if (packed + lam <= half) {
      in_left[oi] = true;
      packed += lam;
    }
  }
  if (packed == 0) throw NeedFiner{units[order[0]].piece};
  Rational gap = half - packed;
  Rational nonunit_measure = nonunit.measure();
  require(gap <= nonunit_measure, Code::routing, "carve split has no feasible filler");
  auto [filler, nonunit_rest] = take_measure(nonunit.words(), gap);
  std::vector<Word> left_words = filler, right_words = nonunit_rest;
  std::vector<CarveUnit> left_units, right_units;
  Rational left_sigma = 0;
  for (size_t i = 0; i < units.size(); ++i) {
    (in_left[i] ? left_words : right_words).push_back(units[i].piece);
    (in_left[i] ? left_units : right_units).push_back(units[i]);
    if (in_left[i]) left_sigma += units[i].sigma;
  }
  Rational filler_measure = 0;
  for (const auto& w : filler) filler_measure += pow2_neg(static_cast<unsigned>(w.length()));
  Rational left_mass = left_sigma;
  if (nonunit_measure > 0) left_mass += residual * filler_measure / nonunit_measure;
  Rational right_mass = mass - left_mass;
  int l = plan_carve_rec(plan, SequenceSet(std::move(left_words)), std::move(left_mass),
                         std::move(left_units));
  int r = plan_carve_rec(plan, SequenceSet(std::move(right_words)), std::move(right_mass),
                         std::move(right_units));
  plan.nodes[idx] = {std::move(set), std::move(mass), std::nullopt, l, r};
  return idx;
}

inline CarvePlan plan_carve(const SequenceSet& set, const Rational& mass,
                            std::vector<CarveUnit> units) {
  CarvePlan plan;
  plan.root = plan_carve_rec(plan, set, mass, std::move(units));
  return plan;
}

}  // namespace detail

class DualRun {
 public:
  explicit DualRun(RunOptions opt)
      : opt_(std::move(opt)),
        tree_{BettingTree(Variant::standard, SequenceSet::whole_space(), Rational(1)),
              BettingTree(Variant::standard, SequenceSet::whole_space(), Rational(1))} {
    if (opt_.file_mode) {
      emissions_ = opt_.file_emissions;
    } else {
      chains_ = builtin_chain_opponents();
      std::vector<const BettingTree*> reg;
      for (const auto& t : chains_) reg.push_back(&t);
      machine_ = ToyMachine(reg);
      emissions_ = machine_.enumerate(opt_.max_program_len, opt_.step_budget);
    }
    if (!opt_.trace_dir.empty()) trace_.open(opt_.trace_dir);
    make_instance(-1, Word(), Rational(1), Rational(1), tree_[0].root(), tree_[1].root());
  }

  const BettingTree& tree(int side) const { return tree_[side]; }
  const std::vector<DualInstance>& instances() const { return instances_; }
  const std::vector<Emission>& emissions() const { return emissions_; }
  const RunOptions& options() const { return opt_; }

  RunReport run() {
    RunReport rep;
    size_t rr = 0;
    size_t idle = 0;
    while (rep.turns < opt_.step_limit && !instances_.empty() && idle <= instances_.size()) {
      size_t idx = rr % instances_.size();
      ++rr;
      if (instances_[idx].dormant) {
        ++idle;
        continue;
      }
      if (take_turn(static_cast<int>(idx), rep)) {
        ++rep.turns;
        idle = 0;
      }
    }
    rep.instance_count = instances_.size();
    rep.emission_count = emissions_.size();
    if (trace_.enabled()) trace_.finish(manifest(), tree_[0], tree_[1]);
    return rep;
  }

  Manifest manifest() const {
    Manifest m;
    m.version = trace_format_version();
    m.subcommand = "construct";
    m.params = {{"cs", format_rational(opt_.cs)},
                {"enumerator", opt_.file_mode ? "file" : "toy"},
                {"max-len", std::to_string(opt_.max_program_len)},
                {"budget", std::to_string(opt_.step_budget)},
                {"step-limit", std::to_string(opt_.step_limit)},
                {"root-k", std::to_string(instances_.empty() ? 0 : instances_[0].params.k)}};
    m.digests = {{"emissions", sha256_hex(emissions_to_text(emissions_))}};
    if (opt_.file_mode) m.digests.push_back({"programs", opt_.programs_digest});
    return m;
  }

  // Full invariant sweep; used after every step when check_invariants is on
  // and directly by the acceptance suite.
  void check_all_invariants(const std::string& where) const {
    for (const auto& inst : instances_) check_instance_invariants(inst, where);
  }

  void check_instance_invariants(const DualInstance& inst, const std::string& where) const {
    const Rational& cs = inst.params.cs;
    Rational lam_s = pow2_neg(static_cast<unsigned>(inst.params.s.length()));
    for (int side = 0; side < 2; ++side) {
      Rational total = 0;
      for (const auto& leaf : inst.leaves[side]) {
        if (!leaf.live) continue;
        require(leaf.me > 0, Code::v_me_positive, where + ": me must stay positive");
        require(leaf.ms >= 0, Code::v_ms_negative, where + ": ms must stay nonnegative");
        require(leaf.L >= 0, Code::v_format, where + ": L must stay nonnegative");
        Rational node_mass = 0;
        for (int id : leaf.tree_nodes) node_mass += tree_[side].node(id).mass;
        require(node_mass == leaf.ms + leaf.me, Code::v_mass_conserve,
                where + ": tree node masses disagree with ms+me");
        total += leaf.ms + leaf.me;
      }
      for (const auto& sp : inst.spawns) total += side == 0 ? sp.stake_a : sp.stake_b;
      require(total == (side == 0 ? inst.params.ma : inst.params.mb), Code::v_mass_conserve,
              where + ": side mass is not conserved");
    }
    require(inst.kraft <= pow2_neg(static_cast<unsigned>(inst.params.k)), Code::v_kraft,
            where + ": accepted prefix mass exceeds 2^-k");
    for (const auto& [key, lam] : pair_measures(inst)) {
      const auto& la = inst.leaves[0][static_cast<size_t>(key >> 32)];
      const auto& lb = inst.leaves[1][static_cast<size_t>(key & 0xffffffffULL)];
      Rational x = (la.set.measure() + la.L) * (lb.set.measure() + lb.L);
      Rational lhs = lam_s * lam;
      require(lhs >= (1 - cs) * x && lhs <= (1 + cs) * x, Code::v_pair_band,
              where + ": pair measure escapes the (1±cs) band");
    }
  }

  // Exact pairwise intersection measures over live leaves, via ancestor
  // lookups between the two sorted word indexes.
  std::map<uint64_t, Rational> pair_measures(const DualInstance& inst) const {
    std::array<std::vector<std::pair<Word, int>>, 2> idx;
    for (int side = 0; side < 2; ++side) {
      for (const auto& leaf : inst.leaves[side]) {
        if (!leaf.live) continue;
        for (const auto& w : leaf.set.words()) idx[side].push_back({w, leaf.id});
      }
      std::sort(idx[side].begin(), idx[side].end());
    }
    std::map<uint64_t, Rational> out;
    auto ancestor = [](const std::vector<std::pair<Word, int>>& v, const Word& w,
                       bool strict) -> int {
      auto it = std::upper_bound(
          v.begin(), v.end(), w,
          [](const Word& lhs, const std::pair<Word, int>& rhs) { return lhs < rhs.first; });
      if (it == v.begin()) return -1;
      --it;
      if (strict && it->first == w) {
        if (it == v.begin()) return -1;
        --it;
      }
      if (!it->first.is_prefix_of(w) || (strict && it->first == w)) return -1;
      return it->second;
    };
    for (const auto& [w, leaf_a] : idx[0]) {
      int leaf_b = ancestor(idx[1], w, false);
      if (leaf_b >= 0)
        out[(static_cast<uint64_t>(leaf_a) << 32) | static_cast<uint32_t>(leaf_b)] +=
            pow2_neg(static_cast<unsigned>(w.length()));
    }
    for (const auto& [w, leaf_b] : idx[1]) {
      int leaf_a = ancestor(idx[0], w, true);
      if (leaf_a >= 0)
        out[(static_cast<uint64_t>(leaf_a) << 32) | static_cast<uint32_t>(leaf_b)] +=
            pow2_neg(static_cast<unsigned>(w.length()));
    }
    return out;
  }

 private:
  struct PairRef {
    int a = -1, b = -1;
    SequenceSet inter;
  };

  struct Assignment {
    PairRef pair;
    Rational da, db;
  };

  struct UnitSeed {
    Word piece;
    Rational d_share;
  };

  struct LeafPlan {
    int leaf_id = -1;
    std::vector<std::pair<int, detail::CarvePlan>> node_plans;
    std::vector<detail::CarveUnit> all_units;
    Rational sliver_total = 0;
  };

  int make_instance(int parent, const Word& s, const Rational& ma, const Rational& mb,
                    int a_node, int b_node) {
    DualInstance inst;
    inst.id = static_cast<int>(instances_.size());
    inst.parent = parent;
    inst.params = compute_params(s, ma, mb, opt_.cs);
    for (int side = 0; side < 2; ++side) {
      DualLeaf leaf;
      leaf.id = 0;
      leaf.set = SequenceSet({s});
      leaf.ms = inst.params.m;
      leaf.me = (side == 0 ? ma : mb) - inst.params.m;
      leaf.L = 0;
      leaf.tree_nodes = {side == 0 ? a_node : b_node};
      inst.leaves[side].push_back(std::move(leaf));
    }
    instances_.push_back(std::move(inst));
    const DualInstance& ref = instances_.back();
    trace_.line("instance id=" + std::to_string(ref.id) +
                " parent=" + (parent < 0 ? std::string("-") : std::to_string(parent)) +
                " s=" + s.str() + " ma=" + format_rational(ma) + " mb=" + format_rational(mb) +
                " m=" + format_rational(ref.params.m) + " c=" + format_rational(ref.params.c) +
                " cs=" + format_rational(ref.params.cs) + " k=" + std::to_string(ref.params.k));
    emit_leaf(ref, 0, ref.leaves[0][0]);
    emit_leaf(ref, 1, ref.leaves[1][0]);
    return ref.id;
  }

  void emit_leaf(const DualInstance& inst, int side, const DualLeaf& leaf) {
    std::string nodes;
    for (size_t i = 0; i < leaf.tree_nodes.size(); ++i) {
      if (i) nodes += ':';
      nodes += std::to_string(leaf.tree_nodes[i]);
    }
    trace_.line(std::string("leaf ") + (side == 0 ? "A" : "B") + " " + std::to_string(leaf.id) +
                " S=" + leaf.set.str() + " ms=" + format_rational(leaf.ms) +
                " me=" + format_rational(leaf.me) + " L=" + format_rational(leaf.L) +
                " instance=" + std::to_string(inst.id) +
                " from=" + (leaf.from < 0 ? std::string("-") : std::to_string(leaf.from)) +
                " nodes=" + nodes);
  }

  bool accepts(const DualInstance& inst, const Emission& e) const {
    return e.savings >= inst.params.k && inst.params.s.is_prefix_of(e.prefix);
  }

  bool take_turn(int inst_idx, RunReport& rep) {
    while (instances_[inst_idx].cursor < emissions_.size()) {
      const Emission e = emissions_[instances_[inst_idx].cursor++];
      if (!accepts(instances_[inst_idx], e)) continue;
      process_prefix(inst_idx, e, rep);
      return true;
    }
    instances_[inst_idx].dormant = true;
    return false;
  }

  // Candidate pairs whose intersection meets the cylinder of p, split into
  // fully-inside pairs and straddling ones.
  std::pair<std::vector<PairRef>, std::vector<PairRef>> classify(const DualInstance& inst,
                                                                 const Word& p) const {
    std::array<std::vector<int>, 2> cand;
    for (int side = 0; side < 2; ++side)
      for (const auto& leaf : inst.leaves[side]) {
        if (!leaf.live) continue;
        const auto& ws = leaf.set.words();
        auto it = std::lower_bound(ws.begin(), ws.end(), p);
        bool related = (it != ws.end() && p.is_prefix_of(*it));
        if (!related && it != ws.begin()) related = std::prev(it)->is_prefix_of(p);
        if (related) cand[side].push_back(leaf.id);
      }
    std::vector<PairRef> inside, straddle;
    for (int a : cand[0])
      for (int b : cand[1]) {
        SequenceSet inter = inst.leaves[0][a].set.intersect(inst.leaves[1][b].set);
        if (inter.empty()) continue;
        Rational ins = inter.clip_inside(p).measure();
        if (ins == 0) continue;
        if (ins == inter.measure())
          inside.push_back({a, b, std::move(inter)});
        else
          straddle.push_back({a, b, std::move(inter)});
      }
    return {std::move(inside), std::move(straddle)};
  }

  void process_prefix(int inst_idx, const Emission& e, RunReport& rep) {
    const Word p = e.prefix;
    std::string inst_tag = std::to_string(instances_[inst_idx].id);
    auto [inside, straddle] = classify(instances_[inst_idx], p);
    if (inside.empty() && straddle.empty()) {
      trace_.line("prefix instance=" + inst_tag + " seq=" + std::to_string(e.sequence_number) +
                  " p=" + p.str() + " action=skipped");
      ++rep.skipped;
      return;
    }
    trace_.line("prefix instance=" + inst_tag + " seq=" + std::to_string(e.sequence_number) +
                " p=" + p.str() + " action=processed");
    {
      DualInstance& inst = instances_[inst_idx];
      bool covered = false;
      for (const auto& q : inst.processed)
        if (q.is_prefix_of(p)) covered = true;
      if (!covered) inst.kraft += pow2_neg(static_cast<unsigned>(p.length()));
      inst.processed.push_back(p);
    }

    require(straddle.size() <= 1, Code::routing,
            "more than one straddling pair for prefix " + p.str());
    if (!straddle.empty()) preparation_step(inst_idx, p, straddle[0]);
    trace_.line("phase instance=" + inst_tag + " p=" + p.str() + " name=prepare");
    if (opt_.check_invariants)
      check_instance_invariants(instances_[inst_idx], "after preparation");

    auto [inside2, straddle2] = classify(instances_[inst_idx], p);
    require(straddle2.empty(), Code::routing, "preparation failed to separate " + p.str());
    auto assignments = mass_assignment_step(inst_idx, p, inside2);
    trace_.line("phase instance=" + inst_tag + " p=" + p.str() + " name=assign");

    betting_decisions_step(inst_idx, p, assignments);
    trace_.line("phase instance=" + inst_tag + " p=" + p.str() + " name=bet");
    if (opt_.check_invariants) check_all_invariants("after betting decisions");
    ++rep.processed;
  }

  // --- preparation ---------------------------------------------------------

  // Per-child word routing: every word takes one n-bit extension per child;
  // the carrier of the straddling cylinder is first materialized to the
  // cylinder's length, and on side B the A-block bits stay free.
  static std::vector<std::vector<Word>> routed_words(const SequenceSet& set, const Word& xt,
                                                     size_t n, bool second_block) {
    size_t fan = 1ULL << n;
    std::vector<std::vector<Word>> parts(fan);
    for (const auto& x : set.words()) {
      if (x.is_prefix_of(xt)) {
        auto zs = SequenceSet({x}).refined(xt.length()).words();
        for (const auto& z : zs) {
          if (second_block) {
            for (uint64_t u = 0; u < fan; ++u) {
              Word zu = z.concat(detail::suffix_word(u, n));
              for (uint64_t w = 0; w < fan; ++w)
                parts[w].push_back(zu.concat(detail::suffix_word(w, n)));
            }
          } else {
            for (uint64_t u = 0; u < fan; ++u)
              parts[u].push_back(z.concat(detail::suffix_word(u, n)));
          }
        }
      } else {
        for (uint64_t u = 0; u < fan; ++u)
          parts[u].push_back(x.concat(detail::suffix_word(u, n)));
      }
    }
    return parts;
  }

  // Splits one tree node into a full 2^n fan of standard halvings and
  // returns the fan leaves in routing-suffix order.
  std::vector<int> fan_split(int side, int node_id, const Word& xt, size_t n,
                             bool second_block) {
    auto parts = routed_words(tree_[side].node(node_id).set, xt, n, second_block);
    size_t fan = parts.size();
    auto union_range = [&](size_t lo, size_t hi) {
      std::vector<Word> acc;
      size_t total = 0;
      for (size_t i = lo; i < hi; ++i) total += parts[i].size();
      acc.reserve(total);
      for (size_t i = lo; i < hi; ++i) acc.insert(acc.end(), parts[i].begin(), parts[i].end());
      std::sort(acc.begin(), acc.end());
      SequenceSet s;
      s.adopt_sorted(std::move(acc));
      return s;
    };
    std::vector<int> out(fan, -1);
    struct Frame {
      int node;
      size_t lo, hi;
    };
    std::vector<Frame> stack{{node_id, 0, fan}};
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      if (f.hi - f.lo == 1) {
        out[f.lo] = f.node;
        continue;
      }
      size_t mid = f.lo + (f.hi - f.lo) / 2;
      Rational m = tree_[side].node(f.node).mass;
      auto [c0, c1] = tree_[side].apply_decision(f.node, union_range(f.lo, mid), m / 2,
                                                 union_range(mid, f.hi), m - m / 2);
      tree_[side].release_set(f.node);
      stack.push_back({c0, f.lo, mid});
      stack.push_back({c1, mid, f.hi});
    }
    return out;
  }

  void preparation_step(int inst_idx, const Word& p, const PairRef& pair) {
    require(pair.inter.size() == 1, Code::routing,
            "straddling intersection is not a single cylinder");
    Word xt = pair.inter.words()[0];
    require(xt.is_strict_prefix_of(p), Code::routing, "straddle cylinder does not prefix p");
    size_t gap_bits = p.length() - xt.length();
    size_t n = (gap_bits + 1) / 2;
    require(n >= 1 && n <= 20, Code::routing, "preparation fan out of range");
    DualInstance& inst = instances_[inst_idx];
    for (int side = 0; side < 2; ++side) {
      int leaf_id = side == 0 ? pair.a : pair.b;
      size_t fan = 1ULL << n;
      std::vector<std::vector<int>> fans;
      for (int node : inst.leaves[side][leaf_id].tree_nodes)
        fans.push_back(fan_split(side, node, xt, n, side == 1));
      auto parts = routed_words(inst.leaves[side][leaf_id].set, xt, n, side == 1);
      DualLeaf& leaf = inst.leaves[side][leaf_id];
      leaf.live = false;
      trace_.line(std::string("retire ") + (side == 0 ? "A" : "B") + " " +
                  std::to_string(leaf.id) + " instance=" + std::to_string(inst.id));
      Rational ms_child = leaf.ms / static_cast<long>(fan);
      Rational me_child = leaf.me / static_cast<long>(fan);
      Rational l_child = leaf.L / static_cast<long>(fan);
      int from_id = leaf.id;
      for (uint64_t u = 0; u < fan; ++u) {
        DualLeaf child;
        child.id = static_cast<int>(inst.leaves[side].size());
        child.set = SequenceSet(std::move(parts[u]));
        child.ms = ms_child;
        child.me = me_child;
        child.L = l_child;
        child.from = from_id;
        for (const auto& fn : fans) child.tree_nodes.push_back(fn[u]);
        inst.leaves[side].push_back(std::move(child));
        emit_leaf(inst, side, inst.leaves[side].back());
      }
    }
  }

  // --- mass assignment -----------------------------------------------------

  std::vector<Assignment> mass_assignment_step(int inst_idx, const Word& p,
                                               std::vector<PairRef>& inside) {
    DualInstance& inst = instances_[inst_idx];
    std::sort(inside.begin(), inside.end(), [](const PairRef& x, const PairRef& y) {
      return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    std::vector<Assignment> out;
    Rational lam_s = pow2_neg(static_cast<unsigned>(inst.params.s.length()));
    for (auto& pr : inside) {
      DualLeaf& la = inst.leaves[0][pr.a];
      DualLeaf& lb = inst.leaves[1][pr.b];
      Rational wa = la.set.measure() + la.L;
      Rational wb = lb.set.measure() + lb.L;
      Rational target = inst.params.c * pr.inter.measure();
      Rational da, db;
      if ((la.ms - target) / wa >= lb.ms / wb) {
        da = target;
        db = 0;
      } else if ((lb.ms - target) / wb >= la.ms / wa) {
        da = 0;
        db = target;
      } else {
        require(la.ms + lb.ms >= target, Code::exhausted,
                "mass exhausted while assigning to " + p.str());
        da = (wb * la.ms - wa * lb.ms + wa * target) / (wa + wb);
        db = target - da;
      }
      require(da >= 0 && db >= 0 && da <= la.ms && db <= lb.ms, Code::exhausted,
              "assignment escapes the available doubling mass");
      Rational f = lam_s / inst.params.m * la.ms / wa;
      Rational g = lam_s / inst.params.m * lb.ms / wb;
      la.ms -= da;
      lb.ms -= db;
      Rational fprime = lam_s / inst.params.m * la.ms / wa;
      trace_.line("assign p=" + p.str() + " pair=" + std::to_string(pr.a) + "," +
                  std::to_string(pr.b) + " da=" + format_rational(da) +
                  " db=" + format_rational(db) + " instance=" + std::to_string(inst.id));
      trace_.line("monitor f=" + format_rational(f) + " fprime=" + format_rational(fprime) +
                  " g=" + format_rational(g) + " dms=" + format_rational(da) +
                  " sum_p=" + format_rational(inst.kraft) + " instance=" +
                  std::to_string(inst.id) + " pair=" + std::to_string(pr.a) + "," +
                  std::to_string(pr.b));
      // density identity, exact: dms == (m/lambda_s)(f - f')(lambda + L)
      require(da == inst.params.m / lam_s * (f - fprime) * wa, Code::v_format,
              "density monitor identity failed");
      out.push_back({std::move(pr), std::move(da), std::move(db)});
    }
    return out;
  }

  // --- betting decisions ---------------------------------------------------

  // Builds the carve plans for one leaf at the current granularity. Returns
  // the plan, or the seed piece whose refinement is too coarse.
  std::pair<std::optional<LeafPlan>, Word> plan_leaf(const DualInstance& inst, int side,
                                                     int leaf_id,
                                                     const std::vector<UnitSeed>& units,
                                                     const std::map<Word, size_t>& extra) {
    const DualLeaf& leaf = inst.leaves[side][leaf_id];
    struct Piece {
      Word w;
      Rational d;
      Word seed;
    };
    std::vector<Piece> pieces;
    for (const auto& u : units) {
      size_t e = extra.at(u.piece);
      if (e == 0) {
        pieces.push_back({u.piece, u.d_share, u.piece});
      } else {
        auto zs = SequenceSet({u.piece}).refined(u.piece.length() + e).words();
        for (const auto& z : zs)
          pieces.push_back({z, u.d_share / static_cast<long>(zs.size()), u.piece});
      }
    }
    // group pieces by the owning tree node
    std::map<int, std::vector<Piece>> by_node;
    for (auto& pc : pieces) {
      int owner = -1;
      for (int node : leaf.tree_nodes)
        if (tree_[side].node(node).set.covers_meets(pc.w)) {
          owner = node;
          break;
        }
      require(owner >= 0, Code::routing, "carve piece outside the leaf's tree nodes");
      by_node[owner].push_back(pc);
    }
    LeafPlan lp;
    lp.leaf_id = leaf_id;
    for (auto& [node_id, plist] : by_node) {
      const auto& node = tree_[side].node(node_id);
      Rational node_measure = node.set.measure();
      Rational piece_measure = 0;
      Rational d_total = 0;
      for (const auto& pc : plist) {
        piece_measure += pow2_neg(static_cast<unsigned>(pc.w.length()));
        d_total += pc.d;
      }
      Rational avail = node.mass - d_total;
      require(avail > 0, Code::exhausted, "carve target exceeds the tree node mass");
      std::vector<detail::CarveUnit> node_units;
      Rational slivers = 0;
      bool fully_carved = piece_measure == node_measure;
      for (const auto& pc : plist) {
        Rational sliver;
        if (fully_carved) {
          // the node is consumed entirely; its reserve goes with the pieces
          sliver = avail * pow2_neg(static_cast<unsigned>(pc.w.length())) / piece_measure;
        } else {
          sliver = avail / static_cast<long>(2 * plist.size() + 2);
        }
        slivers += sliver;
        node_units.push_back({pc.w, pc.d + sliver});
      }
      try {
        lp.node_plans.emplace_back(node_id,
                                   detail::plan_carve(node.set, node.mass, node_units));
      } catch (const detail::NeedFiner& nf) {
        return {std::nullopt, nf.piece};
      }
      for (auto& u : node_units) lp.all_units.push_back(u);
      lp.sliver_total += slivers;
    }
    return {std::move(lp), Word()};
  }

  void commit_plan(int side, int tree_node, const detail::CarvePlan& plan,
                   std::vector<int>& remainder_nodes,
                   std::map<Word, std::array<Rational, 2>>& piece_stakes,
                   std::map<Word, int>& singleton_nodes) {
    struct Frame {
      int plan_idx;
      int node;
    };
    std::vector<Frame> stack{{plan.root, tree_node}};
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      const auto& pn = plan.nodes[f.plan_idx];
      if (pn.left < 0) {
        if (pn.singleton) {
          singleton_nodes[*pn.singleton] = f.node;
          piece_stakes[*pn.singleton][side] = pn.mass;
        } else {
          remainder_nodes.push_back(f.node);
        }
        continue;
      }
      const auto& lnode = plan.nodes[pn.left];
      const auto& rnode = plan.nodes[pn.right];
      auto [c0, c1] =
          tree_[side].apply_decision(f.node, lnode.set, lnode.mass, rnode.set, rnode.mass);
      tree_[side].release_set(f.node);
      stack.push_back({pn.left, c0});
      stack.push_back({pn.right, c1});
    }
  }

  void betting_decisions_step(int inst_idx, const Word& p,
                              std::vector<Assignment>& assignments) {
    if (assignments.empty()) return;
    // seeds: every intersection word of every assigned pair is an extension
    // of p and gets isolated; d-mass splits proportionally to measure
    std::array<std::map<int, std::vector<UnitSeed>>, 2> seeds;
    for (const auto& as : assignments) {
      Rational lam_inter = as.pair.inter.measure();
      for (const auto& w : as.pair.inter.words()) {
        Rational frac = pow2_neg(static_cast<unsigned>(w.length())) / lam_inter;
        seeds[0][as.pair.a].push_back({w, as.da * frac});
        seeds[1][as.pair.b].push_back({w, as.db * frac});
      }
    }
    // shared refinement depths keep the isolated pieces identical in A and B
    std::map<Word, size_t> extra;
    for (const auto& side_map : seeds)
      for (const auto& [leaf_id, units] : side_map)
        for (const auto& u : units) extra.try_emplace(u.piece, 0);

    std::array<std::vector<LeafPlan>, 2> plans;
    while (true) {
      bool ok = true;
      Word finer;
      plans = {};
      for (int side = 0; side < 2 && ok; ++side)
        for (const auto& [leaf_id, units] : seeds[side]) {
          auto [lp, piece] = plan_leaf(instances_[inst_idx], side, leaf_id, units, extra);
          if (!lp) {
            ok = false;
            finer = piece;
            break;
          }
          plans[side].push_back(std::move(*lp));
        }
      if (ok) break;
      Word seed = finer;
      while (!extra.count(seed)) {
        require(!seed.empty(), Code::routing, "carve refinement did not converge");
        seed = seed.prefix(seed.length() - 1);
      }
      require(++extra[seed] <= 8, Code::routing, "carve refinement too deep");
    }

    // commit: apply the planned decisions, update leaves, record singletons
    std::map<Word, std::array<Rational, 2>> piece_stakes;
    std::array<std::map<Word, int>, 2> singleton_nodes;
    for (int side = 0; side < 2; ++side) {
      for (auto& lp : plans[side]) {
        DualInstance& inst = instances_[inst_idx];
        DualLeaf& leaf = inst.leaves[side][lp.leaf_id];
        std::vector<int> remainder;
        std::set<int> planned;
        for (auto& [node_id, plan] : lp.node_plans) planned.insert(node_id);
        for (int node : leaf.tree_nodes)
          if (!planned.count(node)) remainder.push_back(node);
        for (auto& [node_id, plan] : lp.node_plans)
          commit_plan(side, node_id, plan, remainder, piece_stakes, singleton_nodes[side]);
        Rational carved = 0;
        SequenceSet remaining = leaf.set;
        for (const auto& u : lp.all_units) {
          carved += pow2_neg(static_cast<unsigned>(u.piece.length()));
          remaining = detail::remove_cylinder(remaining, u.piece);
        }
        require(!remaining.empty(), Code::routing, "leaf would be carved away entirely");
        leaf.set = std::move(remaining);
        leaf.L += carved;
        leaf.me -= lp.sliver_total;
        require(leaf.me > 0, Code::sliver, "reserve mass exhausted by slivers");
        leaf.tree_nodes = std::move(remainder);
        emit_leaf(inst, side, leaf);
      }
    }

    // one spawned instance per isolated piece, staked with the piece masses
    int parent_id = instances_[inst_idx].id;
    for (const auto& [piece, stakes] : piece_stakes) {
      require(singleton_nodes[0].count(piece) && singleton_nodes[1].count(piece),
              Code::routing, "isolated pieces differ between the sides");
      require(stakes[0] > 0 && stakes[1] > 0, Code::sliver,
              "spawned stakes must be positive");
      int child = make_instance(parent_id, piece, stakes[0], stakes[1],
                                singleton_nodes[0].at(piece), singleton_nodes[1].at(piece));
      DualInstance& parent = instances_[inst_idx];
      parent.spawns.push_back(
          {piece, stakes[0], stakes[1], instances_[child].params.k, child});
      trace_.line("spawn s=" + piece.str() + " ma=" + format_rational(stakes[0]) +
                  " mb=" + format_rational(stakes[1]) +
                  " k=" + std::to_string(instances_[child].params.k) +
                  " instance=" + std::to_string(parent_id) +
                  " child=" + std::to_string(child));
    }
  }

  RunOptions opt_;
  std::array<BettingTree, 2> tree_;
  std::vector<BettingTree> chains_;
  ToyMachine machine_;
  std::vector<Emission> emissions_;
  std::vector<DualInstance> instances_;
  TraceWriter trace_;
};

}  // namespace wagerlab
