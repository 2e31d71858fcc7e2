// loop_transform.hpp -- expansion of loop invariants into assert/assume
// obligations over natural loops.
//
// For each natural loop carrying invariant statements with conjoined
// payload I:
//   * `assert I` is placed first at the loop header (inheriting the
//     header's labels, so every entry and back edge passes through it);
//   * each invariant statement becomes `assume I` in place;
//   * `assert I` guards every way out of the loop: before an exclusive
//     exit target (taking over its labels), on a split block for shared
//     jump targets, inline after a fallthrough exit, and before returns
//     inside the loop body.
// Loops without invariants are left untouched.  Invariants inside
// irreducible (multi-entry) cycles are rejected with L1.

#ifndef VIMPFORGE_LOOP_TRANSFORM_HPP
#define VIMPFORGE_LOOP_TRANSFORM_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vimpforge/cfg.hpp"
#include "vimpforge/expr_util.hpp"
#include "vimpforge/ir.hpp"

namespace vimpforge {

namespace detail {

inline Instruction make_assert(const ExprPtr &e, Instruction::AssertTag tag) {
  Instruction ins;
  ins.node = Instruction::AssertStmt{e};
  ins.tag = tag;
  return ins;
}

// Fresh split-block labels (exit$0, exit$1, ...) avoiding collisions.
class SplitNames {
 public:
  explicit SplitNames(const MethodDecl &m) {
    for (const auto &ins : m.body)
      for (const auto &l : ins.labels) used_.insert(l);
  }
  std::string fresh() {
    std::string name;
    do {
      name = "exit$" + std::to_string(counter_++);
    } while (used_.count(name));
    used_.insert(name);
    return name;
  }

 private:
  std::set<std::string> used_;
  unsigned counter_ = 0;
};

// Conjoin the payloads of the loop's own invariant statements in program
// order; empty when the loop declares none.
inline ExprPtr loop_invariant(const MethodDecl &m, const std::set<size_t> &own_invs) {
  ExprPtr conj;
  for (size_t i : own_invs) {
    const auto *inv = m.body[i].as<Instruction::InvariantStmt>();
    if (!inv) continue;
    conj = conj ? build::binary(BinOp::And, conj, inv->expr) : inv->expr;
  }
  return conj;
}

// Expand one loop.  `own_invs` are the indices of the invariant
// statements that belong to this loop (innermost-enclosing assignment).
inline void expand_one_loop(MethodDecl &m, const Cfg &g, const LoopInfo &L,
                            const std::set<size_t> &own_invs) {
  ExprPtr inv = loop_invariant(m, own_invs);
  if (!inv) return;
  using Tag = Instruction::AssertTag;
  SplitNames names(m);

  size_t n = m.body.size();
  // inserted before instruction i; .second says whether the assert takes
  // over i's labels (so jumps land on the assert).
  std::map<size_t, std::vector<std::pair<Instruction, bool>>> before;
  // jump retargeting per source instruction: old label -> split label
  std::map<size_t, std::map<std::string, std::string>> retarget;
  std::vector<Instruction> split_blocks;

  // Header assert comes first and absorbs the header labels.
  before[L.header].push_back({make_assert(inv, Tag::InvariantHeader), true});

  // Invariant statements of this loop become assumes in place.
  for (size_t i : own_invs) {
    Instruction &ins = m.body[i];
    ins.node = Instruction::AssumeStmt{inv};
  }

  // Returns inside the body leave the loop: assert first.
  for (size_t i : L.body)
    if (m.body[i].is<Instruction::Return>())
      before[i].push_back({make_assert(inv, Tag::InvariantExit), false});

  // Group explicit exit edges by target.
  std::map<size_t, std::vector<size_t>> exits_to;
  for (const auto &[u, v] : L.exit_edges) exits_to[v].push_back(u);
  for (const auto &[v, srcs] : exits_to) {
    std::set<size_t> src_set(srcs.begin(), srcs.end());
    bool exclusive = true;
    for (size_t p : g.pred[v])
      if (!src_set.count(p)) exclusive = false;
    if (exclusive) {
      // Every path into v leaves this loop: one assert, taking v's labels.
      before[v].push_back({make_assert(inv, Tag::InvariantExit), true});
      continue;
    }
    // Shared target: treat fallthrough and jump edges separately.
    std::string split_label;
    for (size_t u : srcs) {
      bool fallthrough = (u + 1 == v) && !m.body[u].is<Instruction::Goto>();
      const auto *ig = m.body[u].as<Instruction::IfGoto>();
      bool jumps_to_v = false;
      if (const auto *go = m.body[u].as<Instruction::Goto>()) {
        auto it = g.label_at.find(go->target);
        jumps_to_v = it != g.label_at.end() && it->second == v;
      } else if (ig) {
        auto it = g.label_at.find(ig->target);
        jumps_to_v = it != g.label_at.end() && it->second == v;
      }
      if (fallthrough && !jumps_to_v) {
        // Only the fallthrough from u passes an unlabeled insert before v.
        before[v].push_back({make_assert(inv, Tag::InvariantExit), false});
        continue;
      }
      // Jump edge: route through a split block appended at the end.
      if (split_label.empty()) {
        split_label = names.fresh();
        Instruction a = make_assert(inv, Tag::InvariantExit);
        a.labels.push_back(split_label);
        split_blocks.push_back(a);
        Instruction go;
        go.node = Instruction::Goto{m.body[v].labels.front()};
        split_blocks.push_back(go);
      }
      const std::string &old_label =
          ig && jumps_to_v ? ig->target
                           : m.body[u].as<Instruction::Goto>()->target;
      retarget[u][old_label] = split_label;
      if (fallthrough)  // both edges from u exit: fallthrough needs its own
        before[v].push_back({make_assert(inv, Tag::InvariantExit), false});
    }
  }

  // Rebuild the body applying the collected edits.
  std::vector<Instruction> out;
  out.reserve(n + 4);
  for (size_t i = 0; i < n; ++i) {
    Instruction ins = m.body[i];
    if (auto it = retarget.find(i); it != retarget.end()) {
      if (auto *go = std::get_if<Instruction::Goto>(&ins.node)) {
        if (auto rt = it->second.find(go->target); rt != it->second.end())
          go->target = rt->second;
      } else if (auto *ig = std::get_if<Instruction::IfGoto>(&ins.node)) {
        if (auto rt = it->second.find(ig->target); rt != it->second.end())
          ig->target = rt->second;
      }
    }
    if (auto it = before.find(i); it != before.end()) {
      for (auto &[a, take] : it->second) {
        Instruction copy = a;
        if (take) {
          copy.labels.insert(copy.labels.end(), ins.labels.begin(),
                             ins.labels.end());
          ins.labels.clear();
        }
        out.push_back(std::move(copy));
      }
    }
    out.push_back(std::move(ins));
  }
  for (auto &b : split_blocks) out.push_back(std::move(b));
  m.body = std::move(out);
}

}  // namespace detail

// Expand all loop invariants in a method body.  Loops are processed one
// at a time, innermost first, re-analyzing the control flow after each
// expansion so instruction indices stay consistent.
inline std::vector<Diagnostic> expand_invariants(MethodDecl &m) {
  std::vector<Diagnostic> diags;
  for (int rounds = 0; rounds < 1024; ++rounds) {
    Cfg g = Cfg::build(m);
    LoopAnalysis an = detect_loops_cfg(g);

    // Invariants caught in irreducible cycles cannot be expanded.
    bool l1 = false;
    for (size_t i : an.irreducible) {
      bool covered = false;
      for (const auto &L : an.loops)
        if (L.body.count(i)) covered = true;
      if (!covered && m.body[i].is<Instruction::InvariantStmt>()) {
        diags.push_back({"L1",
                         "loop invariant inside an irreducible cycle in " +
                             m.qualified_name(),
                         {}});
        l1 = true;
      }
    }
    if (l1) return diags;

    // Assign each invariant statement to its innermost enclosing loop
    // (loops are sorted outermost-first, so the last hit is innermost),
    // then expand one loop per round, re-analyzing between rounds.
    std::map<size_t, std::set<size_t>> owned;  // loop index -> inv indices
    long stray = -1;  // invariant outside every loop
    for (size_t i = 0; i < m.body.size(); ++i) {
      if (!m.body[i].is<Instruction::InvariantStmt>()) continue;
      int innermost = -1;
      for (size_t k = 0; k < an.loops.size(); ++k)
        if (an.loops[k].body.count(i)) innermost = static_cast<int>(k);
      if (innermost >= 0)
        owned[static_cast<size_t>(innermost)].insert(i);
      else if (stray < 0)
        stray = static_cast<long>(i);
    }
    if (stray >= 0) {
      // An invariant outside any loop asserts-and-assumes in place.
      size_t i = static_cast<size_t>(stray);
      ExprPtr e = m.body[i].as<Instruction::InvariantStmt>()->expr;
      m.body[i].node = Instruction::AssumeStmt{e};
      Instruction a =
          detail::make_assert(e, Instruction::AssertTag::InvariantHeader);
      a.labels = m.body[i].labels;
      m.body[i].labels.clear();
      m.body.insert(m.body.begin() + stray, std::move(a));
      continue;
    }
    if (owned.empty()) return diags;
    // Innermost loops have the largest index in the outermost-first order.
    auto it = std::prev(owned.end());
    detail::expand_one_loop(m, g, an.loops[it->first], it->second);
  }
  return diags;
}

inline std::vector<Diagnostic> transform_loops(Program &program) {
  std::vector<Diagnostic> diags;
  for (auto &m : program.methods) {
    if (!m.has_body) continue;
    auto d = expand_invariants(m);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  return diags;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_LOOP_TRANSFORM_HPP
