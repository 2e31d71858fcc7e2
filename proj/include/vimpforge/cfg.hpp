// cfg.hpp -- instruction-level control-flow graph, dominators, and
// natural-loop detection for unstructured method bodies.

#ifndef VIMPFORGE_CFG_HPP
#define VIMPFORGE_CFG_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vimpforge/ir.hpp"

namespace vimpforge {

// One node per instruction; edges follow the explicit control flow only
// (run after tau_exc, traps contribute nothing).
struct Cfg {
  std::vector<std::vector<size_t>> succ;
  std::vector<std::vector<size_t>> pred;
  std::map<std::string, size_t> label_at;

  static Cfg build(const MethodDecl &m) {
    Cfg g;
    size_t n = m.body.size();
    g.succ.assign(n, {});
    g.pred.assign(n, {});
    for (size_t i = 0; i < n; ++i)
      for (const auto &l : m.body[i].labels) g.label_at[l] = i;
    auto edge = [&](size_t u, size_t v) {
      g.succ[u].push_back(v);
      g.pred[v].push_back(u);
    };
    for (size_t i = 0; i < n; ++i) {
      const Instruction &ins = m.body[i];
      using I = Instruction;
      if (const auto *go = ins.as<I::Goto>()) {
        auto it = g.label_at.find(go->target);
        if (it != g.label_at.end()) edge(i, it->second);
      } else if (const auto *ig = ins.as<I::IfGoto>()) {
        auto it = g.label_at.find(ig->target);
        if (it != g.label_at.end()) edge(i, it->second);
        if (i + 1 < n) edge(i, i + 1);
      } else if (ins.is<I::Return>() || ins.is<I::Throw>()) {
        // terminators
      } else if (i + 1 < n) {
        edge(i, i + 1);
      }
    }
    return g;
  }

  size_t size() const { return succ.size(); }

  std::vector<bool> reachable() const {
    std::vector<bool> seen(size(), false);
    if (size() == 0) return seen;
    std::vector<size_t> stack = {0};
    seen[0] = true;
    while (!stack.empty()) {
      size_t u = stack.back();
      stack.pop_back();
      for (size_t v : succ[u])
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
    }
    return seen;
  }

  // Iterative dominator computation; unreachable nodes dominate nothing
  // and are skipped by callers.
  std::vector<std::set<size_t>> dominators() const {
    size_t n = size();
    std::vector<std::set<size_t>> dom(n);
    if (n == 0) return dom;
    std::vector<bool> reach = reachable();
    std::set<size_t> all;
    for (size_t i = 0; i < n; ++i)
      if (reach[i]) all.insert(i);
    for (size_t i = 0; i < n; ++i) dom[i] = reach[i] ? all : std::set<size_t>{};
    dom[0] = {0};
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 1; i < n; ++i) {
        if (!reach[i]) continue;
        std::set<size_t> meet;
        bool first = true;
        for (size_t p : pred[i]) {
          if (!reach[p]) continue;
          if (first) {
            meet = dom[p];
            first = false;
          } else {
            std::set<size_t> tmp;
            std::set_intersection(meet.begin(), meet.end(), dom[p].begin(),
                                  dom[p].end(),
                                  std::inserter(tmp, tmp.begin()));
            meet = std::move(tmp);
          }
        }
        meet.insert(i);
        if (meet != dom[i]) {
          dom[i] = std::move(meet);
          changed = true;
        }
      }
    }
    return dom;
  }
};

struct LoopInfo {
  size_t header = 0;
  std::set<size_t> body;
  std::vector<std::pair<size_t, size_t>> back_edges;
  std::vector<std::pair<size_t, size_t>> exit_edges;  // body -> non-body
};

struct LoopAnalysis {
  std::vector<LoopInfo> loops;  // outermost-first (body size descending)
  // Nodes in irreducible cycles (multi-entry strongly connected regions
  // not accounted for by any natural loop).
  std::set<size_t> irreducible;
};

inline LoopAnalysis detect_loops_cfg(const Cfg &g) {
  LoopAnalysis out;
  auto dom = g.dominators();
  std::vector<bool> reach = g.reachable();
  std::map<size_t, LoopInfo> by_header;
  for (size_t u = 0; u < g.size(); ++u) {
    if (!reach[u]) continue;
    for (size_t h : g.succ[u]) {
      if (!dom[u].count(h)) continue;  // not a back edge
      LoopInfo &L = by_header[h];
      L.header = h;
      L.back_edges.push_back({u, h});
      // Natural loop: everything reaching u backwards without passing h.
      L.body.insert(h);
      std::vector<size_t> stack;
      if (!L.body.count(u)) {
        L.body.insert(u);
        stack.push_back(u);
      }
      while (!stack.empty()) {
        size_t x = stack.back();
        stack.pop_back();
        for (size_t p : g.pred[x]) {
          if (!reach[p] || L.body.count(p)) continue;
          L.body.insert(p);
          stack.push_back(p);
        }
      }
    }
  }
  for (auto &[h, L] : by_header) {
    for (size_t x : L.body)
      for (size_t s : g.succ[x])
        if (!L.body.count(s)) L.exit_edges.push_back({x, s});
    out.loops.push_back(std::move(L));
  }
  std::sort(out.loops.begin(), out.loops.end(),
            [](const LoopInfo &a, const LoopInfo &b) {
              if (a.body.size() != b.body.size())
                return a.body.size() > b.body.size();
              return a.header < b.header;
            });

  // Irreducibility: in a reducible graph every node on a cycle belongs to
  // the natural loop of some back edge. Cyclic nodes left uncovered sit in
  // multi-entry regions, whose cycles have no dominating header.
  size_t n = g.size();
  std::vector<std::set<size_t>> reaches(n);
  for (size_t i = 0; i < n; ++i) {
    if (!reach[i]) continue;
    std::vector<size_t> stack = {i};
    while (!stack.empty()) {
      size_t x = stack.back();
      stack.pop_back();
      for (size_t s : g.succ[x])
        if (reaches[i].insert(s).second) stack.push_back(s);
    }
  }
  for (size_t x = 0; x < n; ++x) {
    if (!reach[x] || !reaches[x].count(x)) continue;  // not on a cycle
    bool covered = false;
    for (const LoopInfo &L : out.loops)
      if (L.body.count(x)) covered = true;
    if (!covered) out.irreducible.insert(x);
  }
  return out;
}

inline LoopAnalysis detect_loops(const MethodDecl &m) {
  return detect_loops_cfg(Cfg::build(m));
}

}  // namespace vimpforge

#endif  // VIMPFORGE_CFG_HPP
