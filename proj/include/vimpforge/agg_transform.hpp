// agg_transform.hpp -- converts aggregable specification regions (predicate
// bodies and the straight-line slices feeding spec statements) into single
// compound expressions via SSA-style substitution.

#ifndef VIMPFORGE_AGG_TRANSFORM_HPP
#define VIMPFORGE_AGG_TRANSFORM_HPP

#include <map>
#include <string>
#include <vector>

#include "vimpforge/expr_util.hpp"
#include "vimpforge/ir.hpp"

namespace vimpforge {

// Folds a straight-line slice of pure local assignments into a
// substitution environment, then applies it to `root`. Reassignments
// shadow correctly because each right-hand side is substituted under the
// environment in force before its own definition (that is the SSA
// renaming, done eagerly). Impure or branching instructions in the slice
// yield diagnostic G1.
inline ExprPtr aggregate_region(const std::vector<Instruction> &slice,
                                const ExprPtr &root,
                                std::vector<Diagnostic> &diags) {
  std::map<std::string, ExprPtr> env;
  for (const auto &ins : slice) {
    const auto *as = ins.as<Instruction::Assign>();
    const ExprPtr *rhs = as ? std::get_if<ExprPtr>(&as->rhs) : nullptr;
    const LvLocal *lhs =
        as && as->lhs ? std::get_if<LvLocal>(&*as->lhs) : nullptr;
    if (!as || !rhs || !lhs || !ins.labels.empty()) {
      Diagnostic d;
      d.code = "G1";
      d.message = "aggregable region contains an impure or branching "
                  "instruction";
      d.pos = ins.pos;
      diags.push_back(std::move(d));
      return root;
    }
    env[lhs->name] = substitute_locals(*rhs, env);
  }
  return substitute_locals(root, env);
}

namespace detail {

// True for `x := e` with a pure expression e and no incoming label: the
// instructions a backward spec slice may absorb.
inline bool slice_step(const Instruction &ins) {
  if (!ins.labels.empty()) return false;
  const auto *as = ins.as<Instruction::Assign>();
  if (!as || !as->lhs) return false;
  return std::holds_alternative<LvLocal>(*as->lhs) &&
         std::holds_alternative<ExprPtr>(as->rhs);
}

inline const ExprPtr *spec_expr(const Instruction &ins) {
  if (const auto *s = ins.as<Instruction::InvariantStmt>()) return &s->expr;
  if (const auto *s = ins.as<Instruction::AssertStmt>()) return &s->expr;
  if (const auto *s = ins.as<Instruction::AssumeStmt>()) return &s->expr;
  return nullptr;
}

inline void set_spec_expr(Instruction &ins, ExprPtr e) {
  if (auto *s = std::get_if<Instruction::InvariantStmt>(&ins.node))
    s->expr = std::move(e);
  else if (auto *s = std::get_if<Instruction::AssertStmt>(&ins.node))
    s->expr = std::move(e);
  else if (auto *s = std::get_if<Instruction::AssumeStmt>(&ins.node))
    s->expr = std::move(e);
}

}  // namespace detail

// Rewrites every spec statement of the method: its expression absorbs the
// maximal straight-line pure-assignment slice ending just before it. The
// feeding assignments stay in place (they are executable code; dead ones
// are harmless), only the spec payload changes.
inline void aggregate_spec_statements(MethodDecl &method,
                                      std::vector<Diagnostic> &diags) {
  for (size_t i = 0; i < method.body.size(); ++i) {
    const ExprPtr *expr = detail::spec_expr(method.body[i]);
    if (!expr) continue;
    // The spec statement's own label does not invalidate the slice; a
    // label on a feeding assignment does.
    size_t begin = i;
    while (begin > 0 && detail::slice_step(method.body[begin - 1])) --begin;
    std::vector<Instruction> slice(method.body.begin() + begin,
                                   method.body.begin() + i);
    ExprPtr agg = aggregate_region(slice, *expr, diags);
    detail::set_spec_expr(method.body[i], agg);
  }
}

// Collapses a predicate body to its single defining expression. Returns
// nullptr (with G1) when the body does not aggregate.
inline ExprPtr aggregate_predicate_body(const MethodDecl &pred,
                                        std::vector<Diagnostic> &diags) {
  if (pred.body.empty()) return nullptr;
  const auto *ret = pred.body.back().as<Instruction::Return>();
  if (!ret || !ret->value) {
    Diagnostic d;
    d.code = "G1";
    d.message = "predicate " + pred.qualified_name() +
                " does not end in a value return";
    d.pos = pred.pos;
    diags.push_back(std::move(d));
    return nullptr;
  }
  std::vector<Instruction> slice(pred.body.begin(), pred.body.end() - 1);
  size_t before = diags.size();
  ExprPtr agg = aggregate_region(slice, ret->value, diags);
  return diags.size() == before ? agg : nullptr;
}

// Whole-program tau_agg: predicate bodies become a single return; spec
// statements absorb their feeding slices.
inline std::vector<Diagnostic> transform_aggregate(Program &program) {
  std::vector<Diagnostic> diags;
  for (auto &m : program.methods) {
    if (m.is_predicate) {
      if (!m.has_body) continue;
      if (ExprPtr agg = aggregate_predicate_body(m, diags)) {
        Instruction ret;
        ret.node = Instruction::Return{agg};
        ret.pos = m.body.back().pos;
        m.body.clear();
        m.body.push_back(std::move(ret));
      }
      continue;
    }
    aggregate_spec_statements(m, diags);
  }
  return diags;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_AGG_TRANSFORM_HPP
