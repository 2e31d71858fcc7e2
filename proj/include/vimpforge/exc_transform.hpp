// exc_transform.hpp -- rewrites implicit exceptional control flow (traps,
// throws, calls, potentially excepting instructions) into explicit
// assignments to @thrown plus jumps, deleting the trap table.

#ifndef VIMPFORGE_EXC_TRANSFORM_HPP
#define VIMPFORGE_EXC_TRANSFORM_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vimpforge/expr_util.hpp"
#include "vimpforge/ir.hpp"

namespace vimpforge {

struct ExcFlags {
  bool implicit_null = false;
  bool implicit_bounds = false;
};

namespace detail {

// Fresh-name supply for one method: labels skip$N / normal$N and exception
// temporaries exc$N. `$`-suffixed names are reserved for the transforms,
// but a counter scan still guards against collisions in re-fed dumps.
class FreshNames {
 public:
  explicit FreshNames(const MethodDecl &m) {
    for (const auto &ins : m.body)
      for (const auto &l : ins.labels) taken_.insert(l);
    for (const auto &l : m.locals) taken_.insert(l.name);
    for (const auto &p : m.params) taken_.insert(p.name);
  }
  std::string fresh(const std::string &stem) {
    std::string name;
    do {
      name = stem + "$" + std::to_string(counter_++);
    } while (taken_.count(name));
    taken_.insert(name);
    return name;
  }

 private:
  std::set<std::string> taken_;
  int counter_ = 0;
};

inline Instruction instr(Instruction::Node n) {
  Instruction i;
  i.node = std::move(n);
  return i;
}

inline ExprPtr thrown_is_void() {
  return build::binary(BinOp::Eq, build::local(kThrownVar),
                       build::mk(Expression::VoidConst{}));
}

}  // namespace detail

// The dispatch chain of lower_throw after @thrown is set: one
// instanceof-test per enclosing trap, in table order, then `return` to
// propagate to the caller. Labels attach to the front of whatever follows
// each emitted block.
inline void emit_dispatch_chain(const std::vector<const Trap *> &traps,
                                detail::FreshNames &names,
                                std::vector<Instruction> &out,
                                std::vector<std::string> &pending_labels) {
  using namespace build;
  auto attach = [&](Instruction ins) {
    for (auto &l : pending_labels) ins.labels.push_back(l);
    pending_labels.clear();
    out.push_back(std::move(ins));
  };
  for (const Trap *t : traps) {
    std::string skip = names.fresh("skip");
    attach(detail::instr(Instruction::IfGoto{
        not_(mk(Expression::InstanceOf{local(kThrownVar),
                t->exception_type})),
        skip}));
    attach(detail::instr(Instruction::Goto{t->handler}));
    pending_labels.push_back(skip);
  }
  attach(detail::instr(Instruction::Return{nullptr}));
}

// tau_exc(throw e) under traps t1..tn:
//   @thrown := e;
//   if !(@thrown instanceof E1) goto skip$a; goto h1; skip$a: ...
//   return;
inline std::vector<Instruction> lower_throw(
    const std::string &local_name, const std::vector<const Trap *> &traps,
    detail::FreshNames &names) {
  using namespace build;
  std::vector<Instruction> out;
  std::vector<std::string> pending;
  if (local_name != kThrownVar) {
    out.push_back(detail::instr(Instruction::Assign{
        LvLocal{kThrownVar}, ExprPtr(local(local_name))}));
  }
  emit_dispatch_chain(traps, names, out, pending);
  return out;
}

namespace detail {

// One PEI guard: `if !F goto normal$k;` fresh exception of class exc_class;
// rethrow via the dispatch chain; `normal$k:` falls onto the next emitted
// instruction.
inline void emit_pei_guard(const ExprPtr &failure,
                           const std::string &exc_class,
                           const std::vector<const Trap *> &traps,
                           FreshNames &names, MethodDecl &method,
                           std::vector<Instruction> &out,
                           std::vector<std::string> &pending_labels) {
  using namespace build;
  auto attach = [&](Instruction ins) {
    for (auto &l : pending_labels) ins.labels.push_back(l);
    pending_labels.clear();
    out.push_back(std::move(ins));
  };
  std::string normal = names.fresh("normal");
  attach(detail::instr(Instruction::IfGoto{not_(failure), normal}));
  std::string tmp = names.fresh("exc");
  method.locals.push_back({tmp, TypeExpr::ref(exc_class), false});
  attach(detail::instr(
      Instruction::Assign{LvLocal{tmp}, NewObject{exc_class}}));
  for (Instruction &i : lower_throw(tmp, traps, names)) attach(std::move(i));
  pending_labels.push_back(normal);
}

inline bool checks_null(const MethodDecl &m, const ExcFlags &f) {
  if (m.check_null == CheckOverride::On) return true;
  if (m.check_null == CheckOverride::Off) return false;
  return f.implicit_null;
}
inline bool checks_bounds(const MethodDecl &m, const ExcFlags &f) {
  if (m.check_bounds == CheckOverride::On) return true;
  if (m.check_bounds == CheckOverride::Off) return false;
  return f.implicit_bounds;
}

inline ExprPtr null_failure(const ExprPtr &target) {
  return build::binary(BinOp::Eq, target,
                       build::mk(Expression::NullConst{}));
}

// `!(0 <= i && i < a.length)` -- the literal failure condition of the
// bounds rule.
inline ExprPtr bounds_failure(const ExprPtr &array, const ExprPtr &index) {
  using namespace build;
  return not_(binary(BinOp::And,
                     binary(BinOp::Le, int_const(0), index),
                     binary(BinOp::Lt, index,
                            mk(Expression::ArrayLength{array}))));
}

}  // namespace detail

// Whole-method tau_exc. Mutates the method in place; returns diagnostics
// (E1: a trap handler whose entry is not `e := caught`).
inline std::vector<Diagnostic> transform_body(MethodDecl &method,
                                              const ExcFlags &flags,
                                              const Program &program) {
  std::vector<Diagnostic> diags;
  if (!method.has_body) {
    method.traps.clear();
    if (!method.contract) method.contract = Contract{};
    method.contract->requires_clauses.insert(
        method.contract->requires_clauses.begin(),
        detail::thrown_is_void());
    return diags;
  }
  (void)program;

  std::map<std::string, size_t> label_at;
  for (size_t i = 0; i < method.body.size(); ++i)
    for (const auto &l : method.body[i].labels) label_at[l] = i;

  // Handlers must start by binding the caught exception.
  for (const auto &t : method.traps) {
    auto h = label_at.find(t.handler);
    if (h == label_at.end()) continue;  // validation already reported it
    if (!method.body[h->second].is<Instruction::CaughtBind>()) {
      Diagnostic d;
      d.code = "E1";
      d.message = method.qualified_name() + ": handler " + t.handler +
                  " does not begin with an exception binding";
      d.pos = method.body[h->second].pos;
      diags.push_back(std::move(d));
    }
  }
  if (!diags.empty()) return diags;

  // Traps whose [begin, end) covers instruction i, in table order.
  auto traps_at = [&](size_t i) {
    std::vector<const Trap *> out;
    for (const auto &t : method.traps) {
      auto b = label_at.find(t.begin);
      auto e = label_at.find(t.end);
      if (b == label_at.end() || e == label_at.end()) continue;
      if (i >= b->second && i < e->second) out.push_back(&t);
    }
    return out;
  };

  detail::FreshNames names(method);
  bool null_on = detail::checks_null(method, flags);
  bool bounds_on = detail::checks_bounds(method, flags);

  std::vector<Instruction> out;
  // Labels waiting to be attached to the next emitted instruction; they
  // survive across source instructions (a post-call skip label lands on
  // the continuation's first lowered instruction).
  std::vector<std::string> pending;
  for (size_t i = 0; i < method.body.size(); ++i) {
    const Instruction ins = method.body[i];
    for (const auto &l : ins.labels) pending.push_back(l);
    auto attach = [&](Instruction x) {
      x.labels.insert(x.labels.begin(), pending.begin(), pending.end());
      pending.clear();
      out.push_back(std::move(x));
    };
    std::vector<const Trap *> traps = traps_at(i);
    using I = Instruction;

    // `a.length` may sit inside a compound executable expression (a guard
    // condition, return value, allocation length, or arithmetic rhs); it
    // still dereferences a, so each distinct target needs a null guard.
    auto guard_embedded_lengths = [&](const ExprPtr &e) {
      if (!null_on || !e) return;
      std::vector<ExprPtr> targets;
      for_each_subexpr(e, [&](const ExprPtr &sub) {
        const auto *al = sub->as<Expression::ArrayLength>();
        if (!al) return;
        for (const auto &seen : targets)
          if (expr_equal(seen, al->target)) return;
        targets.push_back(al->target);
      });
      for (const auto &t : targets)
        detail::emit_pei_guard(detail::null_failure(t),
                               kNullPointerException, traps, names, method,
                               out, pending);
    };

    if (const auto *cb = ins.as<I::CaughtBind>()) {
      // e := @thrown; @thrown := void  -- the exception is now handled.
      attach(detail::instr(I::Assign{LvLocal{cb->local},
                                     ExprPtr(build::local(kThrownVar))}));
      attach(detail::instr(
          I::Assign{LvLocal{kThrownVar},
                    ExprPtr(build::mk(Expression::VoidConst{}))}));
      continue;
    }

    if (const auto *th = ins.as<I::Throw>()) {
      if (null_on && th->local != kThrownVar) {
        // athrow on null raises NullPointerException instead.
        detail::emit_pei_guard(
            detail::null_failure(build::local(th->local)),
            kNullPointerException, traps, names, method, out, pending);
      }
      for (Instruction &x : lower_throw(th->local, traps, names))
        attach(std::move(x));
      continue;
    }

    if (const auto *as = ins.as<I::Assign>()) {
      // PEI guards for the single heap access this instruction can hold.
      ExprPtr null_target, arr, idx;
      if (const auto *e = std::get_if<ExprPtr>(&as->rhs)) {
        if (const auto *fr = (*e)->as<Expression::FieldRead>()) {
          null_target = fr->target;
        } else if (const auto *ar = (*e)->as<Expression::ArrayRead>()) {
          null_target = ar->target;
          arr = ar->target;
          idx = ar->index;
        } else if (const auto *al = (*e)->as<Expression::ArrayLength>()) {
          null_target = al->target;
        } else {
          guard_embedded_lengths(*e);
        }
      } else if (const auto *na = std::get_if<NewArray>(&as->rhs)) {
        guard_embedded_lengths(na->length);
      } else if (const auto *iv = std::get_if<Invoke>(&as->rhs)) {
        const auto *l = iv->receiver->as<Expression::Local>();
        if (!l || l->name != "this") null_target = iv->receiver;
      }
      if (as->lhs) {
        if (const auto *lf = std::get_if<LvField>(&*as->lhs)) {
          null_target = lf->target;
        } else if (const auto *la = std::get_if<LvArray>(&*as->lhs)) {
          null_target = la->target;
          arr = la->target;
          idx = la->index;
        }
      }
      bool is_this = false;
      if (null_target)
        if (const auto *l = null_target->as<Expression::Local>())
          is_this = l->name == "this";
      if (null_on && null_target && !is_this)
        detail::emit_pei_guard(detail::null_failure(null_target),
                               kNullPointerException, traps, names, method,
                               out, pending);
      if (bounds_on && arr)
        detail::emit_pei_guard(detail::bounds_failure(arr, idx),
                               kIndexOutOfBoundsException, traps, names,
                               method, out, pending);

      Instruction bare = ins;
      bare.labels.clear();
      attach(std::move(bare));  // the original instruction

      if (std::holds_alternative<Invoke>(as->rhs)) {
        // Post-call propagation: if @thrown == void goto skip$k; then the
        // dispatch chain (the @thrown := e assignment is elided -- it
        // would be a self-assignment). The skip label waits for the
        // continuation's first instruction.
        std::string skip = names.fresh("skip");
        out.push_back(detail::instr(
            Instruction::IfGoto{detail::thrown_is_void(), skip}));
        std::vector<std::string> chain_pending;
        emit_dispatch_chain(traps, names, out, chain_pending);
        pending.push_back(skip);
      }
      continue;
    }

    if (const auto *ig = ins.as<I::IfGoto>()) {
      guard_embedded_lengths(ig->cond);
    } else if (const auto *rt = ins.as<I::Return>()) {
      guard_embedded_lengths(rt->value);
    }
    {
      Instruction bare = ins;
      bare.labels.clear();
      attach(std::move(bare));
    }
  }
  if (!pending.empty()) {
    Instruction nop = detail::instr(Instruction::Nop{});
    nop.labels = pending;
    out.push_back(std::move(nop));
  }

  method.body = std::move(out);
  method.traps.clear();

  // Entry assumption: the caller's pending-exception register is clear.
  if (!method.contract) method.contract = Contract{};
  method.contract->requires_clauses.insert(
      method.contract->requires_clauses.begin(), detail::thrown_is_void());
  return diags;
}

// Whole-program tau_exc. Predicates stay untouched: they are pure,
// branchless, and compiled to total functions later.
inline std::vector<Diagnostic> transform_exceptions(Program &program,
                                                    const ExcFlags &flags) {
  std::vector<Diagnostic> diags;
  for (auto &m : program.methods) {
    if (m.is_predicate) continue;
    auto d = transform_body(m, flags, program);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  return diags;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_EXC_TRANSFORM_HPP
