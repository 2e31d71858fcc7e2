// validate.hpp -- structural validation of parsed programs. Diagnostics are
// the result; validation never throws on malformed (but parseable) input.

#ifndef VIMPFORGE_VALIDATE_HPP
#define VIMPFORGE_VALIDATE_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vimpforge/expr_util.hpp"
#include "vimpforge/ir.hpp"

namespace vimpforge {

namespace detail {

// bblib operator names that survive as applications in expressions until
// expression translation maps them to native operators.
inline bool is_bblib_operator(const std::string &name) {
  static const std::set<std::string> ops = {
      "lt",  "lte",     "eq",          "neq",    "gte",     "gt",
      "not", "implies", "conditional", "forall", "exists"};
  return ops.count(name) > 0;
}

inline bool type_valid(const TypeExpr &t, const Program &p) {
  switch (t.kind) {
    case TypeExpr::Kind::Ref: return p.find_class(t.class_name) != nullptr;
    case TypeExpr::Kind::Array:
      return t.elem && t.elem->kind != TypeExpr::Kind::Array &&
             t.elem->kind != TypeExpr::Kind::VoidMarker &&
             type_valid(*t.elem, p);
    default: return true;
  }
}

}  // namespace detail

inline std::vector<Diagnostic> validate_program(const Program &program) {
  std::vector<Diagnostic> diags;
  auto report = [&](std::string code, std::string msg, SourcePos pos = {}) {
    diags.push_back({std::move(code), std::move(msg), pos});
  };

  // Class declarations.
  std::set<std::string> class_names;
  for (const auto &c : program.classes) {
    if (!class_names.insert(c.name).second)
      report("dup-class", "duplicate class " + c.name, c.pos);
    for (const auto &f : c.fields)
      if (!detail::type_valid(f.type, program))
        report("bad-type", "invalid field type for " + c.name + "." + f.name,
               c.pos);
  }
  for (const auto &c : program.classes) {
    if (c.parent && !program.find_class(*c.parent))
      report("unknown-class", "unknown parent class " + *c.parent + " of " +
                                  c.name, c.pos);
  }
  // Acyclicity of the extends relation.
  for (const auto &c : program.classes) {
    std::set<std::string> seen{c.name};
    const ClassDecl *cur = &c;
    while (cur->parent) {
      const ClassDecl *next = program.find_class(*cur->parent);
      if (!next) break;
      if (!seen.insert(next->name).second) {
        report("cyclic-hierarchy", "cyclic hierarchy involving " + c.name,
               c.pos);
        break;
      }
      cur = next;
    }
  }
  bool hierarchy_ok = diags.empty();

  std::set<std::string> method_keys;
  for (const auto &m : program.methods) {
    const std::string qn = m.qualified_name();
    if (!method_keys.insert(qn).second)
      report("dup-method", "duplicate method " + qn, m.pos);
    if (!program.find_class(m.owner))
      report("unknown-class", "unknown owner class " + m.owner + " of " + qn,
             m.pos);

    std::set<std::string> var_names;
    for (const auto &p : m.params) {
      if (!var_names.insert(p.name).second)
        report("dup-var", qn + ": duplicate parameter " + p.name, m.pos);
      if (!detail::type_valid(p.type, program))
        report("bad-type", qn + ": invalid type of parameter " + p.name,
               m.pos);
    }
    for (const auto &l : m.locals) {
      if (!var_names.insert(l.name).second)
        report("dup-var", qn + ": duplicate local " + l.name, m.pos);
      if (!detail::type_valid(l.type, program))
        report("bad-type", qn + ": invalid type of local " + l.name, m.pos);
    }
    if (m.return_type && !detail::type_valid(*m.return_type, program))
      report("bad-type", qn + ": invalid return type", m.pos);

    // Annotations.
    for (const auto &a : m.annotations) {
      auto check_pred = [&](const std::string &name) {
        const MethodDecl *p = resolve_method(program, m.owner, name);
        if (!p || !p->is_predicate)
          report("unknown-predicate",
                 qn + ": annotation names unknown predicate " + name, a.pos);
      };
      switch (a.kind) {
        case Annotation::Kind::Require:
        case Annotation::Kind::Ensure:
          check_pred(a.name);
          break;
        case Annotation::Kind::Raise:
          if (!program.find_class(a.name) ||
              (hierarchy_ok && !is_exception_class(a.name, program)))
            report("bad-exception",
                   qn + ": @raise names non-exception class " + a.name, a.pos);
          check_pred(a.when);
          break;
        case Annotation::Kind::ReturnWhen:
          if (!a.when.empty()) check_pred(a.when);
          break;
        case Annotation::Kind::Attach:
          if (!program.find_class(a.name))
            report("unknown-class",
                   qn + ": @attach names unknown class " + a.name, a.pos);
          break;
        case Annotation::Kind::Predicate:
          break;
      }
    }

    if (!m.has_body) continue;

    // Label table.
    std::map<std::string, size_t> label_at;
    for (size_t i = 0; i < m.body.size(); ++i)
      for (const auto &lbl : m.body[i].labels)
        if (!label_at.emplace(lbl, i).second)
          report("dup-label", qn + ": duplicate label " + lbl, m.body[i].pos);
    auto has_label = [&](const std::string &l) {
      return label_at.count(l) > 0;
    };

    std::set<std::string> known_locals;
    for (const auto &p : m.params) known_locals.insert(p.name);
    for (const auto &l : m.locals) known_locals.insert(l.name);
    known_locals.insert("this");
    known_locals.insert(kThrownVar);

    auto local_type = [&](const std::string &name) -> const TypeExpr * {
      for (const auto &p : m.params)
        if (p.name == name) return &p.type;
      for (const auto &l : m.locals)
        if (l.name == name) return &l.type;
      return nullptr;
    };

    // Expression well-formedness shared by executable and spec positions.
    std::function<void(const ExprPtr &, bool, std::set<std::string>)>
        check_expr = [&](const ExprPtr &e, bool spec_position,
                         std::set<std::string> bound) {
          if (!e) return;
          using E = Expression;
          if (const auto *l = e->as<E::Local>()) {
            if (!known_locals.count(l->name) && !bound.count(l->name) &&
                l->name != kResultBinder && l->name != kExcBinder)
              report("unknown-local", qn + ": unknown local " + l->name,
                     e->pos);
            return;
          }
          if (const auto *q = e->as<E::Quantifier>()) {
            if (bound.count(q->var))
              report("shadowed-binder",
                     qn + ": quantifier binder " + q->var +
                         " shadows an enclosing binder", e->pos);
            if (!detail::type_valid(q->var_type, program))
              report("bad-type", qn + ": invalid quantifier binder type",
                     e->pos);
            auto inner = bound;
            inner.insert(q->var);
            check_expr(q->body, spec_position, std::move(inner));
            return;
          }
          if (const auto *io = e->as<E::InstanceOf>()) {
            if (!program.find_class(io->class_name))
              report("unknown-class",
                     qn + ": instanceof names unknown class " + io->class_name,
                     e->pos);
            check_expr(io->arg, spec_position, bound);
            return;
          }
          if (const auto *o = e->as<E::Old>()) {
            if (!spec_position)
              report("old-outside-spec",
                     qn + ": old() outside a specification position", e->pos);
            check_expr(o->arg, spec_position, bound);
            return;
          }
          if (const auto *pa = e->as<E::PredicateApply>()) {
            if (!detail::is_bblib_operator(pa->name)) {
              const MethodDecl *p = resolve_method(program, m.owner, pa->name);
              if (!p || !p->is_predicate)
                report(spec_position ? "unknown-predicate" : "impure-expr",
                       qn + ": call to " + pa->name +
                           (spec_position ? " does not resolve to a predicate"
                                          : " in executable expression"),
                       e->pos);
            }
            for (const auto &a : pa->args) check_expr(a, spec_position, bound);
            return;
          }
          std::visit(
              [&](const auto &x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, E::FieldRead>) {
                  check_expr(x.target, spec_position, bound);
                } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
                  check_expr(x.target, spec_position, bound);
                  check_expr(x.index, spec_position, bound);
                } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
                  check_expr(x.target, spec_position, bound);
                } else if constexpr (std::is_same_v<T, E::Unary>) {
                  check_expr(x.arg, spec_position, bound);
                } else if constexpr (std::is_same_v<T, E::Binary>) {
                  check_expr(x.left, spec_position, bound);
                  check_expr(x.right, spec_position, bound);
                } else if constexpr (std::is_same_v<T, E::Conditional>) {
                  check_expr(x.cond, spec_position, bound);
                  check_expr(x.then_expr, spec_position, bound);
                  check_expr(x.else_expr, spec_position, bound);
                } else if constexpr (std::is_same_v<T, E::IsVoid>) {
                  check_expr(x.arg, spec_position, bound);
                }
              },
              e->node);
        };

    // Executable expressions stay in three-address normal form: heap
    // accesses only as a whole assignment rhs with atomic operands.
    auto check_exec_expr = [&](const ExprPtr &e, bool allow_heap_top) {
      check_expr(e, m.is_predicate, {});
      if (!e) return;
      using E = Expression;
      if (allow_heap_top) {
        if (const auto *fr = e->as<E::FieldRead>()) {
          if (is_atom(fr->target)) return;
        } else if (const auto *ar = e->as<E::ArrayRead>()) {
          if (is_atom(ar->target) && is_atom(ar->index)) return;
        } else if (const auto *al = e->as<E::ArrayLength>()) {
          if (is_atom(al->target)) return;
        }
      }
      // a.length with an atomic target may appear as an operand (bounds
      // guards test `0 <= i && i < a.length` in one condition).
      bool bad_heap = false;
      for_each_subexpr(e, [&](const ExprPtr &sub) {
        using E2 = Expression;
        if (sub->is<E2::FieldRead>() || sub->is<E2::ArrayRead>())
          bad_heap = true;
        if (const auto *al2 = sub->as<E2::ArrayLength>())
          if (!is_atom(al2->target)) bad_heap = true;
      });
      if (!m.is_predicate && bad_heap)
        report("three-address",
               qn + ": heap access must be a whole three-address rhs",
               e->pos);
    };

    for (size_t i = 0; i < m.body.size(); ++i) {
      const Instruction &ins = m.body[i];
      using I = Instruction;
      if (const auto *as = ins.as<I::Assign>()) {
        if (as->lhs) {
          if (const auto *lf = std::get_if<LvField>(&*as->lhs)) {
            check_exec_expr(lf->target, false);
            if (!is_atom(lf->target))
              report("three-address", qn + ": field store target must be atomic",
                     ins.pos);
          } else if (const auto *la = std::get_if<LvArray>(&*as->lhs)) {
            check_exec_expr(la->target, false);
            check_exec_expr(la->index, false);
            if (!is_atom(la->target) || !is_atom(la->index))
              report("three-address",
                     qn + ": array store target and index must be atomic",
                     ins.pos);
          } else {
            const auto &ll = std::get<LvLocal>(*as->lhs);
            if (!known_locals.count(ll.name))
              report("unknown-local", qn + ": unknown local " + ll.name,
                     ins.pos);
          }
        }
        if (const auto *e = std::get_if<ExprPtr>(&as->rhs)) {
          check_exec_expr(*e, true);
        } else if (const auto *no = std::get_if<NewObject>(&as->rhs)) {
          if (!program.find_class(no->class_name))
            report("unknown-class",
                   qn + ": new of unknown class " + no->class_name, ins.pos);
        } else if (const auto *na = std::get_if<NewArray>(&as->rhs)) {
          if (!detail::type_valid(na->elem, program) ||
              na->elem.kind == TypeExpr::Kind::Array)
            report("bad-type", qn + ": invalid array element type", ins.pos);
          check_exec_expr(na->length, false);
        } else if (const auto *iv = std::get_if<Invoke>(&as->rhs)) {
          check_exec_expr(iv->receiver, false);
          if (!is_atom(iv->receiver))
            report("three-address", qn + ": call receiver must be atomic",
                   ins.pos);
          for (const auto &a : iv->args) {
            check_exec_expr(a, false);
            if (!is_atom(a))
              report("three-address", qn + ": call argument must be atomic",
                     ins.pos);
          }
          // Resolution by the receiver's declared static type.
          const TypeExpr *rt = nullptr;
          if (const auto *l = iv->receiver->as<Expression::Local>())
            rt = l->name == "this" ? nullptr : local_type(l->name);
          std::string recv_class =
              rt && rt->is_ref() ? rt->class_name : m.owner;
          if (const auto *l = iv->receiver->as<Expression::Local>();
              l && l->name != "this" && (!rt || !rt->is_ref())) {
            report("bad-type", qn + ": call receiver " + l->name +
                                   " has no reference type", ins.pos);
          } else if (!resolve_method(program, recv_class, iv->method)) {
            report("unknown-method",
                   qn + ": call to unknown method " + iv->method + " on " +
                       recv_class, ins.pos);
          }
        }
      } else if (const auto *ig = ins.as<I::IfGoto>()) {
        check_exec_expr(ig->cond, false);
        if (!has_label(ig->target))
          report("unknown-label", qn + ": unknown label " + ig->target,
                 ins.pos);
      } else if (const auto *g = ins.as<I::Goto>()) {
        if (!has_label(g->target))
          report("unknown-label", qn + ": unknown label " + g->target,
                 ins.pos);
      } else if (const auto *r = ins.as<I::Return>()) {
        if (r->value) check_exec_expr(r->value, false);
      } else if (const auto *t = ins.as<I::Throw>()) {
        const TypeExpr *lt = local_type(t->local);
        bool ok = t->local == kThrownVar ||
                  (lt && lt->is_ref() && hierarchy_ok &&
                   program.find_class(lt->class_name) &&
                   is_exception_class(lt->class_name, program));
        if (!ok)
          report("bad-throw",
                 qn + ": throw operand " + t->local +
                     " is not a Throwable-typed local", ins.pos);
      } else if (const auto *cb = ins.as<I::CaughtBind>()) {
        if (!known_locals.count(cb->local))
          report("unknown-local", qn + ": unknown local " + cb->local,
                 ins.pos);
        bool at_handler_entry = false;
        for (const auto &tr : m.traps) {
          auto it = label_at.find(tr.handler);
          if (it != label_at.end() && it->second == i) at_handler_entry = true;
        }
        if (!at_handler_entry)
          report("caught-outside-handler",
                 qn + ": caught binding outside a trap handler entry",
                 ins.pos);
      } else if (const auto *sp = ins.as<I::InvariantStmt>()) {
        check_expr(sp->expr, true, {});
      } else if (const auto *sa = ins.as<I::AssertStmt>()) {
        check_expr(sa->expr, true, {});
      } else if (const auto *su = ins.as<I::AssumeStmt>()) {
        check_expr(su->expr, true, {});
      }
    }

    // Every control path must end in Return or Throw: no fallthrough past
    // the last instruction.
    if (m.body.empty()) {
      if (!m.is_void())
        report("missing-return", qn + ": empty body of non-void method",
               m.pos);
      else
        report("missing-return", qn + ": body may fall off the end", m.pos);
    } else {
      const Instruction &last = m.body.back();
      using I = Instruction;
      if (!last.is<I::Return>() && !last.is<I::Throw>() && !last.is<I::Goto>())
        report("missing-return", qn + ": body may fall off the end", last.pos);
    }

    // Traps.
    for (const auto &tr : m.traps) {
      auto b = label_at.find(tr.begin);
      auto e = label_at.find(tr.end);
      auto h = label_at.find(tr.handler);
      if (b == label_at.end())
        report("unknown-label", qn + ": unknown trap begin label " + tr.begin,
               tr.pos);
      if (e == label_at.end())
        report("unknown-label", qn + ": unknown trap end label " + tr.end,
               tr.pos);
      if (h == label_at.end())
        report("unknown-label", qn + ": unknown label " + tr.handler, tr.pos);
      if (b != label_at.end() && e != label_at.end()) {
        if (b->second >= e->second)
          report("empty-trap", qn + ": trap range [" + tr.begin + ", " +
                                   tr.end + ") is empty", tr.pos);
        else if (h != label_at.end() && h->second >= b->second &&
                 h->second < e->second)
          report("handler-in-range",
                 qn + ": trap handler " + tr.handler + " lies inside the "
                 "guarded range", tr.pos);
      }
      if (!program.find_class(tr.exception_type) ||
          (hierarchy_ok && !is_exception_class(tr.exception_type, program)))
        report("bad-exception",
               qn + ": trap catches non-exception class " + tr.exception_type,
               tr.pos);
    }
  }

  return diags;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_VALIDATE_HPP
