// spec_frontend.hpp -- resolves annotations into contracts: predicate
// well-formedness checking, shorthand desugaring, and contract attachment
// across classes.

#ifndef VIMPFORGE_SPEC_FRONTEND_HPP
#define VIMPFORGE_SPEC_FRONTEND_HPP

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vimpforge/expr_util.hpp"
#include "vimpforge/ir.hpp"
#include "vimpforge/validate.hpp"

namespace vimpforge {

namespace detail {

inline void spec_diag(std::vector<Diagnostic> &out, std::string code,
                      std::string msg, SourcePos pos = {}) {
  Diagnostic d;
  d.code = std::move(code);
  d.message = std::move(msg);
  d.pos = pos;
  out.push_back(std::move(d));
}

// Resolves a predicate by bare name against the owner hierarchy of
// `context_owner`.
inline const MethodDecl *resolve_predicate(const Program &p,
                                           const std::string &context_owner,
                                           const std::string &name) {
  const MethodDecl *m = resolve_method(p, context_owner, name);
  return m && m->is_predicate ? m : nullptr;
}

inline bool is_exception_type(const Program &p, const TypeExpr &t) {
  return t.is_ref() && p.find_class(t.class_name) &&
         subtype_of(t.class_name, kThrowable, p);
}

}  // namespace detail

// How a predicate's parameter list relates to the specified method's:
// the method's parameters as a prefix, then optionally a trailing result
// binder (matching the return type) and a trailing Throwable-typed exc
// binder.
struct PredicateBinders {
  bool ok = false;
  bool has_result = false;
  bool has_exc = false;
};

inline PredicateBinders match_predicate_signature(const Program &p,
                                                  const MethodDecl &pred,
                                                  const MethodDecl &target) {
  PredicateBinders b;
  size_t n = target.params.size();
  if (pred.params.size() < n || pred.params.size() > n + 2) return b;
  for (size_t i = 0; i < n; ++i)
    if (pred.params[i].type != target.params[i].type) return b;
  size_t extra = pred.params.size() - n;
  if (extra == 2) {
    if (!target.return_type || pred.params[n].type != *target.return_type)
      return b;
    if (!detail::is_exception_type(p, pred.params[n + 1].type)) return b;
    b.has_result = b.has_exc = true;
  } else if (extra == 1) {
    if (detail::is_exception_type(p, pred.params[n].type)) {
      b.has_exc = true;
    } else if (target.return_type &&
               pred.params[n].type == *target.return_type) {
      b.has_result = true;
    } else {
      return b;
    }
  }
  b.ok = true;
  return b;
}

// Builds `Owner.pred(p1, ..., pn [, result][, exc])` for use in a contract
// clause of `target`.
inline ExprPtr apply_predicate(const MethodDecl &pred,
                               const MethodDecl &target,
                               const PredicateBinders &binders) {
  Expression::PredicateApply app;
  app.name = pred.owner + "." + pred.name;
  for (const auto &p : target.params)
    app.args.push_back(build::local(p.name));
  if (binders.has_result) app.args.push_back(build::local(kResultBinder));
  if (binders.has_exc) app.args.push_back(build::local(kExcBinder));
  return build::mk(std::move(app));
}

// ---------------------------------------------------------------------------
// Predicate well-formedness

// Diagnostic codes: P1 non-boolean return type; P2 signature mismatch at a
// usage position; P3 body is not a single aggregable expression; P4 a
// transitively applied callee is not an aggregable predicate (this
// includes recursion, which has no specification semantics here).
inline std::vector<Diagnostic> check_predicate(const Program &program,
                                               const MethodDecl &pred) {
  std::vector<Diagnostic> out;
  if (!pred.return_type || pred.return_type->kind != TypeExpr::Kind::Bool)
    detail::spec_diag(out, "P1",
                      "predicate " + pred.qualified_name() +
                          " must return bool",
                      pred.pos);
  if (!pred.has_body) {
    detail::spec_diag(out, "P3",
                      "predicate " + pred.qualified_name() + " has no body",
                      pred.pos);
    return out;
  }

  // Body shape: straight-line local assignments of pure expressions, then
  // a single value return. No branches, no heap writes, no allocation,
  // no calls.
  bool aggregable = true;
  bool returned = false;
  for (const auto &ins : pred.body) {
    if (returned || !ins.labels.empty()) aggregable = false;
    if (const auto *as = ins.as<Instruction::Assign>()) {
      if (!as->lhs || !std::holds_alternative<LvLocal>(*as->lhs) ||
          !std::holds_alternative<ExprPtr>(as->rhs))
        aggregable = false;
    } else if (const auto *ret = ins.as<Instruction::Return>()) {
      if (!ret->value) aggregable = false;
      returned = true;
    } else {
      aggregable = false;
    }
  }
  if (!returned) aggregable = false;
  if (!aggregable) {
    detail::spec_diag(out, "P3",
                      "predicate " + pred.qualified_name() +
                          " body is not a single aggregable expression",
                      pred.pos);
  }

  // Transitive applications must reach aggregable predicates only, and
  // must not cycle back.
  std::set<std::string> visiting, done;
  std::function<void(const MethodDecl &)> walk = [&](const MethodDecl &m) {
    std::string key = m.qualified_name();
    if (done.count(key)) return;
    if (!visiting.insert(key).second) {
      detail::spec_diag(out, "P4",
                        "recursive predicate application through " + key,
                        m.pos);
      return;
    }
    for (const auto &ins : m.body) {
      const auto *as = ins.as<Instruction::Assign>();
      const ExprPtr *top = nullptr;
      if (as) top = std::get_if<ExprPtr>(&as->rhs);
      if (const auto *ret = ins.as<Instruction::Return>())
        if (ret->value) top = &ret->value;
      if (!top) continue;
      for_each_subexpr(*top, [&](const ExprPtr &e) {
        const auto *app = e->as<Expression::PredicateApply>();
        if (!app || detail::is_bblib_operator(app->name)) return;
        std::string owner = m.owner, name = app->name;
        if (auto dot = name.find('.'); dot != std::string::npos) {
          owner = name.substr(0, dot);
          name = name.substr(dot + 1);
        }
        const MethodDecl *callee = resolve_method(program, owner, name);
        if (!callee || !callee->is_predicate) {
          detail::spec_diag(out, "P4",
                            "predicate " + key +
                                " applies non-predicate " + app->name,
                            e->pos);
          return;
        }
        walk(*callee);
      });
    }
    visiting.erase(key);
    done.insert(key);
  };
  walk(pred);
  return out;
}

// ---------------------------------------------------------------------------
// Shorthand desugaring

// Desugars one Raise/ReturnWhen annotation into an ensures clause:
//   Raise(E, p)    =>  old(p(args)) ==> exc instanceof E
//   ReturnWhen(p)  =>  old(p(args)) ==> isvoid(exc)
//   bare returns   =>  old(true)    ==> isvoid(exc)
// The `when` predicate is wrapped in old(): it speaks about the pre-state.
inline ExprPtr desugar_shorthand(const Program &program,
                                 const Annotation &ann,
                                 const MethodDecl &method,
                                 std::vector<Diagnostic> &diags) {
  using namespace build;
  ExprPtr when;
  if (ann.kind == Annotation::Kind::ReturnWhen && ann.when.empty()) {
    when = mk(Expression::BoolConst{true});
  } else {
    const std::string &pname = ann.when;
    const MethodDecl *pred =
        detail::resolve_predicate(program, method.owner, pname);
    if (!pred) {
      detail::spec_diag(diags, "unresolved-predicate",
                        "cannot resolve predicate " + pname + " on " +
                            method.qualified_name(),
                        ann.pos);
      return nullptr;
    }
    // A pre-state predicate takes exactly the method's parameters.
    PredicateBinders b = match_predicate_signature(program, *pred, method);
    if (!b.ok || b.has_result || b.has_exc) {
      detail::spec_diag(diags, "P2",
                        "predicate " + pred->qualified_name() +
                            " does not match the parameters of " +
                            method.qualified_name(),
                        ann.pos);
      return nullptr;
    }
    when = apply_predicate(*pred, method, b);
  }
  ExprPtr old_when = mk(Expression::Old{when});
  ExprPtr rhs;
  if (ann.kind == Annotation::Kind::Raise) {
    rhs = mk(Expression::InstanceOf{local(kExcBinder), ann.name});
  } else {
    rhs = mk(Expression::IsVoid{local(kExcBinder)});
  }
  return mk(Expression::Binary{BinOp::Implies, old_when, rhs});
}

// Builds the contract of one method from its annotation list, in order.
inline void desugar_contract(const Program &program, MethodDecl &method,
                             std::vector<Diagnostic> &diags) {
  Contract c;
  bool any = false;
  for (const auto &ann : method.annotations) {
    switch (ann.kind) {
      case Annotation::Kind::Require:
      case Annotation::Kind::Ensure: {
        any = true;
        const MethodDecl *pred =
            detail::resolve_predicate(program, method.owner, ann.name);
        if (!pred) {
          detail::spec_diag(diags, "unresolved-predicate",
                            "cannot resolve predicate " + ann.name + " on " +
                                method.qualified_name(),
                            ann.pos);
          break;
        }
        PredicateBinders b = match_predicate_signature(program, *pred, method);
        bool pre = ann.kind == Annotation::Kind::Require;
        if (!b.ok || (pre && (b.has_result || b.has_exc))) {
          detail::spec_diag(diags, "P2",
                            "predicate " + pred->qualified_name() +
                                " does not match the signature of " +
                                method.qualified_name(),
                            ann.pos);
          break;
        }
        ExprPtr app = apply_predicate(*pred, method, b);
        if (pre) {
          c.requires_clauses.push_back(app);
        } else {
          c.ensures_clauses.push_back(app);
        }
        break;
      }
      case Annotation::Kind::Raise:
      case Annotation::Kind::ReturnWhen: {
        any = true;
        if (ann.kind == Annotation::Kind::Raise &&
            !is_exception_class(ann.name, program)) {
          detail::spec_diag(diags, "unknown-exception",
                            ann.name + " is not an exception class",
                            ann.pos);
          break;
        }
        if (ExprPtr e = desugar_shorthand(program, ann, method, diags))
          c.ensures_clauses.push_back(e);
        break;
      }
      case Annotation::Kind::Predicate:
      case Annotation::Kind::Attach:
        break;
    }
  }
  if (any || method.contract) {
    if (!method.contract) method.contract = Contract{};
    for (auto &r : c.requires_clauses)
      method.contract->requires_clauses.push_back(r);
    for (auto &e : c.ensures_clauses)
      method.contract->ensures_clauses.push_back(e);
  }
}

// ---------------------------------------------------------------------------
// Attachment

// A method of S annotated @attach(I) donates its contract to the method of
// I with the same name, parameter types, and return type. Bodies are never
// copied; a body-less receiver stays an opaque procedure with the attached
// contract. Codes: A1 undefined target class; A2 two donors attach
// different contracts to one signature.
inline std::vector<Diagnostic> resolve_attach(Program &program) {
  std::vector<Diagnostic> diags;
  // target qualified name -> donor qualified name (for conflict reports)
  std::map<std::string, std::string> attached_by;
  for (const auto &donor : program.methods) {
    for (const auto &ann : donor.annotations) {
      if (ann.kind != Annotation::Kind::Attach) continue;
      if (!program.find_class(ann.name)) {
        detail::spec_diag(diags, "A1",
                          "attach target class " + ann.name +
                              " is undefined",
                          ann.pos);
        continue;
      }
      if (donor.is_predicate) {
        detail::spec_diag(diags, "attach-predicate",
                          "attaching predicate status is unsupported: " +
                              donor.qualified_name(),
                          ann.pos);
        continue;
      }
      MethodDecl *target = nullptr;
      for (auto &m : program.methods) {
        if (m.owner != ann.name || m.name != donor.name) continue;
        if (m.params.size() != donor.params.size()) continue;
        bool same = true;
        for (size_t i = 0; i < m.params.size(); ++i)
          if (m.params[i].type != donor.params[i].type) same = false;
        if (m.return_type.has_value() != donor.return_type.has_value() ||
            (m.return_type && *m.return_type != *donor.return_type))
          same = false;
        if (same) target = &m;
      }
      if (!target) {
        detail::spec_diag(diags, "attach-no-match",
                          "no method of " + ann.name + " matches " +
                              donor.qualified_name(),
                          ann.pos);
        continue;
      }
      if (!donor.contract) continue;
      std::string key = target->qualified_name();
      auto prev = attached_by.find(key);
      if (prev != attached_by.end() ||
          (target->contract && !target->contract->requires_clauses.empty()) ||
          (target->contract && !target->contract->ensures_clauses.empty())) {
        std::string other =
            prev != attached_by.end() ? prev->second : key + " itself";
        detail::spec_diag(diags, "A2",
                          "conflicting specifications attached to " + key +
                              " by " + donor.qualified_name() + " and " +
                              other,
                          ann.pos);
        continue;
      }
      target->contract = donor.contract;
      attached_by[key] = donor.qualified_name();
    }
  }
  return diags;
}

// Full front-end pass: predicate checks, per-method desugaring, then
// attachment. Mutates contracts only; bodies are untouched.
inline std::vector<Diagnostic> resolve_specs(Program &program) {
  std::vector<Diagnostic> diags;
  for (const auto &m : program.methods) {
    if (!m.is_predicate) continue;
    auto d = check_predicate(program, m);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  for (auto &m : program.methods) desugar_contract(program, m, diags);
  auto d = resolve_attach(program);
  diags.insert(diags.end(), d.begin(), d.end());
  return diags;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_SPEC_FRONTEND_HPP
