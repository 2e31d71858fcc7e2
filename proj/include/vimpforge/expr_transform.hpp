// expr_transform.hpp -- tau_inst = tau_stm . tau_exp . tau_type:
// expected-type reconstruction, integer-to-Boolean translation of
// Grimp-style encodings, bblib operator mapping, and quantifier lifting.
// Instructions keep their shape; only expression payloads change.

#ifndef VIMPFORGE_EXPR_TRANSFORM_HPP
#define VIMPFORGE_EXPR_TRANSFORM_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vimpforge/expr_util.hpp"
#include "vimpforge/ir.hpp"

namespace vimpforge {

namespace detail {

// Coarse type classes for expected-type propagation.
enum class TyClass { Int, Bool, Ref, Unknown };

inline TyClass ty_class(const TypeExpr &t) {
  switch (t.kind) {
    case TypeExpr::Kind::Int: return TyClass::Int;
    case TypeExpr::Kind::Bool: return TyClass::Bool;
    default: return TyClass::Ref;
  }
}

struct TypeEnv {
  const Program *program = nullptr;
  const MethodDecl *method = nullptr;
  std::map<std::string, TypeExpr> vars;

  std::optional<TypeExpr> lookup(const std::string &name) const {
    auto it = vars.find(name);
    if (it != vars.end()) return it->second;
    return std::nullopt;
  }
};

inline TypeEnv make_env(const Program &p, const MethodDecl &m) {
  TypeEnv env;
  env.program = &p;
  env.method = &m;
  env.vars["this"] = TypeExpr::ref(m.owner);
  env.vars[kThrownVar] = TypeExpr::ref(kThrowable);
  env.vars[kExcBinder] = TypeExpr::ref(kThrowable);
  if (m.return_type) env.vars[kResultBinder] = *m.return_type;
  for (const auto &pa : m.params) env.vars[pa.name] = pa.type;
  for (const auto &lo : m.locals) env.vars[lo.name] = lo.type;
  return env;
}

inline std::optional<TypeExpr> field_type(const Program &p,
                                          const ExprPtr &target,
                                          const std::string &field,
                                          const TypeEnv &env);

// Synthesized type of an expression, bottom-up, from declarations and
// operator signatures. Unknown when undeterminable.
inline TyClass synth(const ExprPtr &e, const TypeEnv &env) {
  using E = Expression;
  return std::visit(
      [&](const auto &x) -> TyClass {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, E::IntConst>) {
          return TyClass::Int;
        } else if constexpr (std::is_same_v<T, E::BoolConst>) {
          return TyClass::Bool;
        } else if constexpr (std::is_same_v<T, E::NullConst> ||
                             std::is_same_v<T, E::VoidConst>) {
          return TyClass::Ref;
        } else if constexpr (std::is_same_v<T, E::Local>) {
          auto t = env.lookup(x.name);
          return t ? ty_class(*t) : TyClass::Unknown;
        } else if constexpr (std::is_same_v<T, E::FieldRead>) {
          auto t = field_type(*env.program, x.target, x.field, env);
          return t ? ty_class(*t) : TyClass::Unknown;
        } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
          if (const auto *l = x.target->template as<E::Local>())
            if (auto t = env.lookup(l->name);
                t && t->kind == TypeExpr::Kind::Array)
              return ty_class(*t->elem);
          return TyClass::Unknown;
        } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
          return TyClass::Int;
        } else if constexpr (std::is_same_v<T, E::Unary>) {
          return x.op == UnOp::Not ? TyClass::Bool : synth(x.arg, env);
        } else if constexpr (std::is_same_v<T, E::Binary>) {
          switch (x.op) {
            case BinOp::Add: case BinOp::Sub: case BinOp::Mul:
            case BinOp::Div: case BinOp::Mod:
              return TyClass::Int;
            default: return TyClass::Bool;
          }
        } else if constexpr (std::is_same_v<T, E::Conditional>) {
          return synth(x.then_expr, env);
        } else if constexpr (std::is_same_v<T, E::InstanceOf> ||
                             std::is_same_v<T, E::IsVoid> ||
                             std::is_same_v<T, E::Quantifier>) {
          return TyClass::Bool;
        } else if constexpr (std::is_same_v<T, E::Old>) {
          return synth(x.arg, env);
        } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
          const std::string &n = x.name;
          if (n == "conditional" && x.args.size() == 3)
            return synth(x.args[1], env);
          // every other bblib operator and every declared predicate is
          // boolean-valued
          return TyClass::Bool;
        }
      },
      e->node);
}

inline std::optional<TypeExpr> field_type(const Program &p,
                                          const ExprPtr &target,
                                          const std::string &field,
                                          const TypeEnv &env) {
  std::string cls;
  if (const auto *l = target->as<Expression::Local>()) {
    auto t = env.lookup(l->name);
    if (t && t->is_ref()) cls = t->class_name;
  }
  size_t guard = 0;
  const ClassDecl *c = cls.empty() ? nullptr : p.find_class(cls);
  while (c && guard++ <= p.classes.size()) {
    for (const auto &f : c->fields)
      if (f.name == field) return f.type;
    c = c->parent ? p.find_class(*c->parent) : nullptr;
  }
  return std::nullopt;
}

struct ExprTx {
  const TypeEnv &env;
  std::vector<Diagnostic> &diags;
  // binding-local name -> quantifier lift count (Q1 wants exactly 1)
  std::map<std::string, int> *binding_uses = nullptr;

  void error(const std::string &code, const std::string &msg,
             SourcePos pos) {
    Diagnostic d;
    d.code = code;
    d.message = msg;
    d.pos = pos;
    diags.push_back(std::move(d));
  }

  ExprPtr tx_int(const ExprPtr &e) { return tx(e, TyClass::Int); }
  ExprPtr tx_bool(const ExprPtr &e) { return tx(e, TyClass::Bool); }

  // Operand class for eq/neq-style comparisons: boolean if either side
  // synthesizes boolean, otherwise whatever the sides are.
  TyClass join_operands(const ExprPtr &a, const ExprPtr &b) {
    TyClass ta = synth(a, env), tb = synth(b, env);
    if (ta == TyClass::Bool || tb == TyClass::Bool) return TyClass::Bool;
    if (ta == TyClass::Ref || tb == TyClass::Ref) return TyClass::Ref;
    if (ta == TyClass::Unknown && tb == TyClass::Unknown)
      return TyClass::Unknown;
    return TyClass::Int;
  }

  ExprPtr tx_same(const ExprPtr &a) {
    // Context imposes nothing: translate under the synthesized class.
    return tx(a, synth(a, env));
  }

  ExprPtr tx(const ExprPtr &e, TyClass expected) {
    using E = Expression;
    using namespace build;
    switch (expected) {
      case TyClass::Bool: {
        // tau_exp: the boolean reading of a Grimp integer encoding.
        if (const auto *k = e->as<E::IntConst>())
          return mk(E::BoolConst{k->value >= 1}, e->pos);
        if (const auto *u = e->as<E::Unary>()) {
          if (u->op == UnOp::Neg) {
            // tau_exp(-a) = !tau_exp(a); constants are folded first.
            if (const auto *k = u->arg->as<E::IntConst>())
              return mk(E::BoolConst{-k->value >= 1}, e->pos);
            return mk(E::Unary{UnOp::Not, tx_bool(u->arg)}, e->pos);
          }
          return mk(E::Unary{UnOp::Not, tx_bool(u->arg)}, e->pos);
        }
        if (const auto *l = e->as<E::Local>()) {
          auto t = env.lookup(l->name);
          if (t && ty_class(*t) == TyClass::Int)
            error("T1",
                  "variable " + l->name +
                      " is integer-typed but used as a boolean",
                  e->pos);
          return e;
        }
        break;
      }
      case TyClass::Int: {
        if (e->is<E::BoolConst>()) {
          error("T1", "boolean constant in integer position", e->pos);
          return e;
        } else if (const auto *l = e->as<E::Local>()) {
          auto t = env.lookup(l->name);
          if (t && ty_class(*t) == TyClass::Bool)
            error("T1",
                  "variable " + l->name +
                      " is boolean-typed but used as an integer",
                  e->pos);
          return e;
        }
        break;
      }
      default: break;
    }
    return structural(e, expected);
  }

  ExprPtr structural(const ExprPtr &e, TyClass expected) {
    using E = Expression;
    using namespace build;
    return std::visit(
        [&](const auto &x) -> ExprPtr {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, E::IntConst> ||
                        std::is_same_v<T, E::BoolConst> ||
                        std::is_same_v<T, E::NullConst> ||
                        std::is_same_v<T, E::VoidConst> ||
                        std::is_same_v<T, E::Local>) {
            return e;
          } else if constexpr (std::is_same_v<T, E::FieldRead>) {
            if (expected == TyClass::Bool) {
              auto t = field_type(*env.program, x.target, x.field, env);
              if (t && ty_class(*t) == TyClass::Int)
                error("T1", "integer field " + x.field +
                          " used as a boolean", e->pos);
            }
            return mk(E::FieldRead{tx(x.target, TyClass::Ref), x.field},
                      e->pos);
          } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
            return mk(E::ArrayRead{tx(x.target, TyClass::Ref),
                                   tx_int(x.index)},
                      e->pos);
          } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
            return mk(E::ArrayLength{tx(x.target, TyClass::Ref)}, e->pos);
          } else if constexpr (std::is_same_v<T, E::Unary>) {
            return mk(E::Unary{x.op, x.op == UnOp::Not
                                          ? tx_bool(x.arg)
                                          : tx_int(x.arg)},
                      e->pos);
          } else if constexpr (std::is_same_v<T, E::Binary>) {
            switch (x.op) {
              case BinOp::Add: case BinOp::Sub: case BinOp::Mul:
              case BinOp::Div: case BinOp::Mod:
                return mk(E::Binary{x.op, tx_int(x.left), tx_int(x.right)},
                          e->pos);
              case BinOp::And: case BinOp::Or: case BinOp::Implies:
                return mk(
                    E::Binary{x.op, tx_bool(x.left), tx_bool(x.right)},
                    e->pos);
              case BinOp::Lt: case BinOp::Le: case BinOp::Gt:
              case BinOp::Ge:
                return mk(E::Binary{x.op, tx_int(x.left), tx_int(x.right)},
                          e->pos);
              case BinOp::Eq: case BinOp::Ne: {
                TyClass tc = join_operands(x.left, x.right);
                return mk(E::Binary{x.op, tx(x.left, tc), tx(x.right, tc)},
                          e->pos);
              }
            }
            return e;
          } else if constexpr (std::is_same_v<T, E::Conditional>) {
            return mk(E::Conditional{tx_bool(x.cond),
                                     tx(x.then_expr, expected),
                                     tx(x.else_expr, expected)},
                      e->pos);
          } else if constexpr (std::is_same_v<T, E::InstanceOf>) {
            return mk(E::InstanceOf{tx(x.arg, TyClass::Ref), x.class_name},
                      e->pos);
          } else if constexpr (std::is_same_v<T, E::IsVoid>) {
            return mk(E::IsVoid{tx(x.arg, TyClass::Ref)}, e->pos);
          } else if constexpr (std::is_same_v<T, E::Old>) {
            return mk(E::Old{tx(x.arg, expected)}, e->pos);
          } else if constexpr (std::is_same_v<T, E::Quantifier>) {
            return mk(E::Quantifier{x.kind, x.var, x.var_type,
                                    tx_bool(x.body)},
                      e->pos);
          } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
            return apply(x, e, expected);
          }
        },
        e->node);
  }

  // bblib operator names map to native operators; forall/exists lift to
  // quantifier nodes over a `binding`-declared variable.
  ExprPtr apply(const Expression::PredicateApply &x, const ExprPtr &e,
                TyClass expected) {
    using E = Expression;
    using namespace build;
    auto bin = [&](BinOp op, TyClass tc) {
      if (x.args.size() != 2) {
        error("T1", "operator " + x.name + " expects 2 arguments", e->pos);
        return e;
      }
      return mk(E::Binary{op, tx(x.args[0], tc), tx(x.args[1], tc)},
                e->pos);
    };
    if (x.name == "lt") return bin(BinOp::Lt, TyClass::Int);
    if (x.name == "lte") return bin(BinOp::Le, TyClass::Int);
    if (x.name == "gt") return bin(BinOp::Gt, TyClass::Int);
    if (x.name == "gte") return bin(BinOp::Ge, TyClass::Int);
    if (x.name == "implies") return bin(BinOp::Implies, TyClass::Bool);
    if (x.name == "eq" || x.name == "neq") {
      if (x.args.size() != 2) {
        error("T1", "operator " + x.name + " expects 2 arguments", e->pos);
        return e;
      }
      TyClass tc = join_operands(x.args[0], x.args[1]);
      return mk(E::Binary{x.name == "eq" ? BinOp::Eq : BinOp::Ne,
                          tx(x.args[0], tc), tx(x.args[1], tc)},
                e->pos);
    }
    if (x.name == "not") {
      if (x.args.size() != 1) {
        error("T1", "operator not expects 1 argument", e->pos);
        return e;
      }
      return mk(E::Unary{UnOp::Not, tx_bool(x.args[0])}, e->pos);
    }
    if (x.name == "conditional") {
      if (x.args.size() != 3) {
        error("T1", "operator conditional expects 3 arguments", e->pos);
        return e;
      }
      return mk(E::Conditional{tx_bool(x.args[0]),
                               tx(x.args[1], expected),
                               tx(x.args[2], expected)},
                e->pos);
    }
    if (x.name == "forall" || x.name == "exists") {
      // forall(v, body) with `binding T v;` lifts to a quantifier.
      const E::Local *v =
          x.args.size() == 2 ? x.args[0]->as<E::Local>() : nullptr;
      const LocalDecl *decl = nullptr;
      if (v && env.method)
        for (const auto &lo : env.method->locals)
          if (lo.name == v->name && lo.is_binding) decl = &lo;
      if (!decl) {
        error("Q1",
              "quantifier intrinsic " + x.name +
                  " needs a binding-declared variable",
              e->pos);
        return e;
      }
      if (binding_uses) ++(*binding_uses)[decl->name];
      return mk(E::Quantifier{x.name == "forall" ? QuantKind::Forall
                                                 : QuantKind::Exists,
                              decl->name, decl->type, tx_bool(x.args[1])},
                e->pos);
    }
    // A declared predicate: arguments translate under their own classes.
    std::vector<ExprPtr> args;
    for (const auto &a : x.args) args.push_back(tx_same(a));
    return mk(E::PredicateApply{x.name, std::move(args)}, e->pos);
  }
};

}  // namespace detail

// tau_exp entry point for a single boolean-position expression.
inline ExprPtr to_boolean_expr(const ExprPtr &e, const detail::TypeEnv &env,
                               std::vector<Diagnostic> &diags) {
  detail::ExprTx tx{env, diags};
  return tx.tx_bool(e);
}

// Whole-method tau_inst: shape-preserving traversal replacing every
// expression payload under its expected type. Also rewrites contract
// clauses (boolean contexts).
inline std::vector<Diagnostic> transform_instructions(MethodDecl &method,
                                                      const Program &program) {
  std::vector<Diagnostic> diags;
  detail::TypeEnv env = detail::make_env(program, method);
  std::map<std::string, int> binding_uses;
  for (const auto &lo : method.locals)
    if (lo.is_binding) binding_uses[lo.name] = 0;
  detail::ExprTx tx{env, diags, &binding_uses};

  auto expected_of_lvalue = [&](const Lvalue &lv) -> detail::TyClass {
    if (const auto *ll = std::get_if<LvLocal>(&lv)) {
      auto t = env.lookup(ll->name);
      return t ? detail::ty_class(*t) : detail::TyClass::Unknown;
    }
    if (const auto *lf = std::get_if<LvField>(&lv)) {
      auto t = detail::field_type(program, lf->target, lf->field, env);
      return t ? detail::ty_class(*t) : detail::TyClass::Unknown;
    }
    const auto &la = std::get<LvArray>(lv);
    if (const auto *l = la.target->as<Expression::Local>())
      if (auto t = env.lookup(l->name); t && t->elem)
        return detail::ty_class(*t->elem);
    return detail::TyClass::Unknown;
  };

  for (auto &ins : method.body) {
    using I = Instruction;
    if (auto *as = std::get_if<I::Assign>(&ins.node)) {
      if (auto *e = std::get_if<ExprPtr>(&as->rhs)) {
        detail::TyClass tc = as->lhs ? expected_of_lvalue(*as->lhs)
                                     : detail::TyClass::Unknown;
        *e = tx.tx(*e, tc);
      } else if (auto *na = std::get_if<NewArray>(&as->rhs)) {
        na->length = tx.tx_int(na->length);
      } else if (auto *iv = std::get_if<Invoke>(&as->rhs)) {
        // Argument positions take the callee's declared parameter types.
        const MethodDecl *callee = nullptr;
        if (const auto *l = iv->receiver->as<Expression::Local>())
          if (auto t = env.lookup(l->name); t && t->is_ref())
            callee = resolve_method(program, t->class_name, iv->method);
        for (size_t i = 0; i < iv->args.size(); ++i) {
          detail::TyClass tc =
              callee && i < callee->params.size()
                  ? detail::ty_class(callee->params[i].type)
                  : detail::TyClass::Unknown;
          iv->args[i] = tx.tx(iv->args[i], tc);
        }
      }
      if (as->lhs) {
        if (auto *lf = std::get_if<LvField>(&*as->lhs))
          lf->target = tx.tx(lf->target, detail::TyClass::Ref);
        if (auto *la = std::get_if<LvArray>(&*as->lhs)) {
          la->target = tx.tx(la->target, detail::TyClass::Ref);
          la->index = tx.tx_int(la->index);
        }
      }
    } else if (auto *ig = std::get_if<I::IfGoto>(&ins.node)) {
      ig->cond = tx.tx_bool(ig->cond);
    } else if (auto *ret = std::get_if<I::Return>(&ins.node)) {
      if (ret->value) {
        detail::TyClass tc = method.return_type
                                 ? detail::ty_class(*method.return_type)
                                 : detail::TyClass::Unknown;
        ret->value = tx.tx(ret->value, tc);
      }
    } else if (auto *iv2 = std::get_if<I::InvariantStmt>(&ins.node)) {
      iv2->expr = tx.tx_bool(iv2->expr);
    } else if (auto *ast = std::get_if<I::AssertStmt>(&ins.node)) {
      ast->expr = tx.tx_bool(ast->expr);
    } else if (auto *asu = std::get_if<I::AssumeStmt>(&ins.node)) {
      asu->expr = tx.tx_bool(asu->expr);
    }
  }

  if (method.contract) {
    for (auto &r : method.contract->requires_clauses) r = tx.tx_bool(r);
    for (auto &e : method.contract->ensures_clauses) e = tx.tx_bool(e);
  }

  for (const auto &[name, uses] : binding_uses) {
    if (uses != 1) {
      Diagnostic d;
      d.code = "Q1";
      d.message = "binding " + name + " must be used by exactly one "
                  "quantifier (used " + std::to_string(uses) + " times)";
      d.pos = method.pos;
      diags.push_back(std::move(d));
    }
  }
  return diags;
}

// Whole-program tau_inst.
inline std::vector<Diagnostic> transform_expressions(Program &program) {
  std::vector<Diagnostic> diags;
  for (auto &m : program.methods) {
    auto d = transform_instructions(m, program);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  return diags;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_EXPR_TRANSFORM_HPP
