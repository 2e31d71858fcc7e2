// expr_util.hpp -- shared expression traversal and rewriting helpers.

#ifndef VIMPFORGE_EXPR_UTIL_HPP
#define VIMPFORGE_EXPR_UTIL_HPP

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vimpforge/ir.hpp"

namespace vimpforge {

// Calls fn on expr and every (transitive) subexpression, pre-order.
// Quantifier bodies are visited.
inline void for_each_subexpr(const ExprPtr &expr,
                             const std::function<void(const ExprPtr &)> &fn) {
  if (!expr) return;
  fn(expr);
  using E = Expression;
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, E::FieldRead>) {
          for_each_subexpr(x.target, fn);
        } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
          for_each_subexpr(x.target, fn);
          for_each_subexpr(x.index, fn);
        } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
          for_each_subexpr(x.target, fn);
        } else if constexpr (std::is_same_v<T, E::Unary>) {
          for_each_subexpr(x.arg, fn);
        } else if constexpr (std::is_same_v<T, E::Binary>) {
          for_each_subexpr(x.left, fn);
          for_each_subexpr(x.right, fn);
        } else if constexpr (std::is_same_v<T, E::Conditional>) {
          for_each_subexpr(x.cond, fn);
          for_each_subexpr(x.then_expr, fn);
          for_each_subexpr(x.else_expr, fn);
        } else if constexpr (std::is_same_v<T, E::InstanceOf> ||
                             std::is_same_v<T, E::IsVoid> ||
                             std::is_same_v<T, E::Old>) {
          for_each_subexpr(x.arg, fn);
        } else if constexpr (std::is_same_v<T, E::Quantifier>) {
          for_each_subexpr(x.body, fn);
        } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
          for (const auto &a : x.args) for_each_subexpr(a, fn);
        }
      },
      expr->node);
}

// Rebuilds expr bottom-up; fn receives a node whose children are already
// rewritten and returns the replacement.
inline ExprPtr map_expr(const ExprPtr &expr,
                        const std::function<ExprPtr(const ExprPtr &)> &fn) {
  if (!expr) return expr;
  using E = Expression;
  namespace b = build;
  ExprPtr rebuilt = std::visit(
      [&](const auto &x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, E::FieldRead>) {
          return b::mk(E::FieldRead{map_expr(x.target, fn), x.field},
                       expr->pos);
        } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
          return b::mk(
              E::ArrayRead{map_expr(x.target, fn), map_expr(x.index, fn)},
              expr->pos);
        } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
          return b::mk(E::ArrayLength{map_expr(x.target, fn)}, expr->pos);
        } else if constexpr (std::is_same_v<T, E::Unary>) {
          return b::mk(E::Unary{x.op, map_expr(x.arg, fn)}, expr->pos);
        } else if constexpr (std::is_same_v<T, E::Binary>) {
          return b::mk(
              E::Binary{x.op, map_expr(x.left, fn), map_expr(x.right, fn)},
              expr->pos);
        } else if constexpr (std::is_same_v<T, E::Conditional>) {
          return b::mk(E::Conditional{map_expr(x.cond, fn),
                                      map_expr(x.then_expr, fn),
                                      map_expr(x.else_expr, fn)},
                       expr->pos);
        } else if constexpr (std::is_same_v<T, E::InstanceOf>) {
          return b::mk(E::InstanceOf{map_expr(x.arg, fn), x.class_name},
                       expr->pos);
        } else if constexpr (std::is_same_v<T, E::IsVoid>) {
          return b::mk(E::IsVoid{map_expr(x.arg, fn)}, expr->pos);
        } else if constexpr (std::is_same_v<T, E::Old>) {
          return b::mk(E::Old{map_expr(x.arg, fn)}, expr->pos);
        } else if constexpr (std::is_same_v<T, E::Quantifier>) {
          return b::mk(
              E::Quantifier{x.kind, x.var, x.var_type, map_expr(x.body, fn)},
              expr->pos);
        } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
          std::vector<ExprPtr> args;
          args.reserve(x.args.size());
          for (const auto &a : x.args) args.push_back(map_expr(a, fn));
          return b::mk(E::PredicateApply{x.name, std::move(args)}, expr->pos);
        } else {
          return expr;
        }
      },
      expr->node);
  return fn(rebuilt);
}

// Free local names referenced by expr (quantifier-bound names excluded).
inline void collect_free_locals(const ExprPtr &expr,
                                std::set<std::string> &out,
                                std::set<std::string> bound = {}) {
  if (!expr) return;
  using E = Expression;
  if (const auto *l = expr->as<E::Local>()) {
    if (!bound.count(l->name)) out.insert(l->name);
    return;
  }
  if (const auto *q = expr->as<E::Quantifier>()) {
    auto inner = bound;
    inner.insert(q->var);
    collect_free_locals(q->body, out, std::move(inner));
    return;
  }
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, E::FieldRead>) {
          collect_free_locals(x.target, out, bound);
        } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
          collect_free_locals(x.target, out, bound);
          collect_free_locals(x.index, out, bound);
        } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
          collect_free_locals(x.target, out, bound);
        } else if constexpr (std::is_same_v<T, E::Unary>) {
          collect_free_locals(x.arg, out, bound);
        } else if constexpr (std::is_same_v<T, E::Binary>) {
          collect_free_locals(x.left, out, bound);
          collect_free_locals(x.right, out, bound);
        } else if constexpr (std::is_same_v<T, E::Conditional>) {
          collect_free_locals(x.cond, out, bound);
          collect_free_locals(x.then_expr, out, bound);
          collect_free_locals(x.else_expr, out, bound);
        } else if constexpr (std::is_same_v<T, E::InstanceOf> ||
                             std::is_same_v<T, E::IsVoid> ||
                             std::is_same_v<T, E::Old>) {
          collect_free_locals(x.arg, out, bound);
        } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
          for (const auto &a : x.args) collect_free_locals(a, out, bound);
        }
      },
      expr->node);
}

inline std::set<std::string> free_locals(const ExprPtr &expr) {
  std::set<std::string> out;
  collect_free_locals(expr, out);
  return out;
}

// Capture-naive substitution of free locals; callers guarantee substituted
// expressions contain no names bound inside expr.
inline ExprPtr substitute_locals(
    const ExprPtr &expr, const std::map<std::string, ExprPtr> &subst) {
  return map_expr(expr, [&](const ExprPtr &e) -> ExprPtr {
    if (const auto *l = e->as<Expression::Local>()) {
      auto it = subst.find(l->name);
      if (it != subst.end()) return it->second;
    }
    return e;
  });
}

inline bool contains_old(const ExprPtr &expr) {
  bool found = false;
  for_each_subexpr(expr, [&](const ExprPtr &e) {
    if (e->is<Expression::Old>()) found = true;
  });
  return found;
}

// A heap access is a field read, array read, or array length.
inline bool contains_heap_access(const ExprPtr &expr) {
  bool found = false;
  for_each_subexpr(expr, [&](const ExprPtr &e) {
    if (e->is<Expression::FieldRead>() || e->is<Expression::ArrayRead>() ||
        e->is<Expression::ArrayLength>())
      found = true;
  });
  return found;
}

inline bool is_atom(const ExprPtr &expr) {
  using E = Expression;
  return expr->is<E::Local>() || expr->is<E::IntConst>() ||
         expr->is<E::BoolConst>() || expr->is<E::NullConst>() ||
         expr->is<E::VoidConst>();
}

}  // namespace vimpforge

#endif  // VIMPFORGE_EXPR_UTIL_HPP
