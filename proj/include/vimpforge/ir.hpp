// ir.hpp -- core intermediate representation: programs, classes, methods,
// three-address instructions, expression trees, traps, and contracts.
// All IR values are immutable after construction; passes rewrite by copy.

#ifndef VIMPFORGE_IR_HPP
#define VIMPFORGE_IR_HPP

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace vimpforge {

using BigInt = boost::multiprecision::cpp_int;

struct SourcePos {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  std::string code;
  std::string message;
  SourcePos pos{};
};

// Distinguished names.
inline const std::string kThrownVar = "@thrown";
inline const std::string kResultBinder = "result";
inline const std::string kExcBinder = "exc";
inline const std::string kThrowable = "Throwable";
inline const std::string kNullPointerException = "NullPointerException";
inline const std::string kIndexOutOfBoundsException = "IndexOutOfBoundsException";

// ---------------------------------------------------------------------------
// Types

struct TypeExpr {
  enum class Kind { Int, Bool, Ref, Array, VoidMarker };
  Kind kind = Kind::Int;
  std::string class_name;                 // Kind::Ref
  std::shared_ptr<const TypeExpr> elem;   // Kind::Array

  static TypeExpr int_type() { return {Kind::Int, {}, nullptr}; }
  static TypeExpr bool_type() { return {Kind::Bool, {}, nullptr}; }
  static TypeExpr ref(std::string cls) {
    return {Kind::Ref, std::move(cls), nullptr};
  }
  static TypeExpr array(const TypeExpr &elem) {
    return {Kind::Array, {}, std::make_shared<const TypeExpr>(elem)};
  }
  static TypeExpr void_marker() { return {Kind::VoidMarker, {}, nullptr}; }

  bool is_ref() const { return kind == Kind::Ref; }
  bool is_array() const { return kind == Kind::Array; }

  friend bool operator==(const TypeExpr &a, const TypeExpr &b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Ref: return a.class_name == b.class_name;
      case Kind::Array: return *a.elem == *b.elem;
      default: return true;
    }
  }
  friend bool operator!=(const TypeExpr &a, const TypeExpr &b) {
    return !(a == b);
  }
};

// ---------------------------------------------------------------------------
// Expressions

enum class UnOp { Neg, Not };
enum class BinOp {
  Add, Sub, Mul, Div, Mod,
  And, Or, Implies,
  Eq, Ne, Lt, Le, Gt, Ge
};
enum class QuantKind { Forall, Exists };

struct Expression;
using ExprPtr = std::shared_ptr<const Expression>;

struct Expression {
  struct IntConst { BigInt value; };
  struct BoolConst { bool value; };
  struct NullConst {};
  struct VoidConst {};
  struct Local { std::string name; };
  struct FieldRead { ExprPtr target; std::string field; };
  struct ArrayRead { ExprPtr target; ExprPtr index; };
  struct ArrayLength { ExprPtr target; };
  struct Unary { UnOp op; ExprPtr arg; };
  struct Binary { BinOp op; ExprPtr left; ExprPtr right; };
  struct Conditional { ExprPtr cond; ExprPtr then_expr; ExprPtr else_expr; };
  struct InstanceOf { ExprPtr arg; std::string class_name; };
  struct IsVoid { ExprPtr arg; };
  struct Old { ExprPtr arg; };
  struct Quantifier {
    QuantKind kind;
    std::string var;
    TypeExpr var_type;
    ExprPtr body;
  };
  // A call to a named specification predicate (or a bblib-style operator
  // before expression translation resolves it).
  struct PredicateApply { std::string name; std::vector<ExprPtr> args; };

  using Node = std::variant<IntConst, BoolConst, NullConst, VoidConst, Local,
                            FieldRead, ArrayRead, ArrayLength, Unary, Binary,
                            Conditional, InstanceOf, IsVoid, Old, Quantifier,
                            PredicateApply>;

  Node node;
  SourcePos pos{};

  template <class T> const T *as() const { return std::get_if<T>(&node); }
  template <class T> bool is() const {
    return std::holds_alternative<T>(node);
  }
};

// Expression builders.
namespace build {

inline ExprPtr mk(Expression::Node n, SourcePos pos = {}) {
  auto e = std::make_shared<Expression>();
  e->node = std::move(n);
  e->pos = pos;
  return e;
}
inline ExprPtr int_const(BigInt v) {
  return mk(Expression::IntConst{std::move(v)});
}
inline ExprPtr bool_const(bool v) { return mk(Expression::BoolConst{v}); }
inline ExprPtr null_const() { return mk(Expression::NullConst{}); }
inline ExprPtr void_const() { return mk(Expression::VoidConst{}); }
inline ExprPtr local(std::string name) {
  return mk(Expression::Local{std::move(name)});
}
inline ExprPtr field_read(ExprPtr target, std::string field) {
  return mk(Expression::FieldRead{std::move(target), std::move(field)});
}
inline ExprPtr array_read(ExprPtr target, ExprPtr index) {
  return mk(Expression::ArrayRead{std::move(target), std::move(index)});
}
inline ExprPtr array_length(ExprPtr target) {
  return mk(Expression::ArrayLength{std::move(target)});
}
inline ExprPtr unary(UnOp op, ExprPtr arg) {
  return mk(Expression::Unary{op, std::move(arg)});
}
inline ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r) {
  return mk(Expression::Binary{op, std::move(l), std::move(r)});
}
inline ExprPtr conditional(ExprPtr c, ExprPtr t, ExprPtr e) {
  return mk(Expression::Conditional{std::move(c), std::move(t), std::move(e)});
}
inline ExprPtr instance_of(ExprPtr arg, std::string cls) {
  return mk(Expression::InstanceOf{std::move(arg), std::move(cls)});
}
inline ExprPtr is_void(ExprPtr arg) {
  return mk(Expression::IsVoid{std::move(arg)});
}
inline ExprPtr old(ExprPtr arg) { return mk(Expression::Old{std::move(arg)}); }
inline ExprPtr quantifier(QuantKind k, std::string var, TypeExpr t,
                          ExprPtr body) {
  return mk(Expression::Quantifier{k, std::move(var), std::move(t),
                                   std::move(body)});
}
inline ExprPtr predicate_apply(std::string name, std::vector<ExprPtr> args) {
  return mk(Expression::PredicateApply{std::move(name), std::move(args)});
}
inline ExprPtr not_(ExprPtr a) { return unary(UnOp::Not, std::move(a)); }
inline ExprPtr and_(ExprPtr a, ExprPtr b) {
  return binary(BinOp::And, std::move(a), std::move(b));
}
inline ExprPtr implies(ExprPtr a, ExprPtr b) {
  return binary(BinOp::Implies, std::move(a), std::move(b));
}
inline ExprPtr eq(ExprPtr a, ExprPtr b) {
  return binary(BinOp::Eq, std::move(a), std::move(b));
}
inline ExprPtr thrown() { return local(kThrownVar); }

}  // namespace build

// Structural equality, ignoring source positions.
bool expr_equal(const Expression &a, const Expression &b);

inline bool expr_equal(const ExprPtr &a, const ExprPtr &b) {
  if (!a || !b) return !a && !b;
  return expr_equal(*a, *b);
}

// ---------------------------------------------------------------------------
// Instructions

struct NewObject { std::string class_name; };
struct NewArray { TypeExpr elem; ExprPtr length; };
struct Invoke { ExprPtr receiver; std::string method; std::vector<ExprPtr> args; };

struct LvLocal { std::string name; };
struct LvField { ExprPtr target; std::string field; };
struct LvArray { ExprPtr target; ExprPtr index; };
using Lvalue = std::variant<LvLocal, LvField, LvArray>;

using AssignRhs = std::variant<ExprPtr, NewObject, NewArray, Invoke>;

struct Instruction {
  // lhs is absent for a call whose result is discarded.
  struct Assign { std::optional<Lvalue> lhs; AssignRhs rhs; };
  struct IfGoto { ExprPtr cond; std::string target; };
  struct Goto { std::string target; };
  struct Return { ExprPtr value; };  // null for a bare return
  struct Throw { std::string local; };
  struct CaughtBind { std::string local; };  // e := caught
  struct InvariantStmt { ExprPtr expr; };
  struct AssertStmt { ExprPtr expr; };
  struct AssumeStmt { ExprPtr expr; };
  struct Nop {};

  using Node = std::variant<Assign, IfGoto, Goto, Return, Throw, CaughtBind,
                            InvariantStmt, AssertStmt, AssumeStmt, Nop>;

  // Origin of an AssertStmt: user-written, or inserted by the
  // invariant expansion (header = entry/preservation, exit = on leaving).
  // Cosmetic for rendering and equality; the executor reports violation
  // kinds from it.
  enum class AssertTag { User, InvariantHeader, InvariantExit };

  std::vector<std::string> labels;
  Node node;
  SourcePos pos{};
  AssertTag tag = AssertTag::User;

  AssertTag assert_tag() const { return tag; }

  template <class T> const T *as() const { return std::get_if<T>(&node); }
  template <class T> bool is() const {
    return std::holds_alternative<T>(node);
  }
};

// An exception-table entry: instructions in [begin, end) are guarded; an
// exception conforming to exception_type transfers control to handler.
// Earlier traps take dispatch priority.
struct Trap {
  std::string begin;
  std::string end;
  std::string exception_type;
  std::string handler;
  SourcePos pos{};
};

// ---------------------------------------------------------------------------
// Declarations

struct FieldDecl { std::string name; TypeExpr type; };

struct ClassDecl {
  std::string name;
  std::optional<std::string> parent;
  std::vector<FieldDecl> fields;
  bool builtin = false;
  SourcePos pos{};
};

struct Annotation {
  enum class Kind { Require, Ensure, Raise, ReturnWhen, Predicate, Attach };
  Kind kind;
  std::string name;  // predicate name (Require/Ensure), exception class
                     // (Raise), attached class (Attach)
  std::string when;  // Raise / ReturnWhen predicate; empty in ReturnWhen
                     // means `true`
  SourcePos pos{};
};

// Desugared method specification. Ensures clauses may mention the
// distinguished binders `result` and `exc`; they are checked regardless of
// whether the method terminates normally or exceptionally.
struct Contract {
  std::vector<ExprPtr> requires_clauses;
  std::vector<ExprPtr> ensures_clauses;
};

struct Param { std::string name; TypeExpr type; };
struct LocalDecl {
  std::string name;
  TypeExpr type;
  bool is_binding = false;  // `binding T v;` quantifier-binding marker
};

enum class CheckOverride { Inherit, On, Off };

struct MethodDecl {
  std::string owner;
  std::string name;
  std::vector<Param> params;
  std::optional<TypeExpr> return_type;  // nullopt: void
  std::vector<LocalDecl> locals;
  std::vector<Instruction> body;
  bool has_body = false;  // contract-only (opaque) methods have none
  std::vector<Trap> traps;
  std::vector<Annotation> annotations;
  bool is_predicate = false;
  CheckOverride check_null = CheckOverride::Inherit;
  CheckOverride check_bounds = CheckOverride::Inherit;
  std::optional<Contract> contract;  // filled by the spec frontend
  SourcePos pos{};

  bool is_void() const { return !return_type.has_value(); }
  std::string qualified_name() const { return owner + "." + name; }
};

struct Program {
  std::vector<ClassDecl> classes;
  std::vector<MethodDecl> methods;

  const ClassDecl *find_class(const std::string &name) const {
    for (const auto &c : classes)
      if (c.name == name) return &c;
    return nullptr;
  }
  const MethodDecl *find_method(const std::string &owner,
                                const std::string &name) const {
    for (const auto &m : methods)
      if (m.owner == owner && m.name == name) return &m;
    return nullptr;
  }
  MethodDecl *find_method(const std::string &owner, const std::string &name) {
    for (auto &m : methods)
      if (m.owner == owner && m.name == name) return &m;
    return nullptr;
  }
};

// Injects Throwable, NullPointerException, IndexOutOfBoundsException unless
// already declared.
inline void add_builtin_classes(Program &program) {
  auto ensure = [&](const std::string &name,
                    std::optional<std::string> parent) {
    if (program.find_class(name)) return;
    ClassDecl c;
    c.name = name;
    c.parent = std::move(parent);
    c.builtin = true;
    program.classes.push_back(std::move(c));
  };
  ensure(kThrowable, std::nullopt);
  ensure(kNullPointerException, kThrowable);
  ensure(kIndexOutOfBoundsException, kThrowable);
}

// True iff b is reachable from a by following parent links
// (reflexive-transitive). Throws std::invalid_argument on unknown classes.
inline bool subtype_of(const std::string &a, const std::string &b,
                       const Program &program) {
  if (!program.find_class(a))
    throw std::invalid_argument("unknown class: " + a);
  if (!program.find_class(b))
    throw std::invalid_argument("unknown class: " + b);
  const ClassDecl *cur = program.find_class(a);
  size_t steps = 0;
  while (cur) {
    if (cur->name == b) return true;
    if (!cur->parent) return false;
    cur = program.find_class(*cur->parent);
    if (++steps > program.classes.size()) return false;  // cyclic input
  }
  return false;
}

// True for transitive subclasses of Throwable (and Throwable itself).
inline bool is_exception_class(const std::string &name,
                               const Program &program) {
  if (!program.find_class(name) || !program.find_class(kThrowable))
    return false;
  return subtype_of(name, kThrowable, program);
}

// Resolves a method by name starting at `cls` and walking up the hierarchy.
inline const MethodDecl *resolve_method(const Program &program,
                                        const std::string &cls,
                                        const std::string &name) {
  const ClassDecl *cur = program.find_class(cls);
  size_t steps = 0;
  while (cur) {
    if (const MethodDecl *m = program.find_method(cur->name, name)) return m;
    if (!cur->parent) return nullptr;
    cur = program.find_class(*cur->parent);
    if (++steps > program.classes.size()) return nullptr;
  }
  return nullptr;
}

// --------------------------------------------------------------------------
// Structural equality

inline bool expr_equal(const Expression &a, const Expression &b) {
  using E = Expression;
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T &y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, E::IntConst>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, E::BoolConst>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, E::NullConst> ||
                             std::is_same_v<T, E::VoidConst>) {
          return true;
        } else if constexpr (std::is_same_v<T, E::Local>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, E::FieldRead>) {
          return x.field == y.field && expr_equal(x.target, y.target);
        } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
          return expr_equal(x.target, y.target) && expr_equal(x.index, y.index);
        } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
          return expr_equal(x.target, y.target);
        } else if constexpr (std::is_same_v<T, E::Unary>) {
          return x.op == y.op && expr_equal(x.arg, y.arg);
        } else if constexpr (std::is_same_v<T, E::Binary>) {
          return x.op == y.op && expr_equal(x.left, y.left) &&
                 expr_equal(x.right, y.right);
        } else if constexpr (std::is_same_v<T, E::Conditional>) {
          return expr_equal(x.cond, y.cond) &&
                 expr_equal(x.then_expr, y.then_expr) &&
                 expr_equal(x.else_expr, y.else_expr);
        } else if constexpr (std::is_same_v<T, E::InstanceOf>) {
          return x.class_name == y.class_name && expr_equal(x.arg, y.arg);
        } else if constexpr (std::is_same_v<T, E::IsVoid>) {
          return expr_equal(x.arg, y.arg);
        } else if constexpr (std::is_same_v<T, E::Old>) {
          return expr_equal(x.arg, y.arg);
        } else if constexpr (std::is_same_v<T, E::Quantifier>) {
          return x.kind == y.kind && x.var == y.var &&
                 x.var_type == y.var_type && expr_equal(x.body, y.body);
        } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
          if (x.name != y.name || x.args.size() != y.args.size()) return false;
          for (size_t i = 0; i < x.args.size(); ++i)
            if (!expr_equal(x.args[i], y.args[i])) return false;
          return true;
        }
      },
      a.node);
}

inline bool lvalue_equal(const Lvalue &a, const Lvalue &b) {
  if (a.index() != b.index()) return false;
  if (const auto *l = std::get_if<LvLocal>(&a))
    return l->name == std::get<LvLocal>(b).name;
  if (const auto *f = std::get_if<LvField>(&a)) {
    const auto &g = std::get<LvField>(b);
    return f->field == g.field && expr_equal(f->target, g.target);
  }
  const auto &x = std::get<LvArray>(a);
  const auto &y = std::get<LvArray>(b);
  return expr_equal(x.target, y.target) && expr_equal(x.index, y.index);
}

inline bool rhs_equal(const AssignRhs &a, const AssignRhs &b) {
  if (a.index() != b.index()) return false;
  if (const auto *e = std::get_if<ExprPtr>(&a))
    return expr_equal(*e, std::get<ExprPtr>(b));
  if (const auto *n = std::get_if<NewObject>(&a))
    return n->class_name == std::get<NewObject>(b).class_name;
  if (const auto *n = std::get_if<NewArray>(&a)) {
    const auto &m = std::get<NewArray>(b);
    return n->elem == m.elem && expr_equal(n->length, m.length);
  }
  const auto &x = std::get<Invoke>(a);
  const auto &y = std::get<Invoke>(b);
  if (x.method != y.method || !expr_equal(x.receiver, y.receiver) ||
      x.args.size() != y.args.size())
    return false;
  for (size_t i = 0; i < x.args.size(); ++i)
    if (!expr_equal(x.args[i], y.args[i])) return false;
  return true;
}

inline bool instr_equal(const Instruction &a, const Instruction &b) {
  using I = Instruction;
  if (a.labels != b.labels) return false;
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T &y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, I::Assign>) {
          if (x.lhs.has_value() != y.lhs.has_value()) return false;
          if (x.lhs && !lvalue_equal(*x.lhs, *y.lhs)) return false;
          return rhs_equal(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, I::IfGoto>) {
          return x.target == y.target && expr_equal(x.cond, y.cond);
        } else if constexpr (std::is_same_v<T, I::Goto>) {
          return x.target == y.target;
        } else if constexpr (std::is_same_v<T, I::Return>) {
          return expr_equal(x.value, y.value);
        } else if constexpr (std::is_same_v<T, I::Throw>) {
          return x.local == y.local;
        } else if constexpr (std::is_same_v<T, I::CaughtBind>) {
          return x.local == y.local;
        } else if constexpr (std::is_same_v<T, I::InvariantStmt> ||
                             std::is_same_v<T, I::AssertStmt> ||
                             std::is_same_v<T, I::AssumeStmt>) {
          return expr_equal(x.expr, y.expr);
        } else {
          return true;  // Nop
        }
      },
      a.node);
}

inline bool contract_equal(const Contract &a, const Contract &b) {
  auto list_eq = [](const std::vector<ExprPtr> &u,
                    const std::vector<ExprPtr> &v) {
    if (u.size() != v.size()) return false;
    for (size_t i = 0; i < u.size(); ++i)
      if (!expr_equal(u[i], v[i])) return false;
    return true;
  };
  return list_eq(a.requires_clauses, b.requires_clauses) &&
         list_eq(a.ensures_clauses, b.ensures_clauses);
}

inline bool method_equal(const MethodDecl &a, const MethodDecl &b) {
  if (a.owner != b.owner || a.name != b.name ||
      a.return_type != b.return_type || a.has_body != b.has_body ||
      a.is_predicate != b.is_predicate || a.check_null != b.check_null ||
      a.check_bounds != b.check_bounds)
    return false;
  if (a.params.size() != b.params.size() || a.locals.size() != b.locals.size())
    return false;
  for (size_t i = 0; i < a.params.size(); ++i)
    if (a.params[i].name != b.params[i].name ||
        a.params[i].type != b.params[i].type)
      return false;
  for (size_t i = 0; i < a.locals.size(); ++i)
    if (a.locals[i].name != b.locals[i].name ||
        a.locals[i].type != b.locals[i].type ||
        a.locals[i].is_binding != b.locals[i].is_binding)
      return false;
  if (a.body.size() != b.body.size()) return false;
  for (size_t i = 0; i < a.body.size(); ++i)
    if (!instr_equal(a.body[i], b.body[i])) return false;
  if (a.traps.size() != b.traps.size()) return false;
  for (size_t i = 0; i < a.traps.size(); ++i) {
    const Trap &t = a.traps[i], &u = b.traps[i];
    if (t.begin != u.begin || t.end != u.end || t.handler != u.handler ||
        t.exception_type != u.exception_type)
      return false;
  }
  if (a.annotations.size() != b.annotations.size()) return false;
  for (size_t i = 0; i < a.annotations.size(); ++i) {
    const Annotation &p = a.annotations[i], &q = b.annotations[i];
    if (p.kind != q.kind || p.name != q.name || p.when != q.when) return false;
  }
  if (a.contract.has_value() != b.contract.has_value()) return false;
  if (a.contract && !contract_equal(*a.contract, *b.contract)) return false;
  return true;
}

inline bool program_equal(const Program &a, const Program &b) {
  if (a.classes.size() != b.classes.size() ||
      a.methods.size() != b.methods.size())
    return false;
  for (size_t i = 0; i < a.classes.size(); ++i) {
    const ClassDecl &c = a.classes[i], &d = b.classes[i];
    if (c.name != d.name || c.parent != d.parent ||
        c.fields.size() != d.fields.size())
      return false;
    for (size_t j = 0; j < c.fields.size(); ++j)
      if (c.fields[j].name != d.fields[j].name ||
          c.fields[j].type != d.fields[j].type)
        return false;
  }
  for (size_t i = 0; i < a.methods.size(); ++i)
    if (!method_equal(a.methods[i], b.methods[i])) return false;
  return true;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_IR_HPP
