// interp.hpp -- concrete small-step executor for the IR. Runs both
// pre-transform bodies (trap-table dispatch) and transformed bodies
// (explicit @thrown control flow), and serves as the differential oracle
// for the exceptional-control-flow lowering.

#ifndef VIMPFORGE_INTERP_HPP
#define VIMPFORGE_INTERP_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vimpforge/expr_util.hpp"
#include "vimpforge/ir.hpp"

namespace vimpforge {

struct Value {
  enum class Kind { Int, Bool, Ref, Null, Void };
  Kind kind = Kind::Int;
  BigInt i;
  bool b = false;
  size_t ref = 0;  // 1-based heap index

  static Value int_v(BigInt v) { return {Kind::Int, std::move(v), false, 0}; }
  static Value bool_v(bool v) { return {Kind::Bool, 0, v, 0}; }
  static Value ref_v(size_t r) { return {Kind::Ref, 0, false, r}; }
  static Value null_v() { return {Kind::Null, 0, false, 0}; }
  static Value void_v() { return {Kind::Void, 0, false, 0}; }

  bool is_void() const { return kind == Kind::Void; }
  bool is_null() const { return kind == Kind::Null; }

  friend bool operator==(const Value &a, const Value &b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Int: return a.i == b.i;
      case Kind::Bool: return a.b == b.b;
      case Kind::Ref: return a.ref == b.ref;
      default: return true;
    }
  }
  friend bool operator!=(const Value &a, const Value &b) { return !(a == b); }
};

enum class CheckKind {
  Assert,
  InvariantEntry,
  InvariantIter,
  InvariantExit,
  Precondition,
  Postcondition,
};

struct Outcome {
  enum class Kind { Normal, Exceptional, CheckViolation, Diverged };
  Kind kind = Kind::Normal;
  Value value;                  // Normal
  std::string exception_class;  // Exceptional
  CheckKind check_kind = CheckKind::Assert;
  std::string site;  // CheckViolation: "Owner.method:line"

  static Outcome normal(Value v) {
    Outcome o;
    o.kind = Kind::Normal;
    o.value = std::move(v);
    return o;
  }
  static Outcome exceptional(std::string cls) {
    Outcome o;
    o.kind = Kind::Exceptional;
    o.exception_class = std::move(cls);
    return o;
  }
  static Outcome violation(CheckKind k, std::string site) {
    Outcome o;
    o.kind = Kind::CheckViolation;
    o.check_kind = k;
    o.site = std::move(site);
    return o;
  }
  static Outcome diverged() {
    Outcome o;
    o.kind = Kind::Diverged;
    return o;
  }

  friend bool operator==(const Outcome &a, const Outcome &b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Normal: return a.value == b.value;
      case Kind::Exceptional: return a.exception_class == b.exception_class;
      case Kind::CheckViolation:
        return a.check_kind == b.check_kind && a.site == b.site;
      case Kind::Diverged: return true;
    }
    return false;
  }
};

inline std::string to_string(const Outcome &o) {
  switch (o.kind) {
    case Outcome::Kind::Normal: {
      switch (o.value.kind) {
        case Value::Kind::Int: return "normal(" + o.value.i.str() + ")";
        case Value::Kind::Bool:
          return std::string("normal(") + (o.value.b ? "true" : "false") + ")";
        case Value::Kind::Ref:
          return "normal(ref#" + std::to_string(o.value.ref) + ")";
        case Value::Kind::Null: return "normal(null)";
        case Value::Kind::Void: return "normal(void)";
      }
      return "normal(?)";
    }
    case Outcome::Kind::Exceptional:
      return "exceptional(" + o.exception_class + ")";
    case Outcome::Kind::CheckViolation:
      return "check-violation(" + o.site + ")";
    case Outcome::Kind::Diverged: return "diverged";
  }
  return "?";
}

// Thrown on misuse or on semantics the artifact deliberately leaves
// undefined (division by zero, disabled-check violations).
struct InterpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Interpreter;

struct RunConfig {
  uint64_t step_budget = 100000;
  bool check_specs = false;
  bool implicit_null = false;
  bool implicit_bounds = false;
  // Deterministic stubs for contract-only methods, keyed "Owner.name".
  std::map<std::string,
           std::function<Value(Interpreter &, Value, const std::vector<Value> &)>>
      stubs;
};

class Interpreter {
 public:
  struct HeapObject {
    std::string class_name;  // empty for arrays
    bool is_array = false;
    std::map<std::string, Value> fields;
    std::vector<Value> elems;
  };

  Interpreter(const Program &program, RunConfig config)
      : program_(program), config_(std::move(config)) {}

  // Runs `method` on a fresh receiver of its owner class; fields start
  // zero-initialized.
  Outcome run(const MethodDecl &method, const std::vector<Value> &args) {
    thrown_ = Value::void_v();
    steps_ = 0;
    try {
      Value recv = allocate_object(method.owner);
      last_receiver_ = recv;
      ExecResult r = exec_method(method, recv, args);
      if (r.raised) return Outcome::exceptional(class_of(r.exception));
      if (!thrown_.is_void()) {
        // Transformed bodies propagate by returning with @thrown set.
        return Outcome::exceptional(class_of(thrown_));
      }
      return Outcome::normal(r.value);
    } catch (const DivergedSignal &) {
      return Outcome::diverged();
    } catch (const ViolationSignal &v) {
      return Outcome::violation(v.kind, v.site);
    }
  }

  // Heap inspection for tests.
  Value last_receiver() const { return last_receiver_; }
  const HeapObject &object(const Value &ref) const {
    if (ref.kind != Value::Kind::Ref || ref.ref == 0 || ref.ref > heap_.size())
      throw InterpError("bad reference");
    return heap_[ref.ref - 1];
  }
  Value field_of(const Value &ref, const std::string &field) const {
    const HeapObject &o = object(ref);
    auto it = o.fields.find(field);
    return it == o.fields.end() ? Value::int_v(0) : it->second;
  }

  Value allocate_object(const std::string &class_name) {
    HeapObject o;
    o.class_name = class_name;
    // Zero-initialize declared fields, walking up the hierarchy.
    const ClassDecl *c = program_.find_class(class_name);
    size_t guard = 0;
    while (c && guard++ <= program_.classes.size()) {
      for (const auto &f : c->fields) o.fields[f.name] = default_value(f.type);
      c = c->parent ? program_.find_class(*c->parent) : nullptr;
    }
    heap_.push_back(std::move(o));
    return Value::ref_v(heap_.size());
  }

  Value allocate_array(const TypeExpr &elem, const BigInt &length) {
    if (length < 0) throw InterpError("negative array length");
    HeapObject o;
    o.is_array = true;
    o.elems.assign(static_cast<size_t>(length), default_value(elem));
    heap_.push_back(std::move(o));
    return Value::ref_v(heap_.size());
  }

  const Program &program() const { return program_; }

 private:
  struct DivergedSignal {};
  struct ViolationSignal {
    CheckKind kind;
    std::string site;
  };
  struct ExecResult {
    Value value;
    bool raised = false;
    Value exception;
  };

  struct Frame {
    const MethodDecl *method = nullptr;
    std::map<std::string, Value> locals;
    Value current_exception;  // bound by `e := caught`
    // Pre-state snapshot for old() in contract checking.
    const std::vector<HeapObject> *old_heap = nullptr;
    std::map<size_t, uint64_t> visit_counts;  // header-assert visits
  };

  static Value default_value(const TypeExpr &t) {
    switch (t.kind) {
      case TypeExpr::Kind::Int: return Value::int_v(0);
      case TypeExpr::Kind::Bool: return Value::bool_v(false);
      default: return Value::null_v();
    }
  }

  std::string class_of(const Value &v) const {
    if (v.kind != Value::Kind::Ref) throw InterpError("class_of non-ref");
    return object(v).class_name;
  }

  void budget_tick() {
    if (++steps_ > config_.step_budget) throw DivergedSignal{};
  }

  bool check_enabled(const MethodDecl &m, bool null_check) const {
    CheckOverride o = null_check ? m.check_null : m.check_bounds;
    if (o == CheckOverride::On) return true;
    if (o == CheckOverride::Off) return false;
    return null_check ? config_.implicit_null : config_.implicit_bounds;
  }

  static bool truthy(const Value &v) {
    if (v.kind == Value::Kind::Bool) return v.b;
    if (v.kind == Value::Kind::Int) return v.i >= 1;
    throw InterpError("condition is not int or bool");
  }

  std::string site_of(const MethodDecl &m, const Instruction &ins) const {
    return m.qualified_name() + ":" + std::to_string(ins.pos.line);
  }

  // -- expression evaluation --

  Value eval(const ExprPtr &e, Frame &f) {
    using E = Expression;
    return std::visit(
        [&](const auto &x) -> Value {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, E::IntConst>) {
            return Value::int_v(x.value);
          } else if constexpr (std::is_same_v<T, E::BoolConst>) {
            return Value::bool_v(x.value);
          } else if constexpr (std::is_same_v<T, E::NullConst>) {
            return Value::null_v();
          } else if constexpr (std::is_same_v<T, E::VoidConst>) {
            return Value::void_v();
          } else if constexpr (std::is_same_v<T, E::Local>) {
            if (x.name == kThrownVar) return thrown_;
            auto it = f.locals.find(x.name);
            if (it == f.locals.end())
              throw InterpError("unbound local " + x.name);
            return it->second;
          } else if constexpr (std::is_same_v<T, E::FieldRead>) {
            Value t = eval(x.target, f);
            if (t.is_null()) throw InterpError("null dereference in eval");
            if (t.kind != Value::Kind::Ref)
              throw InterpError("field read on non-reference");
            return field_of(t, x.field);
          } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
            Value a = eval(x.target, f);
            Value i = eval(x.index, f);
            if (a.is_null()) throw InterpError("null dereference in eval");
            const HeapObject &o = object(a);
            if (i.kind != Value::Kind::Int || i.i < 0 ||
                i.i >= BigInt(o.elems.size()))
              throw InterpError("index out of bounds in eval");
            return o.elems[static_cast<size_t>(i.i)];
          } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
            Value a = eval(x.target, f);
            if (a.is_null()) throw InterpError("null dereference in eval");
            return Value::int_v(BigInt(object(a).elems.size()));
          } else if constexpr (std::is_same_v<T, E::Unary>) {
            Value v = eval(x.arg, f);
            if (x.op == UnOp::Neg) {
              // Grimp reuses unary minus as logical not on booleans.
              if (v.kind == Value::Kind::Bool) return Value::bool_v(!v.b);
              return Value::int_v(-v.i);
            }
            return Value::bool_v(!truthy(v));
          } else if constexpr (std::is_same_v<T, E::Binary>) {
            return eval_binary(x, f);
          } else if constexpr (std::is_same_v<T, E::Conditional>) {
            return truthy(eval(x.cond, f)) ? eval(x.then_expr, f)
                                           : eval(x.else_expr, f);
          } else if constexpr (std::is_same_v<T, E::InstanceOf>) {
            Value v = eval(x.arg, f);
            if (v.kind != Value::Kind::Ref) return Value::bool_v(false);
            return Value::bool_v(subtype_of(class_of(v), x.class_name,
                                            program_));
          } else if constexpr (std::is_same_v<T, E::IsVoid>) {
            return Value::bool_v(eval(x.arg, f).is_void());
          } else if constexpr (std::is_same_v<T, E::Old>) {
            if (!f.old_heap)
              throw InterpError("old() outside contract evaluation");
            std::vector<HeapObject> saved = heap_;
            heap_ = *f.old_heap;
            Value v;
            try {
              // Suspend old() inside old().
              const std::vector<HeapObject> *outer = f.old_heap;
              f.old_heap = nullptr;
              v = eval(x.arg, f);
              f.old_heap = outer;
            } catch (...) {
              heap_ = std::move(saved);
              throw;
            }
            heap_ = std::move(saved);
            return v;
          } else if constexpr (std::is_same_v<T, E::Quantifier>) {
            throw InterpError(
                "quantified expressions are not concretely evaluable");
          } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
            return eval_apply(x, f);
          }
        },
        e->node);
  }

  Value eval_binary(const Expression::Binary &x, Frame &f) {
    Value l = eval(x.left, f);
    Value r = eval(x.right, f);
    switch (x.op) {
      case BinOp::Add: return Value::int_v(l.i + r.i);
      case BinOp::Sub: return Value::int_v(l.i - r.i);
      case BinOp::Mul: return Value::int_v(l.i * r.i);
      case BinOp::Div:
        if (r.i == 0) throw InterpError("division by zero");
        return Value::int_v(l.i / r.i);
      case BinOp::Mod:
        if (r.i == 0) throw InterpError("division by zero");
        return Value::int_v(l.i % r.i);
      case BinOp::And: return Value::bool_v(truthy(l) && truthy(r));
      case BinOp::Or: return Value::bool_v(truthy(l) || truthy(r));
      case BinOp::Implies: return Value::bool_v(!truthy(l) || truthy(r));
      case BinOp::Eq: return Value::bool_v(l == r);
      case BinOp::Ne: return Value::bool_v(!(l == r));
      case BinOp::Lt: return Value::bool_v(l.i < r.i);
      case BinOp::Le: return Value::bool_v(l.i <= r.i);
      case BinOp::Gt: return Value::bool_v(l.i > r.i);
      case BinOp::Ge: return Value::bool_v(l.i >= r.i);
    }
    throw InterpError("bad binary op");
  }

  Value eval_apply(const Expression::PredicateApply &x, Frame &f) {
    // bblib operator applications evaluate natively.
    auto arg = [&](size_t i) { return eval(x.args[i], f); };
    if (x.name == "lt") return Value::bool_v(arg(0).i < arg(1).i);
    if (x.name == "lte") return Value::bool_v(arg(0).i <= arg(1).i);
    if (x.name == "gt") return Value::bool_v(arg(0).i > arg(1).i);
    if (x.name == "gte") return Value::bool_v(arg(0).i >= arg(1).i);
    if (x.name == "eq") return Value::bool_v(arg(0) == arg(1));
    if (x.name == "neq") return Value::bool_v(!(arg(0) == arg(1)));
    if (x.name == "not") return Value::bool_v(!truthy(arg(0)));
    if (x.name == "implies")
      return Value::bool_v(!truthy(arg(0)) || truthy(arg(1)));
    if (x.name == "conditional")
      return truthy(arg(0)) ? arg(1) : arg(2);
    // A declared predicate: run its (aggregable, straight-line) body.
    std::string owner, name = x.name;
    if (auto dot = name.find('.'); dot != std::string::npos) {
      owner = name.substr(0, dot);
      name = name.substr(dot + 1);
    } else {
      owner = f.method ? f.method->owner : "";
    }
    const MethodDecl *p = resolve_method(program_, owner, name);
    if (!p || !p->is_predicate)
      throw InterpError("unresolved predicate " + x.name);
    std::vector<Value> args;
    args.reserve(x.args.size());
    for (const auto &a : x.args) args.push_back(eval(a, f));
    Value recv = f.locals.count("this") ? f.locals.at("this")
                                        : Value::null_v();
    Frame pf;
    pf.method = p;
    pf.old_heap = f.old_heap;
    pf.locals["this"] = recv;
    size_t n = std::min(args.size(), p->params.size());
    for (size_t i = 0; i < n; ++i) pf.locals[p->params[i].name] = args[i];
    // Extra trailing binders (result, exc) beyond the declared parameters
    // were already substituted into contract expressions; a direct apply
    // must match the declared arity.
    if (args.size() != p->params.size())
      throw InterpError("predicate arity mismatch for " + x.name);
    // Straight-line evaluation: assignments then a final return.
    for (const auto &ins : p->body) {
      budget_tick();
      if (const auto *as = ins.as<Instruction::Assign>()) {
        const auto *lv = as->lhs ? std::get_if<LvLocal>(&*as->lhs) : nullptr;
        const auto *rhs = std::get_if<ExprPtr>(&as->rhs);
        if (!lv || !rhs)
          throw InterpError("non-aggregable predicate body " + x.name);
        pf.locals[lv->name] = eval(*rhs, pf);
      } else if (const auto *ret = ins.as<Instruction::Return>()) {
        if (!ret->value)
          throw InterpError("predicate returns no value: " + x.name);
        return eval(ret->value, pf);
      } else {
        throw InterpError("non-aggregable predicate body " + x.name);
      }
    }
    throw InterpError("predicate body fell through: " + x.name);
  }

  // -- potentially excepting instructions --

  // Returns a raised NPE/IOOBE exception, or nullopt when the access is
  // fine (or its check is disabled and no fault occurs).
  std::optional<Value> pei_null(const MethodDecl &m, const Value &target) {
    if (!target.is_null()) return std::nullopt;
    if (check_enabled(m, true))
      return allocate_object(kNullPointerException);
    throw InterpError("null dereference with checks disabled");
  }
  std::optional<Value> pei_bounds(const MethodDecl &m, const Value &array,
                                  const Value &index) {
    const HeapObject &o = object(array);
    if (index.kind == Value::Kind::Int && index.i >= 0 &&
        index.i < BigInt(o.elems.size()))
      return std::nullopt;
    if (check_enabled(m, false))
      return allocate_object(kIndexOutOfBoundsException);
    throw InterpError("index out of bounds with checks disabled");
  }

  // -- method execution --

  ExecResult exec_method(const MethodDecl &method, Value recv,
                         const std::vector<Value> &args) {
    if (!method.has_body) {
      auto it = config_.stubs.find(method.qualified_name());
      if (it == config_.stubs.end())
        throw InterpError("no stub for contract-only method " +
                          method.qualified_name());
      ExecResult r;
      r.value = it->second(*this, recv, args);
      return r;
    }
    if (args.size() != method.params.size())
      throw InterpError("argument count mismatch for " +
                        method.qualified_name());
    Frame f;
    f.method = &method;
    f.locals["this"] = recv;
    for (size_t i = 0; i < args.size(); ++i)
      f.locals[method.params[i].name] = args[i];
    for (const auto &l : method.locals)
      f.locals[l.name] = default_value(l.type);

    std::vector<HeapObject> pre_heap;
    if (config_.check_specs && method.contract) {
      pre_heap = heap_;
      Frame cf = f;
      cf.old_heap = &pre_heap;
      for (const auto &req : method.contract->requires_clauses)
        if (!truthy(eval(req, cf)))
          throw ViolationSignal{CheckKind::Precondition,
                                method.qualified_name()};
    }

    ExecResult r = exec_body(method, f);

    if (config_.check_specs && method.contract) {
      Frame cf = f;
      cf.old_heap = &pre_heap;
      Value exc = r.raised ? r.exception : thrown_;
      cf.locals[kExcBinder] = exc;
      cf.locals[kResultBinder] = r.raised ? default_return(method) : r.value;
      for (const auto &ens : method.contract->ensures_clauses)
        if (!truthy(eval(ens, cf)))
          throw ViolationSignal{CheckKind::Postcondition,
                                method.qualified_name()};
    }
    return r;
  }

  static Value default_return(const MethodDecl &m) {
    return m.return_type ? default_value(*m.return_type) : Value::void_v();
  }

  ExecResult exec_body(const MethodDecl &method, Frame &f) {
    // Label table.
    std::map<std::string, size_t> label_at;
    for (size_t i = 0; i < method.body.size(); ++i)
      for (const auto &l : method.body[i].labels) label_at[l] = i;
    auto jump = [&](const std::string &l) -> size_t {
      auto it = label_at.find(l);
      if (it == label_at.end()) throw InterpError("unknown label " + l);
      return it->second;
    };

    // Raise an exception at instruction index i: dispatch over the trap
    // table in order; unmatched exceptions propagate to the caller.
    auto dispatch = [&](size_t i, Value exc) -> std::optional<size_t> {
      for (const auto &t : method.traps) {
        auto b = label_at.find(t.begin);
        auto e = label_at.find(t.end);
        if (b == label_at.end() || e == label_at.end()) continue;
        if (i < b->second || i >= e->second) continue;
        if (subtype_of(class_of(exc), t.exception_type, program_)) {
          f.current_exception = exc;
          return jump(t.handler);
        }
      }
      return std::nullopt;
    };

    size_t pc = 0;
    while (pc < method.body.size()) {
      budget_tick();
      const Instruction &ins = method.body[pc];
      using I = Instruction;
      std::optional<Value> raised;  // set on an exception at this pc

      if (const auto *as = ins.as<I::Assign>()) {
        std::optional<Value> result;
        if (const auto *e = std::get_if<ExprPtr>(&as->rhs)) {
          raised = exec_pure_rhs(method, *e, f, result);
        } else if (const auto *no = std::get_if<NewObject>(&as->rhs)) {
          result = allocate_object(no->class_name);
        } else if (const auto *na = std::get_if<NewArray>(&as->rhs)) {
          Value len = eval(na->length, f);
          result = allocate_array(na->elem, len.i);
        } else {
          const auto &iv = std::get<Invoke>(as->rhs);
          Value recv = eval(iv.receiver, f);
          raised = pei_null(method, recv);
          if (!raised) {
            const TypeExpr *rt = nullptr;
            if (const auto *l = iv.receiver->as<Expression::Local>();
                l && l->name != "this") {
              for (const auto &p : method.params)
                if (p.name == l->name) rt = &p.type;
              for (const auto &lo : method.locals)
                if (lo.name == l->name) rt = &lo.type;
            }
            std::string static_class = rt && rt->is_ref() ? rt->class_name
                                                          : method.owner;
            // Dynamic dispatch by the receiver's runtime class, falling
            // back to the static type for stubs on opaque receivers.
            std::string dyn = class_of(recv);
            const MethodDecl *callee =
                resolve_method(program_, dyn, iv.method);
            if (!callee)
              callee = resolve_method(program_, static_class, iv.method);
            if (!callee)
              throw InterpError("unresolved call " + iv.method);
            std::vector<Value> call_args;
            call_args.reserve(iv.args.size());
            for (const auto &a : iv.args) call_args.push_back(eval(a, f));
            ExecResult cr = exec_method(*callee, recv, call_args);
            if (cr.raised) {
              raised = cr.exception;
            } else if (thrown_.is_void()) {
              result = cr.value;
            }
            // A lowered callee signals through @thrown and returns a
            // dummy; the store must not clobber the destination then,
            // mirroring the original's never-reached store.
          }
        }
        if (!raised && result && as->lhs) store(method, f, *as->lhs, *result,
                                                raised);
        if (!raised) {
          ++pc;
          continue;
        }
      } else if (const auto *ig = ins.as<I::IfGoto>()) {
        if (truthy(eval(ig->cond, f))) {
          pc = jump(ig->target);
        } else {
          ++pc;
        }
        continue;
      } else if (const auto *g = ins.as<I::Goto>()) {
        pc = jump(g->target);
        continue;
      } else if (const auto *ret = ins.as<I::Return>()) {
        ExecResult r;
        r.value = ret->value ? eval(ret->value, f) : Value::void_v();
        return r;
      } else if (const auto *th = ins.as<I::Throw>()) {
        Value exc = th->local == kThrownVar ? thrown_
                                            : f.locals.at(th->local);
        if (exc.is_null()) {
          // athrow on null raises NullPointerException (when checked).
          raised = pei_null(method, exc);
        } else {
          raised = exc;
        }
      } else if (const auto *cb = ins.as<I::CaughtBind>()) {
        f.locals[cb->local] = f.current_exception;
        ++pc;
        continue;
      } else if (const auto *ast = ins.as<I::AssertStmt>()) {
        if (config_.check_specs) {
          Frame sf = f;
          if (!truthy(eval(ast->expr, sf)))
            throw ViolationSignal{violation_kind(ins, f, pc),
                                  site_of(method, ins)};
        }
        f.visit_counts[pc]++;
        ++pc;
        continue;
      } else if (ins.is<I::AssumeStmt>()) {
        // Assumptions are verification-only; redundant at runtime.
        ++pc;
        continue;
      } else if (const auto *inv = ins.as<I::InvariantStmt>()) {
        if (config_.check_specs) {
          Frame sf = f;
          if (!truthy(eval(inv->expr, sf)))
            throw ViolationSignal{CheckKind::Assert, site_of(method, ins)};
        }
        ++pc;
        continue;
      } else {  // Nop
        ++pc;
        continue;
      }

      // An exception was raised at pc.
      if (raised) {
        auto target = dispatch(pc, *raised);
        if (target) {
          pc = *target;
          continue;
        }
        ExecResult r;
        r.raised = true;
        r.exception = *raised;
        r.value = Value::void_v();
        return r;
      }
      ++pc;
    }
    throw InterpError("control fell off the end of " +
                      method.qualified_name());
  }

  CheckKind violation_kind(const Instruction &ins, Frame &f, size_t pc) {
    switch (ins.assert_tag()) {
      case Instruction::AssertTag::InvariantHeader:
        return f.visit_counts[pc] == 0 ? CheckKind::InvariantEntry
                                       : CheckKind::InvariantIter;
      case Instruction::AssertTag::InvariantExit:
        return CheckKind::InvariantExit;
      default:
        return CheckKind::Assert;
    }
  }

  // Pure rhs expression that may contain a top-level heap access (a PEI).
  std::optional<Value> exec_pure_rhs(const MethodDecl &m, const ExprPtr &e,
                                     Frame &f, std::optional<Value> &out) {
    using E = Expression;
    if (const auto *fr = e->as<E::FieldRead>()) {
      Value t = eval(fr->target, f);
      if (auto exc = pei_null(m, t)) return exc;
      out = field_of(t, fr->field);
      return std::nullopt;
    }
    if (const auto *ar = e->as<E::ArrayRead>()) {
      Value a = eval(ar->target, f);
      if (auto exc = pei_null(m, a)) return exc;
      Value i = eval(ar->index, f);
      if (auto exc = pei_bounds(m, a, i)) return exc;
      out = object(a).elems[static_cast<size_t>(i.i)];
      return std::nullopt;
    }
    if (const auto *al = e->as<E::ArrayLength>()) {
      Value a = eval(al->target, f);
      if (auto exc = pei_null(m, a)) return exc;
      out = Value::int_v(BigInt(object(a).elems.size()));
      return std::nullopt;
    }
    out = eval(e, f);
    return std::nullopt;
  }

  void store(const MethodDecl &m, Frame &f, const Lvalue &lhs, Value v,
             std::optional<Value> &raised) {
    if (const auto *ll = std::get_if<LvLocal>(&lhs)) {
      if (ll->name == kThrownVar) {
        thrown_ = std::move(v);
      } else {
        f.locals[ll->name] = std::move(v);
      }
      return;
    }
    if (const auto *lf = std::get_if<LvField>(&lhs)) {
      Value t = eval(lf->target, f);
      if (auto exc = pei_null(m, t)) {
        raised = exc;
        return;
      }
      heap_[t.ref - 1].fields[lf->field] = std::move(v);
      return;
    }
    const auto &la = std::get<LvArray>(lhs);
    Value a = eval(la.target, f);
    if (auto exc = pei_null(m, a)) {
      raised = exc;
      return;
    }
    Value i = eval(la.index, f);
    if (auto exc = pei_bounds(m, a, i)) {
      raised = exc;
      return;
    }
    heap_[a.ref - 1].elems[static_cast<size_t>(i.i)] = std::move(v);
  }

  const Program &program_;
  RunConfig config_;
  std::vector<HeapObject> heap_;
  Value thrown_ = Value::void_v();
  Value last_receiver_ = Value::null_v();
  uint64_t steps_ = 0;
};

inline Outcome run_method(const Program &program, const MethodDecl &method,
                          const std::vector<Value> &args,
                          const RunConfig &config = {}) {
  Interpreter interp(program, config);
  return interp.run(method, args);
}

}  // namespace vimpforge

#endif  // VIMPFORGE_INTERP_HPP
