// boogie.hpp -- the final encoding: emits a deterministic Boogie program
// with a fixed prelude (heap, arrays, type tree, instanceof axioms), one
// total function per specification predicate, and one procedure per
// method, with contracts phrased over a global `thrown` variable.

#ifndef VIMPFORGE_BOOGIE_HPP
#define VIMPFORGE_BOOGIE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vimpforge/expr_transform.hpp"
#include "vimpforge/ir.hpp"

namespace vimpforge {

struct BoogieOptions {
  bool smoke = false;
};

// One entry per emitted assertion: the 1-based line in the .bpl text and
// the IR position it checks.
struct BoogieMapEntry {
  int boogie_line = 0;
  std::string method;  // qualified name; empty for prelude-level items
  int ir_line = 0;
  int ir_col = 0;
  std::string kind;  // "assert" | "invariant-header" | "invariant-exit" |
                     // "requires" | "ensures" | "smoke"
};

struct BoogieUnit {
  std::string text;
  std::vector<BoogieMapEntry> source_map;

  std::string map_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &e : source_map) {
      arr.push_back({{"boogie_line", e.boogie_line},
                     {"method", e.method},
                     {"ir_line", e.ir_line},
                     {"ir_col", e.ir_col},
                     {"kind", e.kind}});
    }
    return arr.dump(2) + "\n";
  }
};

namespace bdetail {

inline std::string ty_const(const std::string &cls) { return "ty$" + cls; }

inline std::string boogie_type(const TypeExpr &t) {
  switch (t.kind) {
    case TypeExpr::Kind::Int: return "int";
    case TypeExpr::Kind::Bool: return "bool";
    default: return "Ref";
  }
}

// Stable class ordering: forest pre-order with roots and children sorted
// by name.
inline std::vector<const ClassDecl *> preorder_classes(const Program &p) {
  std::map<std::string, std::vector<const ClassDecl *>> children;
  std::vector<const ClassDecl *> roots;
  for (const auto &c : p.classes) {
    if (c.parent && p.find_class(*c.parent))
      children[*c.parent].push_back(&c);
    else
      roots.push_back(&c);
  }
  auto by_name = [](const ClassDecl *a, const ClassDecl *b) {
    return a->name < b->name;
  };
  std::sort(roots.begin(), roots.end(), by_name);
  for (auto &[k, v] : children) std::sort(v.begin(), v.end(), by_name);
  std::vector<const ClassDecl *> out;
  std::vector<const ClassDecl *> stack(roots.rbegin(), roots.rend());
  while (!stack.empty()) {
    const ClassDecl *c = stack.back();
    stack.pop_back();
    out.push_back(c);
    auto it = children.find(c->name);
    if (it != children.end())
      for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit)
        stack.push_back(*rit);
  }
  return out;
}

// The class (in c's hierarchy) that declares the named field.
inline const ClassDecl *field_owner(const Program &p, const std::string &cls,
                                    const std::string &field) {
  const ClassDecl *cur = p.find_class(cls);
  size_t steps = 0;
  while (cur) {
    for (const auto &f : cur->fields)
      if (f.name == field) return cur;
    if (!cur->parent || ++steps > p.classes.size()) return nullptr;
    cur = p.find_class(*cur->parent);
  }
  return nullptr;
}

inline const FieldDecl *field_decl(const Program &p, const std::string &cls,
                                   const std::string &field) {
  const ClassDecl *owner = field_owner(p, cls, field);
  if (!owner) return nullptr;
  for (const auto &f : owner->fields)
    if (f.name == field) return &f;
  return nullptr;
}

// Full type synthesis for the expressions the emitter must resolve
// (array element types, field owners). Falls back to nullopt on anything
// it cannot see; callers then default conservatively.
struct TypeScope {
  const Program &program;
  std::map<std::string, TypeExpr> vars;

  std::optional<TypeExpr> infer(const ExprPtr &e) const {
    using E = Expression;
    if (!e) return std::nullopt;
    if (const auto *l = e->as<E::Local>()) {
      auto it = vars.find(l->name);
      if (it != vars.end()) return it->second;
      return std::nullopt;
    }
    if (const auto *fr = e->as<E::FieldRead>()) {
      auto tt = infer(fr->target);
      if (!tt || !tt->is_ref()) return std::nullopt;
      const FieldDecl *fd = field_decl(program, tt->class_name, fr->field);
      if (!fd) return std::nullopt;
      return fd->type;
    }
    if (const auto *ar = e->as<E::ArrayRead>()) {
      auto tt = infer(ar->target);
      if (!tt || !tt->is_array()) return std::nullopt;
      return *tt->elem;
    }
    if (const auto *o = e->as<E::Old>()) return infer(o->arg);
    if (e->is<E::IntConst>() || e->is<E::ArrayLength>())
      return TypeExpr::int_type();
    if (e->is<E::BoolConst>() || e->is<E::InstanceOf>() ||
        e->is<E::IsVoid>() || e->is<E::Quantifier>())
      return TypeExpr::bool_type();
    return std::nullopt;
  }
};

inline TypeScope make_scope(const Program &p, const MethodDecl &m) {
  TypeScope s{p, {}};
  s.vars["this"] = TypeExpr::ref(m.owner);
  s.vars[kThrownVar] = TypeExpr::ref(kThrowable);
  s.vars[kExcBinder] = TypeExpr::ref(kThrowable);
  if (m.return_type) s.vars[kResultBinder] = *m.return_type;
  for (const auto &pr : m.params) s.vars[pr.name] = pr.type;
  for (const auto &l : m.locals) s.vars[l.name] = l.type;
  return s;
}

// Which of the three element-typed array heaps an access goes through.
inline std::string arr_heap_for(const std::optional<TypeExpr> &elem) {
  if (elem) {
    if (elem->kind == TypeExpr::Kind::Bool) return "arrHeapBool";
    if (elem->kind == TypeExpr::Kind::Ref ||
        elem->kind == TypeExpr::Kind::Array)
      return "arrHeapRef";
  }
  return "arrHeapInt";
}

// Expression printer. `pre` switches heap references to the procedure's
// entry state (inside old()); contracts resolve the exc binder to thrown.
struct ExprPrinter {
  const Program &program;
  const TypeScope &scope;
  const MethodDecl *method = nullptr;  // for unqualified predicate names
  bool in_contract = false;
  // Preconditions are single-state: old() may not appear in a Boogie
  // requires clause, and the pre-state *is* the current state there.
  bool pre_is_current = false;

  std::string heap(bool pre) const {
    return pre && !pre_is_current ? "old(heap)" : "heap";
  }
  std::string arr(bool pre, const std::optional<TypeExpr> &elem) const {
    std::string h = arr_heap_for(elem);
    return pre && !pre_is_current ? "old(" + h + ")" : h;
  }

  std::string local_name(const std::string &n) const {
    if (n == kThrownVar) return "thrown";
    if (in_contract && n == kExcBinder) return "thrown";
    return n;
  }

  std::string qualify(const std::string &name) const {
    if (name.find('.') != std::string::npos) return name;
    if (method && program.find_method(method->owner, name))
      return method->owner + "." + name;
    return name;
  }

  std::string tx(const ExprPtr &e, bool pre) const {
    using E = Expression;
    if (const auto *i = e->as<E::IntConst>()) {
      std::string s = i->value.str();
      return i->value < 0 ? "(" + s + ")" : s;
    }
    if (const auto *b = e->as<E::BoolConst>())
      return b->value ? "true" : "false";
    if (e->is<E::NullConst>()) return "Null";
    if (e->is<E::VoidConst>()) return "Void";
    if (const auto *l = e->as<E::Local>()) {
      std::string n = local_name(l->name);
      // In two-state contexts, parameters are immutable, but `result`
      // and `thrown` are not; old() still reads their entry values.
      if (pre && !pre_is_current && (n == "thrown" || n == kResultBinder))
        return "old(" + n + ")";
      return n;
    }
    if (const auto *fr = e->as<E::FieldRead>()) {
      auto tt = scope.infer(fr->target);
      std::string owner =
          tt && tt->is_ref()
              ? (field_owner(program, tt->class_name, fr->field)
                     ? field_owner(program, tt->class_name, fr->field)->name
                     : tt->class_name)
              : "";
      std::string fld = "fld$" + (owner.empty() ? fr->field
                                                : owner + "." + fr->field);
      return heap(pre) + "[" + tx(fr->target, pre) + ", " + fld + "]";
    }
    if (const auto *ar = e->as<E::ArrayRead>()) {
      auto tt = scope.infer(ar->target);
      std::optional<TypeExpr> elem;
      if (tt && tt->is_array()) elem = *tt->elem;
      return arr(pre, elem) + "[" + tx(ar->target, pre) + "][" +
             tx(ar->index, pre) + "]";
    }
    if (const auto *al = e->as<E::ArrayLength>())
      return "arrlen(" + tx(al->target, pre) + ")";
    if (const auto *u = e->as<E::Unary>()) {
      std::string a = tx(u->arg, pre);
      return u->op == UnOp::Not ? "!(" + a + ")" : "(-" + a + ")";
    }
    if (const auto *b = e->as<E::Binary>()) {
      static const std::map<BinOp, std::string> ops = {
          {BinOp::Add, "+"},  {BinOp::Sub, "-"},   {BinOp::Mul, "*"},
          {BinOp::Div, "div"}, {BinOp::Mod, "mod"}, {BinOp::And, "&&"},
          {BinOp::Or, "||"},  {BinOp::Implies, "==>"}, {BinOp::Eq, "=="},
          {BinOp::Ne, "!="},  {BinOp::Lt, "<"},    {BinOp::Le, "<="},
          {BinOp::Gt, ">"},   {BinOp::Ge, ">="}};
      return "(" + tx(b->left, pre) + " " + ops.at(b->op) + " " +
             tx(b->right, pre) + ")";
    }
    if (const auto *c = e->as<E::Conditional>())
      return "(if " + tx(c->cond, pre) + " then " + tx(c->then_expr, pre) +
             " else " + tx(c->else_expr, pre) + ")";
    if (const auto *io = e->as<E::InstanceOf>())
      return "instanceOf(" + tx(io->arg, pre) + ", " +
             ty_const(io->class_name) + ")";
    if (const auto *iv = e->as<E::IsVoid>())
      return "(" + tx(iv->arg, pre) + " == Void)";
    if (const auto *o = e->as<E::Old>()) return tx(o->arg, true);
    if (const auto *q = e->as<E::Quantifier>()) {
      std::string kw = q->kind == QuantKind::Forall ? "forall" : "exists";
      return "(" + kw + " " + q->var + ": " + boogie_type(q->var_type) +
             " :: " + tx(q->body, pre) + ")";
    }
    if (const auto *pa = e->as<E::PredicateApply>()) {
      std::string name = qualify(pa->name);
      std::string call = name + "(" + heap(true) + ", " + heap(pre);
      call += ", this";
      for (const auto &a : pa->args) call += ", " + tx(a, pre);
      return call + ")";
    }
    return "/* unsupported */ false";
  }
};

// Basic-block leaders of a method body (for smoke instrumentation).
inline std::vector<bool> block_leaders(const MethodDecl &m) {
  std::vector<bool> leader(m.body.size(), false);
  if (!m.body.empty()) leader[0] = true;
  for (size_t i = 0; i < m.body.size(); ++i) {
    if (!m.body[i].labels.empty()) leader[i] = true;
    using I = Instruction;
    const auto &ins = m.body[i];
    if ((ins.is<I::IfGoto>() || ins.is<I::Goto>() || ins.is<I::Return>() ||
         ins.is<I::Throw>()) &&
        i + 1 < m.body.size())
      leader[i + 1] = true;
  }
  return leader;
}

class Emitter {
 public:
  Emitter(const Program &p, const BoogieOptions &opts)
      : program_(p), opts_(opts) {}

  BoogieUnit run() {
    prelude();
    classes();
    predicates();
    procedures();
    BoogieUnit u;
    std::string text;
    for (const auto &l : lines_) {
      text += l;
      text += '\n';
    }
    u.text = std::move(text);
    u.source_map = std::move(map_);
    return u;
  }

 private:
  const Program &program_;
  BoogieOptions opts_;
  std::vector<std::string> lines_;
  std::vector<BoogieMapEntry> map_;
  int smoke_counter_ = 0;

  void line(const std::string &s) { lines_.push_back(s); }
  int next_line() const { return static_cast<int>(lines_.size()) + 1; }

  void map_entry(const std::string &method, SourcePos pos,
                 const std::string &kind) {
    map_.push_back({next_line(), method, pos.line, pos.col, kind});
  }

  void prelude() {
    line("// generated by vimpforge -- do not edit");
    line("type Ref;");
    line("type Field a;");
    line("type HeapType = <a>[Ref, Field a]a;");
    line("type TypeName;");
    line("");
    line("const unique Null: Ref;");
    line("const unique Void: Ref;");
    line("");
    line("var heap: HeapType;");
    line("var arrHeapInt: [Ref][int]int;");
    line("var arrHeapBool: [Ref][int]bool;");
    line("var arrHeapRef: [Ref][int]Ref;");
    line("var alloc: [Ref]bool;");
    line("var thrown: Ref;");
    line("");
    line("function arrlen(r: Ref): int;");
    line("");
    line("function subtype(a: TypeName, b: TypeName): bool;");
    line("axiom (forall a: TypeName :: subtype(a, a));");
    line("axiom (forall a: TypeName, b: TypeName, c: TypeName ::");
    line("  subtype(a, b) && subtype(b, c) ==> subtype(a, c));");
    line("axiom (forall a: TypeName, b: TypeName ::");
    line("  subtype(a, b) && subtype(b, a) ==> a == b);");
    line("");
    line("function typeof(r: Ref): TypeName;");
    line("function instanceOf(r: Ref, t: TypeName): bool");
    line("{ r != Null && r != Void && subtype(typeof(r), t) }");
    line("");
  }

  void classes() {
    auto order = preorder_classes(program_);
    for (const ClassDecl *c : order)
      line("const unique " + ty_const(c->name) + ": TypeName;");
    for (const ClassDecl *c : order)
      for (const auto &f : c->fields)
        line("const unique fld$" + c->name + "." + f.name + ": Field " +
             boogie_type(f.type) + ";");
    line("");
    for (const auto &a : exception_axioms(program_)) line(a);
    line("");
  }

  // ---- predicates ---------------------------------------------------

  std::string predicate_signature(const MethodDecl &m) const {
    std::string sig = m.qualified_name() +
                      "(preHeap: HeapType, curHeap: HeapType, this: Ref";
    for (const auto &p : m.params)
      sig += ", " + p.name + ": " + boogie_type(p.type);
    sig += ")";
    return sig;
  }

  void predicates() {
    std::vector<const MethodDecl *> preds;
    for (const auto &m : program_.methods)
      if (m.is_predicate) preds.push_back(&m);
    std::sort(preds.begin(), preds.end(),
              [](const MethodDecl *a, const MethodDecl *b) {
                return a->qualified_name() < b->qualified_name();
              });
    for (const MethodDecl *m : preds) {
      // Post-aggregation bodies are a single `return E;`.
      ExprPtr body;
      for (const auto &ins : m->body)
        if (const auto *r = ins.as<Instruction::Return>())
          if (r->value) body = r->value;
      TypeScope scope = make_scope(program_, *m);
      ExprPrinter pr{program_, scope, m, false};
      // Inside a predicate the "current" state is the curHeap argument
      // and old() refers to preHeap; rename via the pre flag.
      PredPrinter pp{pr};
      line("function " + predicate_signature(*m) + ": bool");
      if (body)
        line("{ " + pp.tx(body, false) + " }");
      else
        line(";");
      line("");
    }
  }

  // A printer whose two states are the preHeap/curHeap parameters rather
  // than the global heap.
  struct PredPrinter {
    ExprPrinter base;
    std::string tx(const ExprPtr &e, bool pre) const {
      ExprPrinter p = base;
      return rewrite(p.tx(e, pre));
    }
    static std::string rewrite(std::string s) {
      s = replace_all(s, "old(heap)", "preHeap");
      s = replace_all(s, "heap[", "curHeap[");
      return s;
    }
    static std::string replace_all(std::string s, const std::string &from,
                                   const std::string &to) {
      size_t pos = 0;
      while ((pos = s.find(from, pos)) != std::string::npos) {
        // Only replace standalone occurrences (not preHeap/curHeap).
        if (pos > 0 && (isalnum(static_cast<unsigned char>(s[pos - 1])) ||
                        s[pos - 1] == '$' || s[pos - 1] == '_')) {
          pos += from.size();
          continue;
        }
        s.replace(pos, from.size(), to);
        pos += to.size();
      }
      return s;
    }
  };

  // ---- procedures ---------------------------------------------------

  void procedures() {
    std::vector<const MethodDecl *> procs;
    for (const auto &m : program_.methods)
      if (!m.is_predicate) procs.push_back(&m);
    std::sort(procs.begin(), procs.end(),
              [](const MethodDecl *a, const MethodDecl *b) {
                return a->qualified_name() < b->qualified_name();
              });
    for (const MethodDecl *m : procs) emit_procedure(*m);
  }

  void emit_procedure(const MethodDecl &m) {
    TypeScope scope = make_scope(program_, m);
    ExprPrinter pr{program_, scope, &m, false};

    std::string sig = "procedure " + m.qualified_name() + "(this: Ref";
    for (const auto &p : m.params)
      sig += ", " + p.name + ": " + boogie_type(p.type);
    sig += ")";
    if (m.return_type)
      sig += " returns (result: " + boogie_type(*m.return_type) + ")";
    line(sig);
    line("  modifies heap, arrHeapInt, arrHeapBool, arrHeapRef, alloc, "
         "thrown;");
    ExprPrinter cpr = pr;
    cpr.in_contract = true;
    if (m.contract) {
      ExprPrinter rpr = cpr;
      rpr.pre_is_current = true;
      for (const auto &r : m.contract->requires_clauses) {
        map_entry(m.qualified_name(), r ? r->pos : SourcePos{}, "requires");
        line("  requires " + rpr.tx(r, false) + ";");
      }
      for (const auto &e : m.contract->ensures_clauses) {
        map_entry(m.qualified_name(), e ? e->pos : SourcePos{}, "ensures");
        line("  ensures " + cpr.tx(e, false) + ";");
      }
    }
    if (!m.has_body) {
      // Opaque: contract-only procedure declaration.
      line("");
      return;
    }
    line("{");
    for (const auto &l : m.locals) {
      if (l.is_binding) continue;  // consumed by quantifier lifting
      line("  var " + l.name + ": " + boogie_type(l.type) + ";");
    }
    line("  var tmp$int: int;");
    line("  var tmp$bool: bool;");
    line("  var tmp$ref: Ref;");

    std::vector<bool> leader = block_leaders(m);
    for (size_t i = 0; i < m.body.size(); ++i) {
      // Smoke: before leaving each basic block (i.e. before a block's
      // final jump/return, or after its last instruction otherwise).
      bool block_ends_after =
          i + 1 == m.body.size() || leader[i + 1];
      const Instruction &ins = m.body[i];
      using I = Instruction;
      bool is_jump = ins.is<I::IfGoto>() || ins.is<I::Goto>() ||
                     ins.is<I::Return>() || ins.is<I::Throw>();
      if (opts_.smoke && block_ends_after && is_jump) smoke(m, ins.pos);
      emit_instruction(m, ins, pr, scope);
      if (opts_.smoke && block_ends_after && !is_jump) smoke(m, ins.pos);
    }
    line("}");
    line("");
  }

  void smoke(const MethodDecl &m, SourcePos pos) {
    map_entry(m.qualified_name(), pos, "smoke");
    line("  smoke$" + std::to_string(smoke_counter_++) +
         ": assert false;");
  }

  static std::string assert_kind(const Instruction &ins) {
    switch (ins.assert_tag()) {
      case Instruction::AssertTag::InvariantHeader:
        return "invariant-header";
      case Instruction::AssertTag::InvariantExit: return "invariant-exit";
      default: return "assert";
    }
  }

  void fresh_alloc(const std::string &dst) {
    line("  havoc " + dst + ";");
    line("  assume !alloc[" + dst + "] && " + dst + " != Null && " + dst +
         " != Void;");
    line("  alloc[" + dst + "] := true;");
  }

  void emit_instruction(const MethodDecl &m, const Instruction &ins,
                        const ExprPrinter &pr, const TypeScope &scope) {
    for (const auto &l : ins.labels) line("  " + l + ":");
    using I = Instruction;

    if (const auto *as = ins.as<I::Assign>()) {
      emit_assign(m, *as, pr, scope);
      return;
    }
    if (const auto *ig = ins.as<I::IfGoto>()) {
      line("  if (" + pr.tx(ig->cond, false) + ") { goto " + ig->target +
           "; }");
      return;
    }
    if (const auto *g = ins.as<I::Goto>()) {
      line("  goto " + g->target + ";");
      return;
    }
    if (const auto *r = ins.as<I::Return>()) {
      if (r->value) line("  result := " + pr.tx(r->value, false) + ";");
      line("  return;");
      return;
    }
    if (const auto *t = ins.as<I::Throw>()) {
      // Should be lowered before emission; encode the explicit meaning.
      line("  thrown := " + pr.local_name(t->local) + ";");
      line("  return;");
      return;
    }
    if (const auto *cb = ins.as<I::CaughtBind>()) {
      line("  " + cb->local + " := thrown;");
      line("  thrown := Void;");
      return;
    }
    if (const auto *iv = ins.as<I::InvariantStmt>()) {
      map_entry(m.qualified_name(), ins.pos, "assert");
      line("  assert " + pr.tx(iv->expr, false) + ";");
      line("  assume " + pr.tx(iv->expr, false) + ";");
      return;
    }
    if (const auto *a = ins.as<I::AssertStmt>()) {
      map_entry(m.qualified_name(), ins.pos, assert_kind(ins));
      line("  assert " + pr.tx(a->expr, false) + ";");
      return;
    }
    if (const auto *u = ins.as<I::AssumeStmt>()) {
      line("  assume " + pr.tx(u->expr, false) + ";");
      return;
    }
    line("  assume true;");  // Nop (possibly a label carrier)
  }

  void emit_assign(const MethodDecl &m, const Instruction::Assign &as,
                   const ExprPrinter &pr, const TypeScope &scope) {
    // Destination: local name, or a typed scratch variable that is then
    // stored into the heap cell.
    std::string dst;
    std::optional<TypeExpr> dst_type;
    const LvLocal *ll = as.lhs ? std::get_if<LvLocal>(&*as.lhs) : nullptr;
    if (ll) {
      dst = pr.local_name(ll->name);
      auto it = scope.vars.find(ll->name);
      if (it != scope.vars.end()) dst_type = it->second;
    }

    auto store_indirect = [&](const std::string &value,
                              const std::optional<TypeExpr> &vt) {
      if (const auto *lf = std::get_if<LvField>(&*as.lhs)) {
        auto tt = scope.infer(lf->target);
        const ClassDecl *owner =
            tt && tt->is_ref() ? field_owner(program_, tt->class_name,
                                             lf->field)
                               : nullptr;
        std::string fld =
            "fld$" + (owner ? owner->name + "." + lf->field : lf->field);
        line("  heap[" + pr.tx(lf->target, false) + ", " + fld +
             "] := " + value + ";");
      } else if (const auto *la = std::get_if<LvArray>(&*as.lhs)) {
        auto tt = scope.infer(la->target);
        std::optional<TypeExpr> elem;
        if (tt && tt->is_array()) elem = *tt->elem;
        (void)vt;  // value type is implied by the element heap
        line("  " + arr_heap_for(elem) + "[" + pr.tx(la->target, false) +
             "][" + pr.tx(la->index, false) + "] := " + value + ";");
      }
    };

    if (const auto *e = std::get_if<ExprPtr>(&as.rhs)) {
      std::string v = pr.tx(*e, false);
      if (ll) {
        line("  " + dst + " := " + v + ";");
      } else if (as.lhs) {
        store_indirect(v, scope.infer(*e));
      }
      return;
    }
    if (const auto *no = std::get_if<NewObject>(&as.rhs)) {
      std::string target = ll ? dst : "tmp$ref";
      fresh_alloc(target);
      line("  assume typeof(" + target + ") == " +
           ty_const(no->class_name) + ";");
      if (!ll && as.lhs) store_indirect(target, TypeExpr::ref(no->class_name));
      return;
    }
    if (const auto *na = std::get_if<NewArray>(&as.rhs)) {
      std::string target = ll ? dst : "tmp$ref";
      fresh_alloc(target);
      line("  assume arrlen(" + target + ") == " + pr.tx(na->length, false) +
           ";");
      if (!ll && as.lhs) store_indirect(target, std::nullopt);
      return;
    }
    if (const auto *iv = std::get_if<Invoke>(&as.rhs)) {
      // Resolve the callee by the receiver's declared type.
      std::string recv_class = m.owner;
      if (const auto *l = iv->receiver->as<Expression::Local>();
          l && l->name != "this") {
        auto it = scope.vars.find(l->name);
        if (it != scope.vars.end() && it->second.is_ref())
          recv_class = it->second.class_name;
      }
      const MethodDecl *callee = resolve_in_hierarchy(recv_class, iv->method);
      std::string call = (callee ? callee->qualified_name()
                                 : recv_class + "." + iv->method) +
                         "(" + pr.tx(iv->receiver, false);
      for (const auto &a : iv->args) call += ", " + pr.tx(a, false);
      call += ")";
      bool has_result = callee ? callee->return_type.has_value() : true;
      if (!has_result) {
        line("  call " + call + ";");
        return;
      }
      std::string out = "tmp$int";
      if (callee && callee->return_type) {
        if (callee->return_type->kind == TypeExpr::Kind::Bool)
          out = "tmp$bool";
        else if (callee->return_type->kind != TypeExpr::Kind::Int)
          out = "tmp$ref";
      }
      if (ll)
        line("  call " + dst + " := " + call + ";");
      else
        line("  call " + out + " := " + call + ";");
      if (!ll && as.lhs)
        store_indirect(out, callee ? callee->return_type : std::nullopt);
      return;
    }
  }

  const MethodDecl *resolve_in_hierarchy(const std::string &cls,
                                         const std::string &name) const {
    const ClassDecl *c = program_.find_class(cls);
    size_t steps = 0;
    while (c) {
      if (const MethodDecl *m = program_.find_method(c->name, name)) return m;
      if (!c->parent || ++steps > program_.classes.size()) break;
      c = program_.find_class(*c->parent);
    }
    return program_.find_method(cls, name);
  }

 public:
  // The tree-shaped part of the axiomatization: one edge axiom per
  // parent link plus one disjointness axiom per unordered sibling pair.
  static std::vector<std::string> exception_axioms(const Program &p) {
    std::vector<std::string> out;
    auto order = preorder_classes(p);
    for (const ClassDecl *c : order) {
      if (c->parent && p.find_class(*c->parent))
        out.push_back("axiom subtype(" + ty_const(c->name) + ", " +
                      ty_const(*c->parent) + ");");
    }
    for (const ClassDecl *c : order) {
      std::vector<std::string> kids;
      for (const ClassDecl *k : order)
        if (k->parent && *k->parent == c->name) kids.push_back(k->name);
      std::sort(kids.begin(), kids.end());
      for (size_t i = 0; i < kids.size(); ++i)
        for (size_t j = i + 1; j < kids.size(); ++j)
          out.push_back(
              "axiom (forall x: TypeName, y: TypeName :: subtype(x, " +
              ty_const(kids[i]) + ") && subtype(y, " + ty_const(kids[j]) +
              ") ==> !subtype(x, y) && !subtype(y, x));");
    }
    return out;
  }
};

}  // namespace bdetail

inline std::vector<std::string> emit_exception_axioms(const Program &p) {
  return bdetail::Emitter::exception_axioms(p);
}

inline BoogieUnit emit_boogie(const Program &p, BoogieOptions opts = {}) {
  bdetail::Emitter e(p, opts);
  return e.run();
}

}  // namespace vimpforge

#endif  // VIMPFORGE_BOOGIE_HPP
