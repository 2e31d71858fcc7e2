#include <algorithm>
#include <random>

#include "doctest.h"
#include "gen.hpp"
#include "vimpforge/exc_transform.hpp"
#include "vimpforge/interp.hpp"
#include "vimpforge/parser.hpp"
#include "vimpforge/validate.hpp"

using namespace vimpforge;

namespace {

Program must_parse(const std::string &src) {
  auto r = parse_program(src);
  REQUIRE(r.ok());
  auto diags = validate_program(r.program);
  for (const auto &d : diags) CAPTURE(d.message);
  REQUIRE(diags.empty());
  return r.program;
}

const char *kTryCatch = R"(
class E extends Throwable;
class O;

method O.size(): int;

method O.run(O o): int {
  var int x;
  var E e;
  l1: x := o.size();
  l2: if x != 0 goto l5;
  l3: e := new E();
  l4: throw e;
  l5: goto l6;
  hE: e := caught;
      x := 1;
  l6: return x;
}
traps {
  trap l1 .. l5 catch E goto hE;
}
)";

// Runs every generated method of `p` and its transformed twin on the same
// inputs; returns a description of the first mismatch, or "".
std::string differential(const Program &p, std::mt19937 &rng,
                         int inputs_per_method) {
  Program t = p;
  ExcFlags flags{true, true};
  auto diags = transform_exceptions(t, flags);
  if (!diags.empty()) return "transform diagnostics: " + diags[0].message;
  RunConfig cfg;
  cfg.implicit_null = true;
  cfg.implicit_bounds = true;
  cfg.step_budget = 1000000;
  for (const auto &m : p.methods) {
    if (!m.has_body) continue;
    const MethodDecl *tm = t.find_method(m.owner, m.name);
    for (int k = 0; k < inputs_per_method; ++k) {
      std::vector<Value> args;
      for (size_t i = 0; i < m.params.size(); ++i)
        args.push_back(Value::int_v(static_cast<int>(rng() % 10) - 3));
      Outcome a = run_method(p, m, args, cfg);
      Outcome b = run_method(t, *tm, args, cfg);
      if (!(a == b))
        return m.qualified_name() + ": " + to_string(a) +
               " != " + to_string(b) + "\n" + render_program(p);
    }
  }
  return "";
}

}  // namespace

TEST_CASE("golden: the try-catch program lowers to the explicit form") {
  Program p = must_parse(kTryCatch);
  MethodDecl &m = *const_cast<MethodDecl *>(p.find_method("O", "run"));
  auto diags = transform_body(m, {}, p);
  CHECK(diags.empty());
  CHECK(m.traps.empty());

  Program expected_p = must_parse(R"(
class E extends Throwable;
class O;

method O.size(): int;

method O.run(O o): int {
  var int x;
  var E e;
  l1: x := o.size();
  if @thrown == void goto skip$0;
  if !(@thrown instanceof E) goto skip$1;
  goto hE;
  skip$1: return;
  skip$0: l2: if x != 0 goto l5;
  l3: e := new E();
  l4: @thrown := e;
  if !(@thrown instanceof E) goto skip$2;
  goto hE;
  skip$2: return;
  l5: goto l6;
  hE: e := @thrown;
  @thrown := void;
  x := 1;
  l6: return x;
}
)");
  const MethodDecl &exp = *expected_p.find_method("O", "run");
  REQUIRE(m.body.size() == exp.body.size());
  for (size_t i = 0; i < m.body.size(); ++i) {
    CAPTURE(i);
    CHECK(instr_equal(m.body[i], exp.body[i]));
  }

  // Entry carries the pending-exception-clear assumption.
  REQUIRE(m.contract);
  REQUIRE_FALSE(m.contract->requires_clauses.empty());
  CHECK(expr_equal(m.contract->requires_clauses[0],
                   detail::thrown_is_void()));
}

TEST_CASE("throw with no enclosing trap lowers to assign plus return") {
  Program p = must_parse(R"(
class E extends Throwable;
class A;
method A.m(): void {
  var E e;
  e := new E();
  throw e;
}
)");
  MethodDecl &m = *const_cast<MethodDecl *>(p.find_method("A", "m"));
  CHECK(transform_body(m, {}, p).empty());
  REQUIRE(m.body.size() == 3);
  CHECK(m.body[1].is<Instruction::Assign>());
  const auto *as = m.body[1].as<Instruction::Assign>();
  REQUIRE(as->lhs);
  CHECK(std::get<LvLocal>(*as->lhs).name == kThrownVar);
  CHECK(m.body[2].is<Instruction::Return>());
}

TEST_CASE("two-trap dispatch chain preserves table order") {
  Program p = must_parse(R"(
class E1 extends Throwable;
class E2 extends Throwable;
class A;
method A.m(): int {
  var E2 e;
  l1: e := new E2();
  l2: throw e;
  l3: return 0;
  h1: e := caught;
      return 1;
  h2: e := caught;
      return 2;
}
traps {
  trap l1 .. l3 catch E1 goto h1;
  trap l1 .. l3 catch E2 goto h2;
}
)");
  Program t = p;
  MethodDecl &m = *const_cast<MethodDecl *>(t.find_method("A", "m"));
  CHECK(transform_body(m, {}, t).empty());
  // Find the instanceof tests, in order.
  std::vector<std::string> tested;
  for (const auto &ins : m.body) {
    const auto *ig = ins.as<Instruction::IfGoto>();
    if (!ig) continue;
    for_each_subexpr(ig->cond, [&](const ExprPtr &e) {
      if (const auto *io = e->as<Expression::InstanceOf>())
        tested.push_back(io->class_name);
    });
  }
  REQUIRE(tested.size() == 2);
  CHECK(tested[0] == "E1");
  CHECK(tested[1] == "E2");
  // And the transformed program still runs to the same outcome.
  Outcome a = run_method(p, *p.find_method("A", "m"), {});
  Outcome b = run_method(t, m, {});
  CHECK(a == b);
  CHECK(a == Outcome::normal(Value::int_v(2)));
}

TEST_CASE("PEI guards: array read with both checks on") {
  Program p = must_parse(R"(
class A;
method A.m(int[] a, int i): int {
  var int res;
  res := a[i];
  return res;
}
)");
  Program t = p;
  MethodDecl &m = *const_cast<MethodDecl *>(t.find_method("A", "m"));
  CHECK(transform_body(m, ExcFlags{true, true}, t).empty());
  // Two guards (null then bounds), two fresh exception allocations, the
  // original read, and the return.
  int guards = 0, news = 0;
  std::vector<std::string> born;
  for (const auto &ins : m.body) {
    if (ins.is<Instruction::IfGoto>()) ++guards;
    if (const auto *as = ins.as<Instruction::Assign>())
      if (const auto *no = std::get_if<NewObject>(&as->rhs)) {
        ++news;
        born.push_back(no->class_name);
      }
  }
  CHECK(guards == 2);
  REQUIRE(news == 2);
  CHECK(born[0] == kNullPointerException);
  CHECK(born[1] == kIndexOutOfBoundsException);
  // Null guard precedes the bounds guard.
  CHECK(m.body[0].is<Instruction::IfGoto>());

  // Outcomes agree with the untransformed program under checking.
  RunConfig cfg;
  cfg.implicit_null = true;
  cfg.implicit_bounds = true;
  Interpreter io(p, cfg), it(t, cfg);
  Value arr_o = io.allocate_array(TypeExpr::int_type(), 3);
  Value arr_t = it.allocate_array(TypeExpr::int_type(), 3);
  for (int i : {-1, 0, 2, 3}) {
    Outcome a = io.run(*p.find_method("A", "m"), {arr_o, Value::int_v(i)});
    Outcome b = it.run(m, {arr_t, Value::int_v(i)});
    CHECK(a == b);
  }
  Outcome a = io.run(*p.find_method("A", "m"),
                     {Value::null_v(), Value::int_v(0)});
  CHECK(a == Outcome::exceptional(kNullPointerException));
  CHECK(a == it.run(m, {Value::null_v(), Value::int_v(0)}));
}

TEST_CASE("PEI guards: field read with null check only") {
  Program p = must_parse(R"(
class B { int f; }
class A;
method A.m(B o): int {
  var int x;
  x := o.f;
  return x;
}
)");
  MethodDecl &m = *const_cast<MethodDecl *>(p.find_method("A", "m"));
  CHECK(transform_body(m, ExcFlags{true, true}, p).empty());
  int news = 0;
  for (const auto &ins : m.body)
    if (const auto *as = ins.as<Instruction::Assign>())
      if (const auto *no = std::get_if<NewObject>(&as->rhs)) {
        ++news;
        CHECK(no->class_name == kNullPointerException);
      }
  CHECK(news == 1);
}

TEST_CASE("disabled checks leave the instruction unchanged") {
  Program p = must_parse(R"(
class A;
method A.m(int[] a, int i): int {
  var int res;
  res := a[i];
  return res;
}
)");
  Program t = p;
  MethodDecl &m = *const_cast<MethodDecl *>(t.find_method("A", "m"));
  CHECK(transform_body(m, ExcFlags{}, t).empty());
  const MethodDecl &orig = *p.find_method("A", "m");
  REQUIRE(m.body.size() == orig.body.size());
  for (size_t i = 0; i < m.body.size(); ++i)
    CHECK(instr_equal(m.body[i], orig.body[i]));
}

TEST_CASE("handler without an exception binding is diagnostic E1") {
  auto r = parse_program(R"(
class E extends Throwable;
class A;
method A.m(): int {
  var E e;
  l1: e := new E();
  l2: throw e;
  l3: return 0;
  h: return 1;
}
traps {
  trap l1 .. l3 catch E goto h;
}
)");
  REQUIRE(r.ok());
  MethodDecl &m = *const_cast<MethodDecl *>(r.program.find_method("A", "m"));
  auto diags = transform_body(m, {}, r.program);
  REQUIRE_FALSE(diags.empty());
  CHECK(diags[0].code == "E1");
}

TEST_CASE("transformed bodies contain no implicit exceptional flow") {
  std::mt19937 rng(2024);
  for (int iter = 0; iter < 40; ++iter) {
    vfgen::ProgramGen gen(rng());
    Program p = gen.generate();
    REQUIRE(validate_program(p).empty());
    Program t = p;
    CHECK(transform_exceptions(t, ExcFlags{true, true}).empty());
    for (const auto &m : t.methods) {
      CHECK(m.traps.empty());
      for (const auto &ins : m.body) {
        CHECK_FALSE(ins.is<Instruction::Throw>());
        CHECK_FALSE(ins.is<Instruction::CaughtBind>());
      }
    }
    // The transformed program is still valid IR and survives a
    // render/parse round trip, contracts included (the renderer emits
    // them as explicit requires/ensures clauses).
    auto diags = validate_program(t);
    for (const auto &d : diags) CAPTURE(d.message);
    CHECK(diags.empty());
    auto r = parse_program(render_program(t));
    REQUIRE(r.ok());
    Program u = t;
    // Reparsing appends the builtin classes at the end; normalize the
    // class order before comparing.
    auto by_name = [](const ClassDecl &a, const ClassDecl &b) {
      return a.name < b.name;
    };
    Program v = r.program;
    std::sort(v.classes.begin(), v.classes.end(), by_name);
    std::sort(u.classes.begin(), u.classes.end(), by_name);
    CHECK(program_equal(v, u));
  }
}

TEST_CASE("differential: outcomes agree on random trap-nested programs") {
  std::mt19937 rng(4242);
  for (int iter = 0; iter < 100; ++iter) {
    vfgen::ProgramGen gen(rng());
    Program p = gen.generate();
    {
      auto diags = validate_program(p);
      for (const auto &d : diags) CAPTURE(d.message);
      REQUIRE(diags.empty());
    }
    std::string mismatch = differential(p, rng, 5);
    CAPTURE(mismatch);
    CHECK(mismatch.empty());
  }
}

TEST_CASE("permuting subsumed traps changes which handler runs") {
  const char *tpl = R"(
class E extends Throwable;
class F extends E;
class A;
method A.m(): int {
  var F f;
  l1: f := new F();
  l2: throw f;
  l3: return 0;
  hE: f := caught;
      return 1;
  hF: f := caught;
      return 2;
}
traps {
  trap l1 .. l3 catch %1 goto h%1;
  trap l1 .. l3 catch %2 goto h%2;
}
)";
  auto instantiate = [&](const std::string &a, const std::string &b) {
    std::string s = tpl;
    auto sub = [&](const std::string &from, const std::string &to) {
      size_t pos = 0;
      while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
      }
    };
    sub("%1", a);
    sub("%2", b);
    return must_parse(s);
  };
  Program p1 = instantiate("E", "F");
  Program p2 = instantiate("F", "E");
  for (Program *p : {&p1, &p2}) {
    MethodDecl &m = *const_cast<MethodDecl *>(p->find_method("A", "m"));
    CHECK(transform_body(m, {}, *p).empty());
  }
  // E-first catches F (subsumption); F-first dispatches to the F handler.
  CHECK(run_method(p1, *p1.find_method("A", "m"), {}) ==
        Outcome::normal(Value::int_v(1)));
  CHECK(run_method(p2, *p2.find_method("A", "m"), {}) ==
        Outcome::normal(Value::int_v(2)));
}
