#include <algorithm>
#include <random>

#include "doctest.h"
#include "gen.hpp"
#include "vimpforge/interp.hpp"
#include "vimpforge/loop_transform.hpp"
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

bool has_code(const std::vector<Diagnostic> &diags, const std::string &code) {
  for (const auto &d : diags)
    if (d.code == code) return true;
  return false;
}

bool bodies_equal(const MethodDecl &a, const MethodDecl &b) {
  if (a.body.size() != b.body.size()) return false;
  for (size_t i = 0; i < a.body.size(); ++i) {
    if (a.body[i].labels != b.body[i].labels) return false;
    if (!instr_equal(a.body[i], b.body[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("invariant expansion matches the counting-loop example") {
  Program p = must_parse(R"(
class A;
method A.m(int X): int {
  var int k;
  k := 0;
  head: if k >= 10 goto exit;
  invariant k <= 10 && k <= X;
  k := k + 1;
  if k >= X goto exit;
  back: goto head;
  exit: return k;
}
)");
  MethodDecl &m = p.methods.front();
  CHECK(expand_invariants(m).empty());

  Program want = must_parse(R"(
class A;
method A.m(int X): int {
  var int k;
  k := 0;
  head: assert k <= 10 && k <= X;
  if k >= 10 goto exit;
  assume k <= 10 && k <= X;
  k := k + 1;
  if k >= X goto exit;
  back: goto head;
  exit: assert k <= 10 && k <= X;
  return k;
}
)");
  CHECK(bodies_equal(m, want.methods.front()));
  CHECK(m.body[1].assert_tag() == Instruction::AssertTag::InvariantHeader);
  CHECK(m.body[7].assert_tag() == Instruction::AssertTag::InvariantExit);
  CHECK(validate_program(p).empty());
}

TEST_CASE("loops without invariants are untouched") {
  Program p = must_parse(R"(
class A;
method A.m(int n): int {
  var int k;
  k := 0;
  head: if k >= n goto exit;
  k := k + 1;
  goto head;
  exit: return k;
}
)");
  Program before = p;
  CHECK(expand_invariants(p.methods.front()).empty());
  CHECK(bodies_equal(p.methods.front(), before.methods.front()));
}

TEST_CASE("shared jump exit target gets a split block") {
  Program p = must_parse(R"(
class A;
method A.m(int n): int {
  var int k;
  k := 0;
  if n < 0 goto join;
  head: if k >= n goto join;
  invariant k >= 0;
  k := k + 1;
  goto head;
  join: return k;
}
)");
  MethodDecl &m = p.methods.front();
  CHECK(expand_invariants(m).empty());
  CHECK(validate_program(p).empty());

  // The early test still jumps straight to join; the loop exit is routed
  // through an appended assert block.
  const auto *early = m.body[1].as<Instruction::IfGoto>();
  REQUIRE(early);
  CHECK(early->target == "join");
  // m.body[2] is the header assert; the exit test follows it.
  CHECK(m.body[2].assert_tag() == Instruction::AssertTag::InvariantHeader);
  const auto *exit_test = m.body[3].as<Instruction::IfGoto>();
  REQUIRE(exit_test);
  CHECK(exit_test->target != "join");

  // Split block at the end: assert then goto join.
  size_t n = m.body.size();
  const auto *split_assert = m.body[n - 2].as<Instruction::AssertStmt>();
  REQUIRE(split_assert);
  CHECK(m.body[n - 2].labels ==
        std::vector<std::string>{exit_test->target});
  CHECK(m.body[n - 2].assert_tag() == Instruction::AssertTag::InvariantExit);
  const auto *split_goto = m.body[n - 1].as<Instruction::Goto>();
  REQUIRE(split_goto);
  CHECK(split_goto->target == "join");

  RunConfig cfg;
  cfg.check_specs = true;
  // Early path bypasses all invariant checks.
  Outcome a = run_method(p, m, {Value::int_v(-2)}, cfg);
  CHECK(a.kind == Outcome::Kind::Normal);
  // Loop path checks the invariant on entry, per iteration, and at exit.
  Outcome b = run_method(p, m, {Value::int_v(3)}, cfg);
  CHECK(b.kind == Outcome::Kind::Normal);
}

TEST_CASE("shared fallthrough exit keeps the assert off the entry path") {
  Program p = must_parse(R"(
class A;
method A.m(int n): int {
  var int k;
  k := 0;
  if n < 0 goto done;
  head: invariant k <= n;
  k := k + 1;
  if k < n goto head;
  done: return k;
}
)");
  MethodDecl &m = p.methods.front();
  CHECK(expand_invariants(m).empty());
  CHECK(validate_program(p).empty());

  // The exit assert sits between the loop test and the return, unlabeled,
  // while `done:` stays on the return so the entry jump skips the check.
  size_t n = m.body.size();
  CHECK(m.body[n - 1].labels == std::vector<std::string>{"done"});
  CHECK(m.body[n - 1].is<Instruction::Return>());
  CHECK(m.body[n - 2].is<Instruction::AssertStmt>());
  CHECK(m.body[n - 2].labels.empty());
  CHECK(m.body[n - 2].assert_tag() == Instruction::AssertTag::InvariantExit);

  RunConfig cfg;
  cfg.check_specs = true;
  // Entry path: k = 0 > n would violate k <= n, but no check runs there.
  CHECK(run_method(p, m, {Value::int_v(-1)}, cfg).kind ==
        Outcome::Kind::Normal);
  CHECK(run_method(p, m, {Value::int_v(4)}, cfg).kind ==
        Outcome::Kind::Normal);
}

TEST_CASE("returns inside the loop body assert the invariant first") {
  Program p = must_parse(R"(
class A;
method A.m(int n): int {
  var int k;
  k := 0;
  head: if k >= n goto exit;
  invariant k >= 0;
  if k == 7 goto early;
  k := k + 1;
  goto head;
  early: k := 0 - 1;
  return k;
  exit: return k;
}
)");
  MethodDecl &m = p.methods.front();
  CHECK(expand_invariants(m).empty());
  CHECK(validate_program(p).empty());

  // The early-return path leaves the loop at the jump to `early:`, so
  // the exit assert takes over that label and runs before anything on
  // the path to the return.
  bool found = false;
  for (const auto &ins : m.body) {
    if (!ins.is<Instruction::AssertStmt>()) continue;
    if (ins.assert_tag() != Instruction::AssertTag::InvariantExit) continue;
    if (std::find(ins.labels.begin(), ins.labels.end(), "early") !=
        ins.labels.end())
      found = true;
  }
  CHECK(found);

  RunConfig cfg;
  cfg.check_specs = true;
  // Early return with k := -1 happens after the exit assert saw k == 7,
  // so the invariant still passes on that path.
  Outcome out = run_method(p, m, {Value::int_v(9)}, cfg);
  CHECK(out.kind == Outcome::Kind::Normal);
  REQUIRE(out.value.kind == Value::Kind::Int);
  CHECK(out.value.i == -1);
}

TEST_CASE("violation kinds distinguish entry, iteration, and exit") {
  RunConfig cfg;
  cfg.check_specs = true;

  // Fails immediately at the header: entry violation.
  Program pe = must_parse(R"(
class A;
method A.m(): int {
  var int k;
  k := 5;
  head: if k >= 9 goto exit;
  invariant k <= 2;
  k := k + 1;
  goto head;
  exit: return k;
}
)");
  CHECK(expand_invariants(pe.methods.front()).empty());
  Outcome oe = run_method(pe, pe.methods.front(), {}, cfg);
  REQUIRE(oe.kind == Outcome::Kind::CheckViolation);
  CHECK(oe.check_kind == CheckKind::InvariantEntry);

  // Holds at entry, broken by the third header visit: iteration violation.
  Program pi = must_parse(R"(
class A;
method A.m(): int {
  var int k;
  k := 0;
  head: if k >= 9 goto exit;
  invariant k <= 1;
  k := k + 1;
  goto head;
  exit: return k;
}
)");
  CHECK(expand_invariants(pi.methods.front()).empty());
  Outcome oi = run_method(pi, pi.methods.front(), {}, cfg);
  REQUIRE(oi.kind == Outcome::Kind::CheckViolation);
  CHECK(oi.check_kind == CheckKind::InvariantIter);

  // Broken between the last header check and a mid-body exit: exit
  // violation.
  Program px = must_parse(R"(
class A;
method A.m(): int {
  var int k;
  k := 0;
  head: if k >= 3 goto exit;
  invariant k <= 2;
  k := k + 1;
  if k > 2 goto exit;
  goto head;
  exit: return k;
}
)");
  CHECK(expand_invariants(px.methods.front()).empty());
  Outcome ox = run_method(px, px.methods.front(), {}, cfg);
  REQUIRE(ox.kind == Outcome::Kind::CheckViolation);
  CHECK(ox.check_kind == CheckKind::InvariantExit);
}

TEST_CASE("nested loops expand both invariants") {
  Program p = must_parse(R"(
class A;
method A.m(int n): int {
  var int i;
  var int j;
  var int s;
  i := 0;
  s := 0;
  outer: if i >= n goto done;
  invariant i <= n;
  j := 0;
  inner: if j >= i goto next;
  invariant j <= i;
  s := s + 1;
  j := j + 1;
  goto inner;
  next: i := i + 1;
  goto outer;
  done: return s;
}
)");
  MethodDecl &m = p.methods.front();
  CHECK(expand_invariants(m).empty());
  CHECK(validate_program(p).empty());

  // No invariant statements remain; two header asserts appear.
  int headers = 0, assumes = 0;
  for (const auto &ins : m.body) {
    CHECK_FALSE(ins.is<Instruction::InvariantStmt>());
    if (ins.is<Instruction::AssertStmt>() &&
        ins.assert_tag() == Instruction::AssertTag::InvariantHeader)
      ++headers;
    if (ins.is<Instruction::AssumeStmt>()) ++assumes;
  }
  CHECK(headers == 2);
  CHECK(assumes == 2);

  RunConfig cfg;
  cfg.check_specs = true;
  // s = sum of 0..n-1
  Outcome out = run_method(p, m, {Value::int_v(4)}, cfg);
  REQUIRE(out.kind == Outcome::Kind::Normal);
  CHECK(out.value.i == 6);
}

TEST_CASE("expansion preserves behavior when invariants hold") {
  // The expanded program and the original with invariants deleted agree
  // on every outcome: asserts pass and assumes are inert.
  const char *src = R"(
class A;
method A.m(int n): int {
  var int k;
  var int s;
  k := 0;
  s := 0;
  head: if k >= n goto exit;
  invariant s >= 0 && k <= n;
  s := s + k;
  k := k + 1;
  goto head;
  exit: return s;
}
)";
  Program expanded = must_parse(src);
  CHECK(expand_invariants(expanded.methods.front()).empty());

  Program stripped = must_parse(src);
  auto &body = stripped.methods.front().body;
  for (auto &ins : body)
    if (ins.is<Instruction::InvariantStmt>()) ins.node = Instruction::Nop{};

  RunConfig cfg;
  cfg.check_specs = true;
  for (int n = 0; n <= 8; ++n) {
    Outcome a =
        run_method(expanded, expanded.methods.front(), {Value::int_v(n)}, cfg);
    Outcome b =
        run_method(stripped, stripped.methods.front(), {Value::int_v(n)}, cfg);
    CHECK(a == b);
  }
}

TEST_CASE("multiple invariant statements conjoin in program order") {
  Program p = must_parse(R"(
class A;
method A.m(int n): int {
  var int k;
  k := 0;
  head: if k >= n goto exit;
  invariant k >= 0;
  invariant k <= n;
  k := k + 1;
  goto head;
  exit: return k;
}
)");
  MethodDecl &m = p.methods.front();
  CHECK(expand_invariants(m).empty());
  const auto *hdr = m.body[1].as<Instruction::AssertStmt>();
  REQUIRE(hdr);
  ExprPtr want = build::binary(
      BinOp::And,
      build::binary(BinOp::Ge, build::local("k"), build::int_const(0)),
      build::binary(BinOp::Le, build::local("k"), build::local("n")));
  CHECK(expr_equal(hdr->expr, want));
  // Both original invariant positions became assumes of the conjunction.
  CHECK(m.body[3].is<Instruction::AssumeStmt>());
  CHECK(m.body[4].is<Instruction::AssumeStmt>());
}

TEST_CASE("an invariant in an irreducible cycle is diagnostic L1") {
  auto r = parse_program(R"(
class A;
method A.m(bool b): void {
  if b goto x;
  goto y;
  x: invariant true;
  goto y;
  y: goto x;
}
)");
  REQUIRE(r.ok());
  CHECK(has_code(expand_invariants(r.program.methods.front()), "L1"));
}

TEST_CASE("an invariant outside any loop asserts then assumes in place") {
  Program p = must_parse(R"(
class A;
method A.m(int x): void {
  invariant x >= 0;
  return;
}
)");
  MethodDecl &m = p.methods.front();
  CHECK(expand_invariants(m).empty());
  REQUIRE(m.body.size() == 3);
  CHECK(m.body[0].is<Instruction::AssertStmt>());
  CHECK(m.body[1].is<Instruction::AssumeStmt>());
  CHECK(m.body[2].is<Instruction::Return>());
}

TEST_CASE("expansion is the identity on loop-free generated programs") {
  for (unsigned seed = 500; seed < 520; ++seed) {
    vfgen::ProgramGen gen(seed);
    Program p = gen.generate();
    Program before = p;
    CHECK(transform_loops(p).empty());
    REQUIRE(p.methods.size() == before.methods.size());
    for (size_t i = 0; i < p.methods.size(); ++i)
      CHECK(bodies_equal(p.methods[i], before.methods[i]));
  }
}
