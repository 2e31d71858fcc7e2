// parser.hpp -- lexer, recursive-descent parser, and pretty-printer for the
// textual IR (.vmp). The parser is total on arbitrary byte input: errors are
// reported as diagnostics with line/column, recovering at the next
// declaration. render_program emits the normalized form; parse(render(p))
// is structurally equal to p.

#ifndef VIMPFORGE_PARSER_HPP
#define VIMPFORGE_PARSER_HPP

#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vimpforge/ir.hpp"

namespace vimpforge {

struct ParseResult {
  Program program;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

namespace detail {

enum class Tok {
  End, Error, Ident, AtIdent, Int,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Semi, Comma, Dot, DotDot, Colon, ColonColon, Assign,
  Question, Plus, Minus, Star, Slash, Percent,
  Not, AndAnd, OrOr, Implies, Eq, Ne, Lt, Le, Gt, Ge,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  BigInt int_value;
  SourcePos pos{};
};

class Lexer {
 public:
  explicit Lexer(const std::string &src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.pos = {line_, col_};
    if (i_ >= src_.size()) return t;
    char c = src_[i_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      t.kind = Tok::Ident;
      t.text = ident();
      return t;
    }
    if (c == '@') {
      advance();
      if (i_ < src_.size() &&
          (std::isalpha(static_cast<unsigned char>(src_[i_])) ||
           src_[i_] == '_')) {
        t.kind = Tok::AtIdent;
        t.text = "@" + ident();
        return t;
      }
      t.kind = Tok::Error;
      t.text = "@";
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (i_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[i_]))) {
        digits += src_[i_];
        advance();
      }
      t.kind = Tok::Int;
      t.int_value = BigInt(digits);
      t.text = digits;
      return t;
    }
    auto two = [&](char a, char b) {
      return c == a && i_ + 1 < src_.size() && src_[i_ + 1] == b;
    };
    if (two('=', '=') && i_ + 2 < src_.size() && src_[i_ + 2] == '>') {
      advance(); advance(); advance();
      t.kind = Tok::Implies;
      return t;
    }
    if (two(':', '=')) { advance(); advance(); t.kind = Tok::Assign; return t; }
    if (two(':', ':')) { advance(); advance(); t.kind = Tok::ColonColon; return t; }
    if (two('.', '.')) { advance(); advance(); t.kind = Tok::DotDot; return t; }
    if (two('=', '=')) { advance(); advance(); t.kind = Tok::Eq; return t; }
    if (two('!', '=')) { advance(); advance(); t.kind = Tok::Ne; return t; }
    if (two('<', '=')) { advance(); advance(); t.kind = Tok::Le; return t; }
    if (two('>', '=')) { advance(); advance(); t.kind = Tok::Ge; return t; }
    if (two('&', '&')) { advance(); advance(); t.kind = Tok::AndAnd; return t; }
    if (two('|', '|')) { advance(); advance(); t.kind = Tok::OrOr; return t; }
    advance();
    switch (c) {
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '{': t.kind = Tok::LBrace; break;
      case '}': t.kind = Tok::RBrace; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case ';': t.kind = Tok::Semi; break;
      case ',': t.kind = Tok::Comma; break;
      case '.': t.kind = Tok::Dot; break;
      case ':': t.kind = Tok::Colon; break;
      case '?': t.kind = Tok::Question; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      case '/': t.kind = Tok::Slash; break;
      case '%': t.kind = Tok::Percent; break;
      case '!': t.kind = Tok::Not; break;
      case '&': t.kind = Tok::AndAnd; break;
      case '|': t.kind = Tok::OrOr; break;
      case '<': t.kind = Tok::Lt; break;
      case '>': t.kind = Tok::Gt; break;
      case '=': t.kind = Tok::Error; t.text = "="; break;
      default:
        t.kind = Tok::Error;
        t.text = std::string(1, c);
        break;
    }
    return t;
  }

 private:
  void advance() {
    if (i_ < src_.size()) {
      if (src_[i_] == '\n') { ++line_; col_ = 1; } else { ++col_; }
      ++i_;
    }
  }
  void skip_ws() {
    for (;;) {
      while (i_ < src_.size() &&
             std::isspace(static_cast<unsigned char>(src_[i_])))
        advance();
      if (i_ + 1 < src_.size() && src_[i_] == '/' && src_[i_ + 1] == '/') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
        continue;
      }
      break;
    }
  }
  std::string ident() {
    std::string s;
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
        s += c;
        advance();
      } else {
        break;
      }
    }
    return s;
  }

  const std::string &src_;
  size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct ParseError {
  std::string message;
  SourcePos pos;
};

class Parser {
 public:
  explicit Parser(const std::string &src) {
    Lexer lex(src);
    for (;;) {
      Token t = lex.next();
      tokens_.push_back(t);
      if (t.kind == Tok::End) break;
    }
  }

  ParseResult parse() {
    ParseResult result;
    while (!at(Tok::End)) {
      size_t before = pos_;
      try {
        if (at_kw("class")) {
          result.program.classes.push_back(parse_class());
        } else if (at_kw("method") || at(Tok::AtIdent)) {
          result.program.methods.push_back(parse_method());
        } else {
          throw ParseError{"expected class or method declaration",
                           cur().pos};
        }
      } catch (const ParseError &e) {
        result.diagnostics.push_back({"parse", e.message, e.pos});
        if (pos_ == before) ++pos_;
        recover_to_declaration();
      }
    }
    add_builtin_classes(result.program);
    return result;
  }

 private:
  const Token &cur() const { return tokens_[pos_]; }
  const Token &peek(size_t n = 1) const {
    size_t i = pos_ + n;
    return tokens_[i < tokens_.size() ? i : tokens_.size() - 1];
  }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_kw(const std::string &kw) const {
    return cur().kind == Tok::Ident && cur().text == kw;
  }
  bool eat(Tok k) {
    if (at(k)) { ++pos_; return true; }
    return false;
  }
  bool eat_kw(const std::string &kw) {
    if (at_kw(kw)) { ++pos_; return true; }
    return false;
  }
  void expect(Tok k, const std::string &what) {
    if (!eat(k)) throw ParseError{"expected " + what, cur().pos};
  }
  void expect_kw(const std::string &kw) {
    if (!eat_kw(kw)) throw ParseError{"expected '" + kw + "'", cur().pos};
  }
  std::string expect_ident(const std::string &what) {
    if (!at(Tok::Ident) || is_reserved(cur().text))
      throw ParseError{"expected " + what, cur().pos};
    std::string s = cur().text;
    ++pos_;
    return s;
  }

  static bool is_reserved(const std::string &s) {
    static const std::set<std::string> kw = {
        "class",  "extends", "method",  "traps",   "trap",   "catch",
        "goto",   "if",      "return",  "throw",   "assert", "assume",
        "invariant", "nop",  "new",     "var",     "binding", "old",
        "isvoid", "instanceof", "forall", "exists", "true",  "false",
        "null",   "void",    "caught",  "int",     "bool",   "length"};
    return kw.count(s) > 0;
  }

  void recover_to_declaration() {
    int depth = 0;
    while (!at(Tok::End)) {
      if (at(Tok::LBrace)) ++depth;
      if (at(Tok::RBrace) && depth > 0) --depth;
      if (depth == 0 &&
          (at_kw("class") || at_kw("method") || at(Tok::AtIdent)))
        return;
      ++pos_;
    }
  }

  // ---- declarations ----

  ClassDecl parse_class() {
    ClassDecl c;
    c.pos = cur().pos;
    expect_kw("class");
    c.name = expect_ident("class name");
    if (eat_kw("extends")) c.parent = expect_ident("parent class name");
    if (eat(Tok::LBrace)) {
      while (!at(Tok::RBrace) && !at(Tok::End)) {
        FieldDecl f;
        f.type = parse_type();
        f.name = expect_ident("field name");
        expect(Tok::Semi, "';'");
        c.fields.push_back(std::move(f));
      }
      expect(Tok::RBrace, "'}'");
    } else {
      eat(Tok::Semi);
    }
    return c;
  }

  TypeExpr parse_type() {
    TypeExpr base;
    if (eat_kw("int")) {
      base = TypeExpr::int_type();
    } else if (eat_kw("bool")) {
      base = TypeExpr::bool_type();
    } else {
      base = TypeExpr::ref(expect_ident("type"));
    }
    if (eat(Tok::LBracket)) {
      expect(Tok::RBracket, "']'");
      return TypeExpr::array(base);
    }
    return base;
  }

  MethodDecl parse_method() {
    MethodDecl m;
    m.pos = cur().pos;
    while (at(Tok::AtIdent)) parse_annotation(m);
    expect_kw("method");
    m.owner = expect_ident("owner class name");
    expect(Tok::Dot, "'.'");
    m.name = expect_ident("method name");
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      do {
        Param p;
        p.type = parse_type();
        p.name = expect_ident("parameter name");
        m.params.push_back(std::move(p));
      } while (eat(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    expect(Tok::Colon, "':'");
    if (eat_kw("void")) {
      m.return_type = std::nullopt;
    } else {
      m.return_type = parse_type();
    }
    // Explicit contract clauses, as written by stage dumps (annotations
    // desugar to these; hand-written files may also use them directly).
    while (at_kw("requires") || at_kw("ensures")) {
      bool pre = eat_kw("requires");
      if (!pre) expect_kw("ensures");
      ExprPtr e = parse_expr();
      expect(Tok::Semi, "';'");
      if (!m.contract) m.contract = Contract{};
      (pre ? m.contract->requires_clauses : m.contract->ensures_clauses)
          .push_back(std::move(e));
    }
    if (eat(Tok::Semi)) {
      m.has_body = false;
      return m;
    }
    expect(Tok::LBrace, "'{' or ';'");
    m.has_body = true;
    while (at_kw("var") || at_kw("binding")) {
      LocalDecl l;
      l.is_binding = at_kw("binding");
      ++pos_;
      l.type = parse_type();
      l.name = expect_ident("local name");
      expect(Tok::Semi, "';'");
      m.locals.push_back(std::move(l));
    }
    while (!at(Tok::RBrace) && !at(Tok::End))
      m.body.push_back(parse_instruction());
    expect(Tok::RBrace, "'}'");
    if (eat_kw("traps")) {
      expect(Tok::LBrace, "'{'");
      while (at_kw("trap")) {
        Trap t;
        t.pos = cur().pos;
        ++pos_;
        t.begin = label_name();
        expect(Tok::DotDot, "'..'");
        t.end = label_name();
        expect_kw("catch");
        t.exception_type = expect_ident("exception class");
        expect_kw("goto");
        t.handler = label_name();
        expect(Tok::Semi, "';'");
        m.traps.push_back(std::move(t));
      }
      expect(Tok::RBrace, "'}'");
    }
    return m;
  }

  std::string label_name() { return expect_ident("label"); }

  void parse_annotation(MethodDecl &m) {
    Annotation a;
    a.pos = cur().pos;
    std::string name = cur().text;
    ++pos_;
    if (name == "@require" || name == "@ensure") {
      a.kind = name == "@require" ? Annotation::Kind::Require
                                  : Annotation::Kind::Ensure;
      expect(Tok::LParen, "'('");
      a.name = expect_ident("predicate name");
      expect(Tok::RParen, "')'");
    } else if (name == "@raise") {
      a.kind = Annotation::Kind::Raise;
      expect(Tok::LParen, "'('");
      a.name = expect_ident("exception class");
      expect(Tok::Comma, "','");
      a.when = expect_ident("predicate name");
      expect(Tok::RParen, "')'");
    } else if (name == "@returns") {
      a.kind = Annotation::Kind::ReturnWhen;
      if (eat(Tok::LParen)) {
        a.when = expect_ident("predicate name");
        expect(Tok::RParen, "')'");
      }
    } else if (name == "@predicate") {
      a.kind = Annotation::Kind::Predicate;
      m.is_predicate = true;
    } else if (name == "@attach") {
      a.kind = Annotation::Kind::Attach;
      expect(Tok::LParen, "'('");
      a.name = expect_ident("class name");
      expect(Tok::RParen, "')'");
    } else if (name == "@checks") {
      // @checks(null bounds), @checks(none): listed checks on, others off.
      expect(Tok::LParen, "'('");
      m.check_null = CheckOverride::Off;
      m.check_bounds = CheckOverride::Off;
      bool any = false;
      while (!at(Tok::RParen) && !at(Tok::End)) {
        if (eat_kw("null")) {
          m.check_null = CheckOverride::On;
        } else if (at_kw("bounds")) {
          ++pos_;
          m.check_bounds = CheckOverride::On;
        } else if (at_kw("none")) {
          ++pos_;
        } else {
          throw ParseError{"expected 'null', 'bounds', or 'none'", cur().pos};
        }
        any = true;
        eat(Tok::Comma);
      }
      if (!any) throw ParseError{"empty @checks(...)", cur().pos};
      expect(Tok::RParen, "')'");
      return;  // flags recorded directly, no annotation entry
    } else {
      throw ParseError{"unknown annotation " + name, a.pos};
    }
    m.annotations.push_back(std::move(a));
  }

  // ---- instructions ----

  bool at_label() const {
    return cur().kind == Tok::Ident && !is_reserved(cur().text) &&
           peek().kind == Tok::Colon;
  }

  Instruction parse_instruction() {
    Instruction ins;
    ins.pos = cur().pos;
    while (at_label()) {
      ins.labels.push_back(cur().text);
      pos_ += 2;
    }
    ins.pos = cur().pos;
    using I = Instruction;
    if (eat_kw("if")) {
      ExprPtr cond = parse_expr();
      expect_kw("goto");
      std::string target = label_name();
      ins.node = I::IfGoto{std::move(cond), std::move(target)};
    } else if (eat_kw("goto")) {
      ins.node = I::Goto{label_name()};
    } else if (eat_kw("return")) {
      ExprPtr v;
      if (!at(Tok::Semi)) v = parse_expr();
      ins.node = I::Return{std::move(v)};
    } else if (eat_kw("throw")) {
      std::string name =
          at(Tok::AtIdent) && cur().text == kThrownVar
              ? (++pos_, kThrownVar)
              : expect_ident("local name");
      ins.node = I::Throw{std::move(name)};
    } else if (eat_kw("assert")) {
      ins.node = I::AssertStmt{parse_expr()};
    } else if (eat_kw("assume")) {
      ins.node = I::AssumeStmt{parse_expr()};
    } else if (eat_kw("invariant")) {
      ins.node = I::InvariantStmt{parse_expr()};
    } else if (eat_kw("nop")) {
      ins.node = I::Nop{};
    } else {
      ins.node = parse_assignment();
    }
    expect(Tok::Semi, "';'");
    return ins;
  }

  // assignment | bare call | caught binding
  Instruction::Node parse_assignment() {
    using I = Instruction;
    // Bare call `recv.m(args);`
    if (at(Tok::Ident) && (!is_reserved(cur().text) || at_kw("this")) &&
        peek().kind == Tok::Dot && peek(2).kind == Tok::Ident &&
        !is_reserved(peek(2).text) && peek(3).kind == Tok::LParen) {
      // Could still be a field lvalue `o.f := ...`; the LParen rules it out.
      Invoke call = parse_invoke();
      return I::Assign{std::nullopt, std::move(call)};
    }
    Lvalue lhs = parse_lvalue();
    expect(Tok::Assign, "':='");
    if (at_kw("caught")) {
      ++pos_;
      const auto *ll = std::get_if<LvLocal>(&lhs);
      if (!ll)
        throw ParseError{"caught must be bound to a local", cur().pos};
      return I::CaughtBind{ll->name};
    }
    if (at_kw("new")) {
      ++pos_;
      TypeExpr t = parse_type_no_array();
      if (eat(Tok::LBracket)) {
        ExprPtr len = parse_expr();
        expect(Tok::RBracket, "']'");
        return I::Assign{std::move(lhs), NewArray{std::move(t), std::move(len)}};
      }
      if (t.kind != TypeExpr::Kind::Ref)
        throw ParseError{"new requires a class name or array type", cur().pos};
      expect(Tok::LParen, "'('");
      expect(Tok::RParen, "')'");
      return I::Assign{std::move(lhs), NewObject{t.class_name}};
    }
    // Invoke rhs `recv.m(args)`
    if (at(Tok::Ident) && !is_reserved(cur().text) &&
        peek().kind == Tok::Dot && peek(2).kind == Tok::Ident &&
        !is_reserved(peek(2).text) && peek(3).kind == Tok::LParen) {
      return I::Assign{std::move(lhs), parse_invoke()};
    }
    if (at_kw("this") && peek().kind == Tok::Dot &&
        peek(2).kind == Tok::Ident && peek(3).kind == Tok::LParen) {
      return I::Assign{std::move(lhs), parse_invoke()};
    }
    return I::Assign{std::move(lhs), parse_expr()};
  }

  TypeExpr parse_type_no_array() {
    if (eat_kw("int")) return TypeExpr::int_type();
    if (eat_kw("bool")) return TypeExpr::bool_type();
    return TypeExpr::ref(expect_ident("type"));
  }

  Invoke parse_invoke() {
    SourcePos p = cur().pos;
    std::string recv = cur().text;  // ident or `this`
    ++pos_;
    expect(Tok::Dot, "'.'");
    std::string method = expect_ident("method name");
    expect(Tok::LParen, "'('");
    Invoke call;
    call.receiver = build::mk(Expression::Local{recv}, p);
    call.method = std::move(method);
    if (!at(Tok::RParen)) {
      do {
        call.args.push_back(parse_expr());
      } while (eat(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    return call;
  }

  Lvalue parse_lvalue() {
    if (at(Tok::AtIdent) && cur().text == kThrownVar) {
      ++pos_;
      return LvLocal{kThrownVar};
    }
    std::string name;
    if (at_kw("this")) {
      name = "this";
      ++pos_;
    } else {
      name = expect_ident("lvalue");
    }
    if (eat(Tok::Dot)) {
      std::string field = expect_ident("field name");
      return LvField{build::local(name), std::move(field)};
    }
    if (eat(Tok::LBracket)) {
      ExprPtr idx = parse_expr();
      expect(Tok::RBracket, "']'");
      return LvArray{build::local(name), std::move(idx)};
    }
    return LvLocal{std::move(name)};
  }

  // ---- expressions (precedence climbing) ----

  ExprPtr parse_expr() { return parse_ternary(); }

  ExprPtr parse_ternary() {
    if ((at_kw("forall") || at_kw("exists")) && peek().kind != Tok::LParen) {
      QuantKind k = at_kw("forall") ? QuantKind::Forall : QuantKind::Exists;
      SourcePos p = cur().pos;
      ++pos_;
      TypeExpr t = parse_type();
      std::string var = expect_ident("bound variable");
      expect(Tok::ColonColon, "'::'");
      ExprPtr body = parse_ternary();
      return build::mk(Expression::Quantifier{k, std::move(var), std::move(t),
                                              std::move(body)}, p);
    }
    ExprPtr c = parse_implies();
    if (eat(Tok::Question)) {
      ExprPtr t = parse_ternary();
      expect(Tok::Colon, "':'");
      ExprPtr e = parse_ternary();
      return build::mk(
          Expression::Conditional{std::move(c), std::move(t), std::move(e)},
          c->pos);
    }
    return c;
  }

  ExprPtr parse_implies() {
    ExprPtr l = parse_or();
    if (eat(Tok::Implies)) {
      ExprPtr r = parse_implies();  // right-associative
      return build::mk(Expression::Binary{BinOp::Implies, l, std::move(r)},
                       l->pos);
    }
    return l;
  }

  ExprPtr parse_or() {
    ExprPtr l = parse_and();
    while (eat(Tok::OrOr))
      l = build::mk(Expression::Binary{BinOp::Or, l, parse_and()}, l->pos);
    return l;
  }

  ExprPtr parse_and() {
    ExprPtr l = parse_equality();
    while (eat(Tok::AndAnd))
      l = build::mk(Expression::Binary{BinOp::And, l, parse_equality()},
                    l->pos);
    return l;
  }

  ExprPtr parse_equality() {
    ExprPtr l = parse_relational();
    for (;;) {
      if (eat(Tok::Eq)) {
        l = build::mk(Expression::Binary{BinOp::Eq, l, parse_relational()},
                      l->pos);
      } else if (eat(Tok::Ne)) {
        l = build::mk(Expression::Binary{BinOp::Ne, l, parse_relational()},
                      l->pos);
      } else {
        return l;
      }
    }
  }

  ExprPtr parse_relational() {
    ExprPtr l = parse_additive();
    for (;;) {
      BinOp op;
      if (at(Tok::Lt)) op = BinOp::Lt;
      else if (at(Tok::Le)) op = BinOp::Le;
      else if (at(Tok::Gt)) op = BinOp::Gt;
      else if (at(Tok::Ge)) op = BinOp::Ge;
      else if (at_kw("instanceof")) {
        ++pos_;
        std::string cls = expect_ident("class name");
        l = build::mk(Expression::InstanceOf{l, std::move(cls)}, l->pos);
        continue;
      } else {
        return l;
      }
      ++pos_;
      l = build::mk(Expression::Binary{op, l, parse_additive()}, l->pos);
    }
  }

  ExprPtr parse_additive() {
    ExprPtr l = parse_multiplicative();
    for (;;) {
      if (eat(Tok::Plus)) {
        l = build::mk(
            Expression::Binary{BinOp::Add, l, parse_multiplicative()}, l->pos);
      } else if (eat(Tok::Minus)) {
        l = build::mk(
            Expression::Binary{BinOp::Sub, l, parse_multiplicative()}, l->pos);
      } else {
        return l;
      }
    }
  }

  ExprPtr parse_multiplicative() {
    ExprPtr l = parse_unary();
    for (;;) {
      BinOp op;
      if (at(Tok::Star)) op = BinOp::Mul;
      else if (at(Tok::Slash)) op = BinOp::Div;
      else if (at(Tok::Percent)) op = BinOp::Mod;
      else return l;
      ++pos_;
      l = build::mk(Expression::Binary{op, l, parse_unary()}, l->pos);
    }
  }

  ExprPtr parse_unary() {
    SourcePos p = cur().pos;
    if (eat(Tok::Minus)) {
      // Fold minus into integer literals so `-5` round-trips as a constant.
      if (at(Tok::Int)) {
        BigInt v = cur().int_value;
        ++pos_;
        return build::mk(Expression::IntConst{-v}, p);
      }
      return build::mk(Expression::Unary{UnOp::Neg, parse_unary()}, p);
    }
    if (eat(Tok::Not))
      return build::mk(Expression::Unary{UnOp::Not, parse_unary()}, p);
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    for (;;) {
      if (at(Tok::Dot)) {
        if (peek().kind == Tok::Ident && peek().text == "length") {
          pos_ += 2;
          e = build::mk(Expression::ArrayLength{e}, e->pos);
          continue;
        }
        if (peek().kind == Tok::Ident && !is_reserved(peek().text) &&
            peek(2).kind != Tok::LParen) {
          std::string field = peek().text;
          pos_ += 2;
          e = build::mk(Expression::FieldRead{e, std::move(field)}, e->pos);
          continue;
        }
        // `Owner.pred(args)`: a qualified predicate application, as the
        // renderer writes resolved contract clauses. There is no method
        // call expression form, so the shape is unambiguous.
        if (const auto *base = e->as<Expression::Local>();
            base && peek().kind == Tok::Ident && !is_reserved(peek().text) &&
            peek(2).kind == Tok::LParen) {
          std::string qualified = base->name + "." + peek().text;
          SourcePos p = e->pos;
          pos_ += 2;
          e = parse_apply_args(std::move(qualified), p);
          continue;
        }
        throw ParseError{"method calls are not expressions", cur().pos};
      }
      if (eat(Tok::LBracket)) {
        ExprPtr idx = parse_expr();
        expect(Tok::RBracket, "']'");
        e = build::mk(Expression::ArrayRead{e, std::move(idx)}, e->pos);
        continue;
      }
      return e;
    }
  }

  ExprPtr parse_primary() {
    SourcePos p = cur().pos;
    if (at(Tok::Int)) {
      BigInt v = cur().int_value;
      ++pos_;
      return build::mk(Expression::IntConst{std::move(v)}, p);
    }
    if (eat_kw("true")) return build::mk(Expression::BoolConst{true}, p);
    if (eat_kw("false")) return build::mk(Expression::BoolConst{false}, p);
    if (eat_kw("null")) return build::mk(Expression::NullConst{}, p);
    if (eat_kw("void")) return build::mk(Expression::VoidConst{}, p);
    if (at(Tok::AtIdent) && cur().text == kThrownVar) {
      ++pos_;
      return build::mk(Expression::Local{kThrownVar}, p);
    }
    if (eat_kw("old")) {
      expect(Tok::LParen, "'('");
      ExprPtr a = parse_expr();
      expect(Tok::RParen, "')'");
      return build::mk(Expression::Old{std::move(a)}, p);
    }
    if (eat_kw("isvoid")) {
      expect(Tok::LParen, "'('");
      ExprPtr a = parse_expr();
      expect(Tok::RParen, "')'");
      return build::mk(Expression::IsVoid{std::move(a)}, p);
    }
    if ((at_kw("forall") || at_kw("exists")) && peek().kind == Tok::LParen) {
      // bblib-style quantifier application, resolved by quantifier lifting.
      std::string name = cur().text;
      ++pos_;
      return parse_apply_args(std::move(name), p);
    }
    if (eat(Tok::LParen)) {
      ExprPtr e = parse_expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (at_kw("this")) {
      ++pos_;
      return build::mk(Expression::Local{"this"}, p);
    }
    if (at(Tok::Ident) && !is_reserved(cur().text)) {
      std::string name = cur().text;
      ++pos_;
      if (at(Tok::LParen)) return parse_apply_args(std::move(name), p);
      return build::mk(Expression::Local{std::move(name)}, p);
    }
    throw ParseError{"expected expression", p};
  }

  ExprPtr parse_apply_args(std::string name, SourcePos p) {
    expect(Tok::LParen, "'('");
    std::vector<ExprPtr> args;
    if (!at(Tok::RParen)) {
      do {
        args.push_back(parse_expr());
      } while (eat(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    return build::mk(Expression::PredicateApply{std::move(name),
                                                std::move(args)}, p);
  }

  std::vector<Token> tokens_;
  size_t pos_ = 0;
};

}  // namespace detail

inline ParseResult parse_program(const std::string &text) {
  return detail::Parser(text).parse();
}

// ---------------------------------------------------------------------------
// Pretty-printing

namespace detail {

inline int binop_prec(BinOp op) {
  switch (op) {
    case BinOp::Implies: return 1;
    case BinOp::Or: return 2;
    case BinOp::And: return 3;
    case BinOp::Eq: case BinOp::Ne: return 4;
    case BinOp::Lt: case BinOp::Le: case BinOp::Gt: case BinOp::Ge: return 5;
    case BinOp::Add: case BinOp::Sub: return 6;
    default: return 7;  // Mul, Div, Mod
  }
}

inline const char *binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Implies: return "==>";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
  }
  return "?";
}

inline std::string render_type(const TypeExpr &t) {
  switch (t.kind) {
    case TypeExpr::Kind::Int: return "int";
    case TypeExpr::Kind::Bool: return "bool";
    case TypeExpr::Kind::Ref: return t.class_name;
    case TypeExpr::Kind::Array: return render_type(*t.elem) + "[]";
    case TypeExpr::Kind::VoidMarker: return "void";
  }
  return "?";
}

// prec: minimum precedence of the context; parenthesize below it.
inline void render_expr(std::ostream &os, const ExprPtr &e, int prec = 0) {
  using E = Expression;
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, E::IntConst>) {
          os << x.value;
        } else if constexpr (std::is_same_v<T, E::BoolConst>) {
          os << (x.value ? "true" : "false");
        } else if constexpr (std::is_same_v<T, E::NullConst>) {
          os << "null";
        } else if constexpr (std::is_same_v<T, E::VoidConst>) {
          os << "void";
        } else if constexpr (std::is_same_v<T, E::Local>) {
          os << x.name;
        } else if constexpr (std::is_same_v<T, E::FieldRead>) {
          render_expr(os, x.target, 9);
          os << "." << x.field;
        } else if constexpr (std::is_same_v<T, E::ArrayRead>) {
          render_expr(os, x.target, 9);
          os << "[";
          render_expr(os, x.index, 0);
          os << "]";
        } else if constexpr (std::is_same_v<T, E::ArrayLength>) {
          render_expr(os, x.target, 9);
          os << ".length";
        } else if constexpr (std::is_same_v<T, E::Unary>) {
          if (prec > 8) os << "(";
          os << (x.op == UnOp::Neg ? "-" : "!");
          render_expr(os, x.arg, 8);
          if (prec > 8) os << ")";
        } else if constexpr (std::is_same_v<T, E::Binary>) {
          int p = binop_prec(x.op);
          bool right_assoc = x.op == BinOp::Implies;
          if (prec > p) os << "(";
          render_expr(os, x.left, right_assoc ? p + 1 : p);
          os << " " << binop_text(x.op) << " ";
          render_expr(os, x.right, right_assoc ? p : p + 1);
          if (prec > p) os << ")";
        } else if constexpr (std::is_same_v<T, E::Conditional>) {
          if (prec > 0) os << "(";
          render_expr(os, x.cond, 1);
          os << " ? ";
          render_expr(os, x.then_expr, 0);
          os << " : ";
          render_expr(os, x.else_expr, 0);
          if (prec > 0) os << ")";
        } else if constexpr (std::is_same_v<T, E::InstanceOf>) {
          if (prec > 5) os << "(";
          render_expr(os, x.arg, 6);
          os << " instanceof " << x.class_name;
          if (prec > 5) os << ")";
        } else if constexpr (std::is_same_v<T, E::IsVoid>) {
          os << "isvoid(";
          render_expr(os, x.arg, 0);
          os << ")";
        } else if constexpr (std::is_same_v<T, E::Old>) {
          os << "old(";
          render_expr(os, x.arg, 0);
          os << ")";
        } else if constexpr (std::is_same_v<T, E::Quantifier>) {
          if (prec > 0) os << "(";
          os << (x.kind == QuantKind::Forall ? "forall " : "exists ")
             << render_type(x.var_type) << " " << x.var << " :: ";
          render_expr(os, x.body, 0);
          if (prec > 0) os << ")";
        } else if constexpr (std::is_same_v<T, E::PredicateApply>) {
          os << x.name << "(";
          for (size_t i = 0; i < x.args.size(); ++i) {
            if (i) os << ", ";
            render_expr(os, x.args[i], 0);
          }
          os << ")";
        }
      },
      e->node);
}

inline std::string expr_to_string(const ExprPtr &e) {
  std::ostringstream os;
  render_expr(os, e);
  return os.str();
}

inline void render_lvalue(std::ostream &os, const Lvalue &lv) {
  if (const auto *l = std::get_if<LvLocal>(&lv)) {
    os << l->name;
  } else if (const auto *f = std::get_if<LvField>(&lv)) {
    render_expr(os, f->target, 9);
    os << "." << f->field;
  } else {
    const auto &a = std::get<LvArray>(lv);
    render_expr(os, a.target, 9);
    os << "[";
    render_expr(os, a.index, 0);
    os << "]";
  }
}

inline void render_instruction(std::ostream &os, const Instruction &ins) {
  using I = Instruction;
  os << "  ";
  for (const auto &l : ins.labels) os << l << ": ";
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, I::Assign>) {
          if (x.lhs) {
            render_lvalue(os, *x.lhs);
            os << " := ";
          }
          if (const auto *e = std::get_if<ExprPtr>(&x.rhs)) {
            render_expr(os, *e, 0);
          } else if (const auto *n = std::get_if<NewObject>(&x.rhs)) {
            os << "new " << n->class_name << "()";
          } else if (const auto *na = std::get_if<NewArray>(&x.rhs)) {
            os << "new " << render_type(na->elem) << "[";
            render_expr(os, na->length, 0);
            os << "]";
          } else {
            const auto &iv = std::get<Invoke>(x.rhs);
            render_expr(os, iv.receiver, 9);
            os << "." << iv.method << "(";
            for (size_t i = 0; i < iv.args.size(); ++i) {
              if (i) os << ", ";
              render_expr(os, iv.args[i], 0);
            }
            os << ")";
          }
        } else if constexpr (std::is_same_v<T, I::IfGoto>) {
          os << "if ";
          render_expr(os, x.cond, 0);
          os << " goto " << x.target;
        } else if constexpr (std::is_same_v<T, I::Goto>) {
          os << "goto " << x.target;
        } else if constexpr (std::is_same_v<T, I::Return>) {
          os << "return";
          if (x.value) {
            os << " ";
            render_expr(os, x.value, 0);
          }
        } else if constexpr (std::is_same_v<T, I::Throw>) {
          os << "throw " << x.local;
        } else if constexpr (std::is_same_v<T, I::CaughtBind>) {
          os << x.local << " := caught";
        } else if constexpr (std::is_same_v<T, I::InvariantStmt>) {
          os << "invariant ";
          render_expr(os, x.expr, 0);
        } else if constexpr (std::is_same_v<T, I::AssertStmt>) {
          os << "assert ";
          render_expr(os, x.expr, 0);
        } else if constexpr (std::is_same_v<T, I::AssumeStmt>) {
          os << "assume ";
          render_expr(os, x.expr, 0);
        } else {
          os << "nop";
        }
      },
      ins.node);
  os << ";\n";
}

}  // namespace detail

inline std::string render_program(const Program &program) {
  std::ostringstream os;
  for (const auto &c : program.classes) {
    if (c.builtin) continue;
    os << "class " << c.name;
    if (c.parent) os << " extends " << *c.parent;
    if (c.fields.empty()) {
      os << ";\n";
    } else {
      os << " {\n";
      for (const auto &f : c.fields)
        os << "  " << detail::render_type(f.type) << " " << f.name << ";\n";
      os << "}\n";
    }
    os << "\n";
  }
  for (const auto &m : program.methods) {
    for (const auto &a : m.annotations) {
      switch (a.kind) {
        case Annotation::Kind::Require:
          os << "@require(" << a.name << ")\n";
          break;
        case Annotation::Kind::Ensure:
          os << "@ensure(" << a.name << ")\n";
          break;
        case Annotation::Kind::Raise:
          os << "@raise(" << a.name << ", " << a.when << ")\n";
          break;
        case Annotation::Kind::ReturnWhen:
          if (a.when.empty()) os << "@returns\n";
          else os << "@returns(" << a.when << ")\n";
          break;
        case Annotation::Kind::Predicate:
          os << "@predicate\n";
          break;
        case Annotation::Kind::Attach:
          os << "@attach(" << a.name << ")\n";
          break;
      }
    }
    if (m.is_predicate) {
      bool has_marker = false;
      for (const auto &a : m.annotations)
        if (a.kind == Annotation::Kind::Predicate) has_marker = true;
      if (!has_marker) os << "@predicate\n";
    }
    if (m.check_null != CheckOverride::Inherit ||
        m.check_bounds != CheckOverride::Inherit) {
      bool n = m.check_null == CheckOverride::On;
      bool b = m.check_bounds == CheckOverride::On;
      if (!n && !b) os << "@checks(none)\n";
      else if (n && b) os << "@checks(null, bounds)\n";
      else if (n) os << "@checks(null)\n";
      else os << "@checks(bounds)\n";
    }
    os << "method " << m.owner << "." << m.name << "(";
    for (size_t i = 0; i < m.params.size(); ++i) {
      if (i) os << ", ";
      os << detail::render_type(m.params[i].type) << " " << m.params[i].name;
    }
    os << "): "
       << (m.return_type ? detail::render_type(*m.return_type) : "void");
    if (m.contract && (!m.contract->requires_clauses.empty() ||
                       !m.contract->ensures_clauses.empty())) {
      os << "\n";
      for (const auto &r : m.contract->requires_clauses) {
        os << "  requires ";
        detail::render_expr(os, r);
        os << ";\n";
      }
      for (const auto &e : m.contract->ensures_clauses) {
        os << "  ensures ";
        detail::render_expr(os, e);
        os << ";\n";
      }
    }
    if (!m.has_body) {
      os << ";\n\n";
      continue;
    }
    os << " {\n";
    for (const auto &l : m.locals)
      os << "  " << (l.is_binding ? "binding " : "var ")
         << detail::render_type(l.type) << " " << l.name << ";\n";
    for (const auto &ins : m.body) detail::render_instruction(os, ins);
    os << "}\n";
    if (!m.traps.empty()) {
      os << "traps {\n";
      for (const auto &t : m.traps)
        os << "  trap " << t.begin << " .. " << t.end << " catch "
           << t.exception_type << " goto " << t.handler << ";\n";
      os << "}\n";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace vimpforge

#endif  // VIMPFORGE_PARSER_HPP
