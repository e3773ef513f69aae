#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdlib>

#include "mlq/frontend.hpp"

namespace mlq::frontend {

bool Expr::operator==(const Expr& o) const {
  if (kind != o.kind || text != o.text || std::bit_cast<std::uint64_t>(num) != std::bit_cast<std::uint64_t>(o.num))
    return false;
  if (kind == ExprKind::Binary && bop != o.bop) return false;
  if (kind == ExprKind::Compare && cop != o.cop) return false;
  if (kids.size() != o.kids.size()) return false;
  for (std::size_t i = 0; i < kids.size(); ++i)
    if (!(*kids[i] == *o.kids[i])) return false;
  return true;
}

namespace {

bool same_block(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(*a[i] == *b[i])) return false;
  return true;
}

}  // namespace

bool Stmt::operator==(const Stmt& o) const {
  if (kind != o.kind || name != o.name || exprs.size() != o.exprs.size()) return false;
  for (std::size_t i = 0; i < exprs.size(); ++i)
    if (!(*exprs[i] == *o.exprs[i])) return false;
  return same_block(body, o.body) && same_block(orelse, o.orelse);
}

bool FuncDef::operator==(const FuncDef& o) const {
  return name == o.name && params == o.params && same_block(body, o.body);
}

bool Module::operator==(const Module& o) const { return funcs == o.funcs && same_block(body, o.body); }

namespace {

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Module module() {
    Module m;
    skip_newlines();
    while (!at_end()) {
      if (is_kw("def")) {
        m.funcs.push_back(def());
      } else {
        m.body.push_back(statement());
      }
      skip_newlines();
    }
    return m;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
  bool at_end() const { return peek().kind == TokKind::End; }
  bool is_op(std::string_view s) const { return peek().kind == TokKind::Op && peek().text == s; }
  bool is_kw(std::string_view s) const { return peek().kind == TokKind::Keyword && peek().text == s; }
  const Token& next() { return t_[p_ < t_.size() - 1 ? p_++ : p_]; }

  [[noreturn]] void fail(const std::string& msg) const { throw CompileError(peek().span, msg); }

  std::string describe(const Token& t) const {
    switch (t.kind) {
      case TokKind::Newline: return "newline";
      case TokKind::End: return "end of input";
      case TokKind::Str: return "string literal";
      default: return "'" + t.text + "'";
    }
  }

  void expect_op(std::string_view s) {
    if (!is_op(s)) fail("expected '" + std::string(s) + "', found " + describe(peek()));
    next();
  }

  std::string expect_name() {
    if (peek().kind != TokKind::Name) fail("expected a name, found " + describe(peek()));
    return next().text;
  }

  void skip_newlines() {
    while (peek().kind == TokKind::Newline || is_op(";")) next();
  }

  FuncDef def() {
    FuncDef f;
    f.span = next().span;
    f.name = expect_name();
    expect_op("(");
    if (!is_op(")")) {
      for (;;) {
        const Span at = peek().span;
        std::string p = expect_name();
        for (const auto& q : f.params)
          if (q == p) throw CompileError(at, "duplicate parameter '" + p + "'");
        f.params.push_back(std::move(p));
        if (!is_op(",")) break;
        next();
      }
    }
    expect_op(")");
    f.body = block();
    return f;
  }

  Block block() {
    skip_only_newlines();
    expect_op("{");
    Block b;
    skip_newlines();
    while (!is_op("}")) {
      if (at_end()) fail("expected '}', found end of input");
      if (is_kw("def")) fail("function definitions are only allowed at top level");
      b.push_back(statement());
      skip_newlines();
    }
    next();
    return b;
  }

  void skip_only_newlines() {
    while (peek().kind == TokKind::Newline) next();
  }

  void end_simple() {
    if (peek().kind == TokKind::Newline || is_op(";")) {
      next();
      return;
    }
    if (is_op("}") || at_end()) return;
    fail("expected end of statement, found " + describe(peek()));
  }

  StmtPtr make(StmtKind k, Span at) {
    auto s = std::make_unique<Stmt>();
    s->kind = k;
    s->span = at;
    return s;
  }

  StmtPtr statement() {
    const Span at = peek().span;
    if (is_kw("if")) return if_stmt();
    if (is_kw("while")) {
      next();
      auto s = make(StmtKind::While, at);
      s->exprs.push_back(expr());
      s->body = block();
      return s;
    }
    if (is_kw("for")) {
      next();
      auto s = make(StmtKind::For, at);
      s->name = expect_name();
      if (!is_kw("in")) fail("expected 'in', found " + describe(peek()));
      next();
      if (peek().kind != TokKind::Name || peek().text != "range") fail("for loops iterate over range(...)");
      next();
      expect_op("(");
      ExprPtr a = expr();
      if (is_op(",")) {
        next();
        s->exprs.push_back(std::move(a));
        s->exprs.push_back(expr());
      } else {
        auto zero = std::make_unique<Expr>();
        zero->kind = ExprKind::Int;
        zero->text = "0";
        zero->span = a->span;
        s->exprs.push_back(std::move(zero));
        s->exprs.push_back(std::move(a));
      }
      expect_op(")");
      s->body = block();
      return s;
    }
    if (is_kw("return")) {
      next();
      auto s = make(StmtKind::Return, at);
      if (!(peek().kind == TokKind::Newline || is_op(";") || is_op("}") || at_end())) s->exprs.push_back(expr());
      end_simple();
      return s;
    }
    ExprPtr e = expr();
    if (is_op("=")) {
      next();
      ExprPtr v = expr();
      StmtPtr s;
      if (e->kind == ExprKind::Name) {
        s = make(StmtKind::Assign, at);
        s->name = e->text;
        s->exprs.push_back(std::move(v));
      } else if (e->kind == ExprKind::Index) {
        s = make(StmtKind::IndexAssign, at);
        s->exprs.push_back(std::move(e->kids[0]));
        s->exprs.push_back(std::move(e->kids[1]));
        s->exprs.push_back(std::move(v));
      } else {
        throw CompileError(e->span, "cannot assign to expression");
      }
      end_simple();
      return s;
    }
    auto s = make(StmtKind::Expr, at);
    s->exprs.push_back(std::move(e));
    end_simple();
    return s;
  }

  StmtPtr if_stmt() {
    auto s = make(StmtKind::If, next().span);
    s->exprs.push_back(expr());
    s->body = block();
    // `else` may sit on a following line.
    std::size_t save = p_;
    skip_only_newlines();
    if (is_kw("else")) {
      next();
      if (is_kw("if")) {
        s->orelse.push_back(if_stmt());
      } else {
        s->orelse = block();
      }
    } else {
      p_ = save;
    }
    return s;
  }

  ExprPtr node(ExprKind k, Span at) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->span = at;
    return e;
  }

  ExprPtr expr() { return compare(); }

  ExprPtr compare() {
    ExprPtr a = additive();
    if (auto op = cmp_op()) {
      const Span at = next().span;
      ExprPtr b = additive();
      auto e = node(ExprKind::Compare, at);
      e->cop = *op;
      e->kids.push_back(std::move(a));
      e->kids.push_back(std::move(b));
      if (cmp_op()) fail("comparison operators cannot be chained");
      return e;
    }
    return a;
  }

  std::optional<CmpOp> cmp_op() const {
    if (peek().kind != TokKind::Op) return std::nullopt;
    const std::string& s = peek().text;
    if (s == "<") return CmpOp::Lt;
    if (s == "<=") return CmpOp::Le;
    if (s == "==") return CmpOp::Eq;
    if (s == "!=") return CmpOp::Ne;
    if (s == ">") return CmpOp::Gt;
    if (s == ">=") return CmpOp::Ge;
    return std::nullopt;
  }

  ExprPtr binary(ExprPtr a, BinOp op, ExprPtr b, Span at) {
    auto e = node(ExprKind::Binary, at);
    e->bop = op;
    e->kids.push_back(std::move(a));
    e->kids.push_back(std::move(b));
    return e;
  }

  ExprPtr additive() {
    ExprPtr a = term();
    for (;;) {
      if (is_op("+") || is_op("-")) {
        const Token& t = next();
        const BinOp op = t.text == "+" ? BinOp::Add : BinOp::Sub;
        ExprPtr b = term();
        a = binary(std::move(a), op, std::move(b), t.span);
      } else {
        return a;
      }
    }
  }

  ExprPtr term() {
    ExprPtr a = unary();
    for (;;) {
      BinOp op;
      if (is_op("*")) op = BinOp::Mul;
      else if (is_op("/")) op = BinOp::TrueDiv;
      else if (is_op("//")) op = BinOp::FloorDiv;
      else if (is_op("%")) op = BinOp::Mod;
      else return a;
      const Span at = next().span;
      ExprPtr b = unary();
      a = binary(std::move(a), op, std::move(b), at);
    }
  }

  ExprPtr unary() {
    if (is_op("-")) {
      const Span at = next().span;
      ExprPtr a = unary();
      // Negated numeric literals fold into the literal itself.
      if (a->kind == ExprKind::Int) {
        a->text = a->text[0] == '-' ? a->text.substr(1) : "-" + a->text;
        if (a->text == "-0") a->text = "0";
        a->span = at;
        return a;
      }
      if (a->kind == ExprKind::Float) {
        a->num = -a->num;
        a->span = at;
        return a;
      }
      auto e = node(ExprKind::Neg, at);
      e->kids.push_back(std::move(a));
      return e;
    }
    return postfix();
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    for (;;) {
      if (is_op("(")) {
        const Span at = next().span;
        auto c = node(ExprKind::Call, at);
        c->kids.push_back(std::move(e));
        if (!is_op(")")) {
          for (;;) {
            c->kids.push_back(expr());
            if (!is_op(",")) break;
            next();
          }
        }
        expect_op(")");
        e = std::move(c);
      } else if (is_op("[")) {
        const Span at = next().span;
        auto x = node(ExprKind::Index, at);
        x->kids.push_back(std::move(e));
        x->kids.push_back(expr());
        expect_op("]");
        e = std::move(x);
      } else {
        return e;
      }
    }
  }

  static double parse_double(const std::string& s, Span at) {
    errno = 0;
    const double d = std::strtod(s.c_str(), nullptr);
    if (errno == ERANGE && std::isinf(d)) throw CompileError(at, "float literal out of range");
    return d;
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Int: {
        next();
        auto e = node(ExprKind::Int, t.span);
        std::size_t z = 0;
        while (z + 1 < t.text.size() && t.text[z] == '0') ++z;
        e->text = t.text.substr(z);
        return e;
      }
      case TokKind::Float: {
        next();
        auto e = node(ExprKind::Float, t.span);
        e->num = parse_double(t.text, t.span);
        return e;
      }
      case TokKind::Imag: {
        next();
        auto e = node(ExprKind::Imag, t.span);
        e->num = parse_double(t.text, t.span);
        return e;
      }
      case TokKind::Str: {
        next();
        auto e = node(ExprKind::Str, t.span);
        e->text = t.str;
        return e;
      }
      case TokKind::Name: {
        next();
        auto e = node(ExprKind::Name, t.span);
        e->text = t.text;
        return e;
      }
      case TokKind::Keyword: {
        if (t.text == "True" || t.text == "False" || t.text == "None") {
          next();
          return node(t.text == "True" ? ExprKind::True : t.text == "False" ? ExprKind::False : ExprKind::None, t.span);
        }
        break;
      }
      case TokKind::Op: {
        if (t.text == "(") {
          next();
          ExprPtr e = expr();
          expect_op(")");
          return e;
        }
        if (t.text == "[") {
          auto e = node(ExprKind::List, next().span);
          if (!is_op("]")) {
            for (;;) {
              e->kids.push_back(expr());
              if (!is_op(",")) break;
              next();
              if (is_op("]")) break;
            }
          }
          expect_op("]");
          return e;
        }
        break;
      }
      default: break;
    }
    fail("expected an expression, found " + describe(t));
  }

  std::vector<Token> t_;
  std::size_t p_ = 0;
};

}  // namespace

Module parse(std::string_view src) { return Parser(lex(src)).module(); }

}  // namespace mlq::frontend
