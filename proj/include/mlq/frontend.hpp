// Source language: lexer, parser, pretty-printer and bytecode compiler.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlq/object.hpp"
#include "mlq/vm.hpp"

namespace mlq::frontend {

struct Span {
  int line = 1;
  int col = 1;
};

class CompileError : public std::runtime_error {
 public:
  CompileError(Span at, const std::string& msg)
      : std::runtime_error("line " + std::to_string(at.line) + ":" + std::to_string(at.col) + ": " + msg), at_(at) {}
  Span where() const { return at_; }

 private:
  Span at_;
};

enum class TokKind : std::uint8_t {
  Int, Float, Imag, Str, Name, Keyword, Op, Newline, End,
};

struct Token {
  TokKind kind;
  std::string text;  // identifier, keyword, operator or literal source text
  std::string str;   // decoded string literal
  Span span;
};

std::vector<Token> lex(std::string_view src);

enum class ExprKind : std::uint8_t {
  Int,     // text holds decimal digits (may exceed 64 bits, may be negative)
  Float,
  Imag,    // value is the imaginary part
  Str,
  True,
  False,
  None,
  Name,
  List,
  Neg,
  Binary,
  Compare,
  Call,
  Index,
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind;
  Span span;
  std::string text;  // Int digits, Str contents, Name
  double num = 0.0;  // Float, Imag
  BinOp bop = BinOp::Add;
  CmpOp cop = CmpOp::Lt;
  std::vector<ExprPtr> kids;  // operands, call callee + args, list items

  bool operator==(const Expr& o) const;  // structural, ignores spans
};

enum class StmtKind : std::uint8_t { Expr, Assign, IndexAssign, If, While, For, Return };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct Stmt {
  StmtKind kind;
  Span span;
  std::string name;            // Assign target, For variable
  std::vector<ExprPtr> exprs;  // Expr: [e]; Assign: [value]; IndexAssign: [list, index, value];
                               // If/While: [cond]; For: [start, end]; Return: [] or [value]
  Block body;
  Block orelse;

  bool operator==(const Stmt& o) const;
};

struct FuncDef {
  std::string name;
  std::vector<std::string> params;
  Block body;
  Span span;

  bool operator==(const FuncDef& o) const;
};

struct Module {
  std::vector<FuncDef> funcs;
  Block body;  // top-level statements, run as __main__

  bool operator==(const Module& o) const;
};

Module parse(std::string_view src);
std::string pretty(const Module& m);

/// Compiles every function plus "__main__". Constants are allocated in the
/// program's store.
std::unique_ptr<Program> compile(const Module& m, ObjStore& store);
std::unique_ptr<Program> compile_source(std::string_view src, ObjStore& store);

}  // namespace mlq::frontend
