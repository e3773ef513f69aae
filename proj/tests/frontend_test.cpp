// Lexer, parser, printer and compiler, checked through guest-visible output.
#include <gtest/gtest.h>

#include "corpus.hpp"
#include "mlq/frontend.hpp"
#include "mlq/vm.hpp"

namespace mlq {
namespace {

using frontend::CompileError;

std::string observe(const std::string& src, int opt = 0) {
  VmConfig cfg;
  cfg.opt = opt;
  Outcome o = run_source(src, cfg);
  EXPECT_EQ(o.live_after, 0) << src;
  return o.run.observable();
}

std::string compile_error(const std::string& src) {
  ObjStore store;
  try {
    frontend::compile_source(src, store);
  } catch (const CompileError& e) {
    store.finish();
    return e.what();
  }
  store.finish();
  return "";
}

TEST(LexerTest, TokensAndSpans) {
  const auto toks = frontend::lex("x = 12 + 3.5j # note\n\"a\\n\"");
  ASSERT_GE(toks.size(), 6u);
  EXPECT_EQ(toks[0].kind, frontend::TokKind::Name);
  EXPECT_EQ(toks[0].span.line, 1);
  EXPECT_EQ(toks[0].span.col, 1);
  EXPECT_EQ(toks[2].text, "12");
  EXPECT_EQ(toks[2].span.col, 5);
}

TEST(LexerTest, Errors) {
  EXPECT_THROW(frontend::lex("x = \"open"), CompileError);
  EXPECT_THROW(frontend::lex("x = 1 $ 2"), CompileError);
}

TEST(ParserTest, ErrorsCarryPositions) {
  EXPECT_EQ(compile_error("x = 1 +\n"), "line 1:8: expected an expression, found newline");
  EXPECT_EQ(compile_error("x = 1 < 2 < 3\n"), "line 1:11: comparison operators cannot be chained");
  EXPECT_EQ(compile_error("print(x)\n"), "line 1:7: undefined name 'x'");
  EXPECT_EQ(compile_error("x = 1\ndef f(a) { return a }\nprint(f(1, 2))\n"), "line 3:8: f() takes 1 arguments (2 given)");
  EXPECT_EQ(compile_error("print(1e400)\n"), "line 1:7: float literal out of range");
  EXPECT_NE(compile_error("if 1 { x = 1\n"), "");
  EXPECT_NE(compile_error("def f(a, a) { return a }\n"), "");
}

TEST(ParserTest, PrettyRoundTripOnCorpus) {
  auto programs = testing::bench_corpus(MLQ_SOURCE_DIR, false);
  auto rnd = testing::random_corpus(200);
  programs.insert(programs.end(), rnd.begin(), rnd.end());
  for (const auto& p : programs) {
    const frontend::Module m = frontend::parse(p.source);
    const std::string text = frontend::pretty(m);
    const frontend::Module again = frontend::parse(text);
    EXPECT_TRUE(again == m) << p.name;
    EXPECT_EQ(frontend::pretty(again), text) << p.name;
  }
}

TEST(ParserTest, PrecedenceAndUnary) {
  EXPECT_EQ(observe("print(1 + 2 * 3, (1 + 2) * 3, -2 * 3, 7 - 2 - 1, 2 * -3)\n"), "7 9 -6 4 -6\n=> None\n");
  EXPECT_EQ(observe("print(10 // 3 % 2, (1 < 2) == True)\n"), "1 True\n=> None\n");
  EXPECT_EQ(observe("x = 5\nprint(-x, --x)\n"), "-5 5\n=> None\n");
}

TEST(CompilerTest, ControlFlow) {
  EXPECT_EQ(observe("if 1 {\n  print(\"t\")\n} else if 0 {\n  print(\"u\")\n} else {\n  print(\"v\")\n}\n"),
            "t\n=> None\n");
  // The loop variable ends at the bound (i = a; while i < e { ...; i = i + 1 }).
  EXPECT_EQ(observe("s = 0\nfor i in range(0, 5) {\n  s = s + i\n}\nprint(s, i)\n"), "10 5\n=> None\n");
  EXPECT_EQ(observe("s = 0\nfor i in range(3, 1) {\n  s = s + 1\n}\nprint(s)\n"), "0\n=> None\n");
  EXPECT_EQ(observe("n = 0\nwhile n < 3 {\n  n = n + 1\n}\nprint(n)\n"), "3\n=> None\n");
  // Loop bounds are evaluated once.
  EXPECT_EQ(observe("e = 3\nc = 0\nfor i in range(0, e) {\n  e = 10\n  c = c + 1\n}\nprint(c)\n"), "3\n=> None\n");
}

TEST(CompilerTest, FunctionsAndRecursion) {
  EXPECT_EQ(observe("def fib(n) {\n  if n < 2 {\n    return n\n  }\n  return fib(n - 1) + fib(n - 2)\n}\nprint(fib(15))\n"),
            "610\n=> None\n");
  EXPECT_EQ(observe("def f() {\n  x = 1\n}\nprint(f())\n"), "None\n=> None\n");
  EXPECT_EQ(observe("def g(a) {\n  return a * 2\n}\nh = g\nprint(h(4))\n"), "8\n=> None\n");
}

TEST(CompilerTest, ListsStringsAndBuiltins) {
  EXPECT_EQ(observe("l = [1, 2]\nappend(l, 3)\nl[0] = 9\nprint(l, len(l), l[2])\n"), "[9, 2, 3] 3 3\n=> None\n");
  EXPECT_EQ(observe("print(\"a\" + \"b\", str_of(2.5), len(\"abc\"), [\"x\"])\n"), "ab 2.5 3 ['x']\n=> None\n");
  EXPECT_EQ(observe("print(abs(-2), abs(-2.5), float(3), int(-2.7), sqrt(16.0), abs(3 + 4j))\n"),
            "2 2.5 3.0 -2 4.0 5.0\n=> None\n");
  EXPECT_EQ(observe("x = \"a\\tb\\n\"\nprint([x])\n"), "['a\\tb\\n']\n=> None\n");
  EXPECT_EQ(observe("print()\n"), "\n=> None\n");
}

TEST(CompilerTest, RuntimeErrorsAreObservable) {
  EXPECT_EQ(observe("l = [1]\nprint(2)\nprint(l[1])\n"), "2\nerror IndexOutOfRange: list index out of range\n");
  EXPECT_EQ(observe("l = [1, 2]\nl[-1] = 5\n"), "error IndexOutOfRange: list index out of range\n");
  EXPECT_EQ(observe("def f(n) {\n  return f(n + 1)\n}\nf(0)\n"),
            "error StackOverflow: maximum recursion depth exceeded\n");
  EXPECT_EQ(observe("x = 3\nx(1)\n"), "error TypeMismatch: 'int' object is not callable\n");
  EXPECT_EQ(observe("print(sqrt(-1.0))\n"), "error MathDomain: math domain error\n");
  EXPECT_EQ(observe("def f() {\n  y = y + 1\n}\nf()\n"),
            "error UnboundLocal: local variable 'y' referenced before assignment\n");
  EXPECT_EQ(observe("def g(a) {\n  return a\n}\nh = g\nh(1, 2)\n").substr(0, 19), "error ArityMismatch");
  EXPECT_EQ(observe("print(1 // 0)\n"), "error ZeroDivision: integer division or modulo by zero\n");
  EXPECT_EQ(observe("print(True + 1)\n").substr(0, 18), "error TypeMismatch");
  EXPECT_EQ(observe("print(int(1.0 / 0.0))\n"), "error ZeroDivision: float division by zero\n");
}

TEST(CompilerTest, ResultOfEntryFunction) {
  VmConfig cfg;
  Outcome o = run_source("def main(n) {\n  return [n, n * 2.0]\n}\n", cfg, "main", {21});
  EXPECT_EQ(o.run.observable(), "=> [21, 42.0]\n");
  EXPECT_EQ(o.live_after, 0);
}

TEST(CompilerTest, EmitsEndOfFunctionReturn) {
  ObjStore store;
  {
    auto prog = frontend::compile_source("def f() {\n  x = 1\n}\n", store);
    const CodeObject* f = prog->find("f");
    ASSERT_NE(f, nullptr);
    ASSERT_GE(f->instrs.size(), 2u);
    EXPECT_EQ(f->instrs.back().op, Op::RETURN_VALUE);
    EXPECT_EQ(prog->codes.back()->name, "__main__");
  }
  EXPECT_EQ(store.finish(), 0);
}

}  // namespace
}  // namespace mlq
