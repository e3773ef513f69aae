// Type lattice laws and the abstract walk over compiled and quickened code.
#include <gtest/gtest.h>

#include "corpus.hpp"
#include "mlq/analysis.hpp"
#include "mlq/frontend.hpp"
#include "mlq/vm.hpp"

namespace mlq {
namespace {

using namespace analysis;

std::vector<AbsType> all_types() {
  std::vector<AbsType> out = {AbsType::bottom(), AbsType::top()};
  for (AbsKind k : {AbsKind::Int, AbsKind::Float, AbsKind::Complex, AbsKind::Bool, AbsKind::Str, AbsKind::None,
                    AbsKind::Func})
    out.push_back(AbsType::of(k));
  for (ElemT e : {ElemT::Int, ElemT::Float, ElemT::Unknown}) out.push_back(AbsType::list_of(e));
  return out;
}

TEST(LatticeTest, JoinIsASemilattice) {
  const auto ts = all_types();
  for (auto a : ts) {
    EXPECT_EQ(join(a, a), a) << a.str();
    EXPECT_EQ(join(a, AbsType::bottom()), a);
    EXPECT_EQ(join(a, AbsType::top()), AbsType::top());
    for (auto b : ts) {
      EXPECT_EQ(join(a, b), join(b, a)) << a.str() << " " << b.str();
      EXPECT_TRUE(leq(a, join(a, b)));
      for (auto c : ts) EXPECT_EQ(join(join(a, b), c), join(a, join(b, c)));
    }
  }
}

TEST(LatticeTest, LeqIsAPartialOrder) {
  const auto ts = all_types();
  for (auto a : ts) {
    EXPECT_TRUE(leq(a, a));
    for (auto b : ts) {
      if (leq(a, b) && leq(b, a)) {
        EXPECT_EQ(a, b);
      }
      for (auto c : ts) {
        if (leq(a, b) && leq(b, c)) {
          EXPECT_TRUE(leq(a, c)) << a.str() << " " << b.str() << " " << c.str();
        }
      }
    }
  }
  EXPECT_TRUE(leq(AbsType::list_of(ElemT::Int), AbsType::list_of(ElemT::Unknown)));
  EXPECT_FALSE(leq(AbsType::list_of(ElemT::Int), AbsType::list_of(ElemT::Float)));
}

TEST(LatticeTest, NarrowOnlyRefines) {
  const auto ts = all_types();
  for (auto t : ts)
    for (auto s : ts) {
      const AbsType n = narrow(t, s);
      EXPECT_TRUE(leq(n, t)) << t.str() << " " << s.str();
      EXPECT_TRUE(n == t || n == s);
    }
  EXPECT_EQ(narrow(AbsType::top(), AbsType::of(AbsKind::Int)), AbsType::of(AbsKind::Int));
  EXPECT_EQ(narrow(AbsType::of(AbsKind::Float), AbsType::of(AbsKind::Int)), AbsType::of(AbsKind::Float));
}

int local_index(const CodeObject& c, const std::string& name) {
  for (std::size_t i = 0; i < c.local_names.size(); ++i)
    if (c.local_names[i] == name) return static_cast<int>(i);
  ADD_FAILURE() << "no local " << name;
  return 0;
}

std::uint32_t first_return(const CodeObject& c) {
  for (std::uint32_t pc = 0; pc < c.instrs.size(); ++pc)
    if (c.instrs[pc].op == Op::RETURN_VALUE) return pc;
  ADD_FAILURE() << "no return";
  return 0;
}

struct Compiled {
  ObjStore store;
  std::unique_ptr<Program> prog;
  explicit Compiled(const std::string& src) : prog(frontend::compile_source(src, store)) {}
  // Installs inline caches by running once at opt 1.
  void warm() {
    VmConfig cfg;
    cfg.opt = 1;
    RunResult r = run(*prog, "__main__", {}, cfg);
    EXPECT_TRUE(r.ok) << r.error_message;
  }
  ~Compiled() {
    prog.reset();
    EXPECT_EQ(store.finish(), 0);
  }
  CodeObject& code(const std::string& n) { return *prog->find(n); }
};

TEST(WalkTest, StraightLineLocalTypes) {
  Compiled p("def f(a) {\n  x = 1\n  y = 2.5\n  z = x * 3\n  w = [1.0, y]\n  return a\n}\n");
  const CodeObject& f = p.code("f");
  const WalkResult w = abstract_walk(f, {});
  EXPECT_TRUE(w.errors.empty());
  const AbsState& last = w.before[first_return(f)];
  ASSERT_TRUE(last.reached);
  EXPECT_EQ(last.locals[local_index(f, "x")], AbsType::of(AbsKind::Int));
  EXPECT_EQ(last.locals[local_index(f, "y")], AbsType::of(AbsKind::Float));
  // Generic arithmetic may promote, so only an inline cache types z.
  EXPECT_EQ(last.locals[local_index(f, "z")], AbsType::top());
  EXPECT_EQ(last.locals[local_index(f, "w")].kind, AbsKind::List);
  EXPECT_EQ(last.locals[local_index(f, "a")], AbsType::top());
  ASSERT_EQ(last.stack.size(), 1u);
}

TEST(WalkTest, InlineCachesTypeResults) {
  Compiled p("def f(a) {\n  x = 1\n  z = x * 3\n  return z\n}\nf(1)\n");
  p.warm();
  const CodeObject& f = p.code("f");
  const WalkResult w = abstract_walk(f, feedback_from(f));
  EXPECT_EQ(w.before[first_return(f)].locals[local_index(f, "z")], AbsType::of(AbsKind::Int));
}

TEST(WalkTest, FeedbackSeedsParameters) {
  const std::string src = "def f(a, b) {\n  return a * b + 1.5\n}\nfor i in range(0, 5) {\n  f(2.0, 3.0)\n}\n";
  ObjStore store;
  {
    auto prog = frontend::compile_source(src, store);
    VmConfig cfg;
    cfg.opt = 1;
    RunResult r = run(*prog, "__main__", {}, cfg);
    ASSERT_TRUE(r.ok);
    const CodeObject& f = *prog->find("f");
    const TypeFeedback fb = feedback_from(f);
    EXPECT_FALSE(fb.empty());
    const WalkResult w = abstract_walk(f, fb);
    EXPECT_EQ(w.seeds[0], AbsType::of(AbsKind::Float));
    EXPECT_EQ(w.seeds[1], AbsType::of(AbsKind::Float));
    // Explicit seeds replace feedback.
    const WalkResult w2 = abstract_walk(f, fb, {AbsType::top(), AbsType::top()});
    EXPECT_EQ(w2.before[0].locals[0], AbsType::top());
  }
  EXPECT_EQ(store.finish(), 0);
}

TEST(WalkTest, LoopJoinsReachFixpoint) {
  Compiled p("def f(n) {\n  x = 1\n  y = 2\n  k = 0\n  while k < n {\n    x = 0.5\n    y = y + 1\n    k = k + 1\n  }\n"
             "  return x\n}\nf(3)\n");
  p.warm();
  const CodeObject& f = p.code("f");
  const WalkResult w = abstract_walk(f, feedback_from(f));
  EXPECT_TRUE(w.errors.empty());
  EXPECT_GE(w.iterations, 1);
  EXPECT_LE(w.iterations, kMaxSweeps);
  const AbsState& ret = w.before[first_return(f)];
  EXPECT_EQ(ret.locals[local_index(f, "x")], AbsType::top());
  EXPECT_EQ(ret.locals[local_index(f, "y")], AbsType::of(AbsKind::Int));
  EXPECT_EQ(ret.locals[local_index(f, "k")], AbsType::of(AbsKind::Int));
}

TEST(WalkTest, BlockLeaders) {
  Compiled p("def f(n) {\n  if n {\n    n = 1\n  } else {\n    n = 2\n  }\n  return n\n}\n");
  const CodeObject& f = p.code("f");
  const auto leaders = block_leaders(f);
  ASSERT_EQ(leaders.size(), f.instrs.size());
  EXPECT_TRUE(leaders[0]);
  for (std::uint32_t pc = 0; pc < f.instrs.size(); ++pc) {
    const Op op = f.instrs[pc].op;
    if (op != Op::POP_JUMP_IF_FALSE && op != Op::JUMP_ABSOLUTE && op != Op::PROF_JUMP_ABSOLUTE) continue;
    EXPECT_TRUE(leaders[f.instrs[pc].operand]) << pc;
    if (pc + 1 < f.instrs.size()) {
      EXPECT_TRUE(leaders[pc + 1]) << pc;
    }
  }
}

TEST(WalkTest, QuickenedCorpusWalksCleanly) {
  auto programs = testing::bench_corpus(MLQ_SOURCE_DIR, false);
  auto rnd = testing::random_corpus(100);
  programs.insert(programs.end(), rnd.begin(), rnd.end());
  for (const auto& p : programs) {
    ObjStore store;
    {
      auto prog = frontend::compile_source(p.source, store);
      std::vector<Value*> args;
      for (auto a : p.args) args.push_back(store.make_int(a));
      VmConfig cfg;
      cfg.threshold = 5;
      RunResult r = run(*prog, p.entry, std::move(args), cfg);
      r.result = Ref();
      for (const auto& c : prog->codes) {
        const WalkResult w = abstract_walk(*c, feedback_from(*c));
        EXPECT_TRUE(w.errors.empty()) << p.name << "/" << c->name << ": " << w.errors.front().str();
        EXPECT_EQ(w.before.size(), c->instrs.size());
        EXPECT_TRUE(w.before[0].reached);
      }
    }
    EXPECT_EQ(store.finish(), 0) << p.name;
  }
}

}  // namespace
}  // namespace mlq
