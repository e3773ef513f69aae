// L1 specialization policy, L2 region formation, deoptimization and the
// tiering invariants.
#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include "corpus.hpp"
#include "mlq/frontend.hpp"
#include "mlq/quicken.hpp"
#include "mlq/vm.hpp"

namespace mlq {
namespace {

struct Session {
  ObjStore store;
  std::unique_ptr<Program> prog;
  RunResult r;
  Session(const std::string& src, const VmConfig& cfg, const std::string& entry = "__main__",
          std::vector<std::int64_t> args = {}) {
    prog = frontend::compile_source(src, store);
    std::vector<Value*> a;
    for (auto x : args) a.push_back(store.make_int(x));
    r = run(*prog, entry, std::move(a), cfg);
  }
  ~Session() {
    r.result = Ref();
    prog.reset();
    EXPECT_EQ(store.finish(), 0);
  }
  CodeObject& code(const std::string& name) { return *prog->find(name); }
};

VmConfig opt2(bool trace = false) {
  VmConfig c;
  c.opt = 2;
  c.trace = trace;
  return c;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(SpecializeTest, TablesAreConsistent) {
  ObjStore store;
  {
    Ref a(store, store.make_int(1)), b(store, store.make_float(2.0)), c(store, store.make_complex({1, 2}));
    const Value* ii[] = {a.get(), a.get()};
    const Value* ff[] = {b.get(), b.get()};
    const Value* cc[] = {c.get(), c.get()};
    EXPECT_EQ(quicken::specialize(Op::BINARY_ADD, ii), Op::INCA_INT_ADD);
    EXPECT_EQ(quicken::specialize(Op::BINARY_MULTIPLY, ff), Op::INCA_FLOAT_MULT);
    EXPECT_EQ(quicken::specialize(Op::BINARY_ADD, cc), Op::INCA_COMPLEX_ADD);
    EXPECT_EQ(quicken::specialize(Op::COMPARE_LT, ii), Op::INCA_INT_LT);
  }
  for (const OpcodeInfo* info : tiers()) {
    if (info->tier != Tier::Inca) continue;
    const Op op = *find_op(info->mnemonic);
    const Op g = quicken::generic_of(op);
    EXPECT_EQ(tier_of(g), Tier::Generic) << info->mnemonic;
    if (auto n = quicken::unboxed_of(op)) {
      EXPECT_EQ(tier_of(*n), Tier::Nama) << info->mnemonic;
    }
  }
  EXPECT_EQ(quicken::unboxed_of(Op::INCA_INT_ADD), Op::NAMA_INT_ADD);
  EXPECT_EQ(quicken::unboxed_of(Op::INCA_INT_LT), Op::NAMA_CMP_INT_LT);
  EXPECT_EQ(store.finish(), 0);
}

TEST(TraceTest, LineFormat) {
  EXPECT_EQ(quicken::trace_line(12, Op::BINARY_ADD, Op::INCA_INT_ADD, "l1"),
            "pc=12 BINARY_ADD -> INCA_INT_ADD reason=l1\n");
}

TEST(L1Test, MismatchesRespecializeThenDequicken) {
  // One BINARY_ADD site seeing int, float, complex, then str.
  const std::string src =
      "def add(a, b) {\n  return a + b\n}\n"
      "add(1, 2)\nadd(1.5, 2.0)\nadd(1j, 1j)\nadd(\"a\", \"b\")\nadd(1, 2)\nprint(add(3, 4))\n";
  VmConfig cfg;
  cfg.opt = 1;
  cfg.trace = true;
  Session s(src, cfg);
  const auto t = lines(s.r.trace);
  ASSERT_EQ(t.size(), 4u) << s.r.trace;
  EXPECT_EQ(t[0], "pc=2 BINARY_ADD -> INCA_INT_ADD reason=l1");
  EXPECT_EQ(t[1], "pc=2 INCA_INT_ADD -> INCA_FLOAT_ADD reason=l1");
  EXPECT_EQ(t[2], "pc=2 INCA_FLOAT_ADD -> INCA_COMPLEX_ADD reason=l1");
  EXPECT_EQ(t[3], "pc=2 INCA_COMPLEX_ADD -> BINARY_ADD reason=dequicken");
  EXPECT_TRUE(s.code("add").sites[2].megamorphic);
  EXPECT_EQ(s.r.output, "7\n");
}

TEST(L1Test, UnspecializableSiteStaysGeneric) {
  VmConfig cfg;
  cfg.opt = 1;
  cfg.trace = true;
  Session s("x = \"a\"\nfor i in range(0, 5) {\n  x = x + \"b\"\n}\nprint(x)\n", cfg);
  EXPECT_EQ(s.r.output, "abbbbb\n");
  EXPECT_EQ(s.r.trace.find("BINARY_ADD -> BINARY_ADD"), std::string::npos);
}

TEST(L2Test, HotLoopFormsRegionAfterThreshold) {
  const std::string src = "def main(n) {\n  s = 0\n  for i in range(0, n) {\n    s = s + i\n  }\n  return s\n}\n";
  VmConfig cfg = opt2();
  cfg.threshold = 50;
  {
    Session cold(src, cfg, "main", {49});
    EXPECT_EQ(cold.r.counters.rewrites_l2, 0u);
    EXPECT_TRUE(cold.code("main").regions.empty());
  }
  Session hot(src, cfg, "main", {200});
  EXPECT_GT(hot.r.counters.rewrites_l2, 0u);
  EXPECT_FALSE(hot.code("main").regions.empty());
  EXPECT_EQ(hot.r.result_repr, "19900");
}

TEST(L2Test, RerunIsByteLevelNoOp) {
  auto programs = testing::bench_corpus(MLQ_SOURCE_DIR, false);
  auto rnd = testing::random_corpus(60);
  programs.insert(programs.end(), rnd.begin(), rnd.end());
  for (const auto& p : programs) {
    for (bool super : {true, false}) {
      VmConfig cfg = opt2();
      cfg.super = super;
      Session s(p.source, cfg, p.entry, p.args);
      for (auto& c : s.prog->codes) {
        // Codes that never got hot take their first pass here.
        if (c->opt_state != OptState::Optimized) quicken::l2_optimize(*c, {super, nullptr});
        const auto before = c->instrs;
        const auto regions = c->regions.size();
        std::string trace;
        const auto stats = quicken::l2_optimize(*c, {super, &trace});
        EXPECT_EQ(stats.rewrites, 0) << p.name << "/" << c->name;
        EXPECT_TRUE(trace.empty()) << p.name << "/" << c->name << "\n" << trace;
        EXPECT_EQ(before.size(), c->instrs.size());
        EXPECT_EQ(std::memcmp(before.data(), c->instrs.data(), before.size() * sizeof(Instr)), 0)
            << p.name << "/" << c->name;
        EXPECT_EQ(regions, c->regions.size());
      }
    }
  }
}

void expect_rewrite_bound(const CodeObject& c, const VmConfig& cfg, const std::string& what) {
  for (std::size_t p = 0; p < c.sites.size(); ++p) {
    const SiteState& s = c.sites[p];
    EXPECT_LE(s.rewrites, cfg.dequicken_limit + 2 + 3 * s.regions) << what << " pc=" << p;
  }
}

const char* kMillionLoop =
    "def main(n) {\n"
    "  s = 0\n  f = 0.0\n  l = [1.0, 2.0, 3.0]\n"
    "  for i in range(0, n) {\n"
    "    s = (s + i * 3) % 1000003\n"
    "    f = f + l[i % 3] * 0.5\n"
    "    if i % 100000 == 99999 {\n      f = 1\n    }\n"
    "  }\n"
    "  print(s, f)\n  return s\n}\n";

TEST(L2Test, RewritesPerPcBoundedOnMillionIterationLoop) {
  VmConfig plain = opt2();
  VmConfig o0;
  o0.opt = 0;
  Session ref(kMillionLoop, o0, "main", {1000000});
  {
    Session s(kMillionLoop, plain, "main", {1000000});
    EXPECT_EQ(s.r.output, ref.r.output);
    expect_rewrite_bound(s.code("main"), plain, "plain");
  }
  VmConfig stressed = opt2();
  stressed.stress = DeoptStress{0.01, 5};
  Session s(kMillionLoop, stressed, "main", {1000000});
  EXPECT_EQ(s.r.output, ref.r.output);
  EXPECT_GT(s.r.counters.deopts, 0u);
  expect_rewrite_bound(s.code("main"), stressed, "stressed");
  // Blacklisting caps the deopts a window can cause.
  EXPECT_LT(s.r.counters.deopts, 200u);
}

TEST(DeoptTest, IntOverflowPromotesAndMatchesOracle) {
  const std::string src =
      "def main(n) {\n  a = 4611686018427387904\n  s = 0\n"
      "  for i in range(0, n) {\n    s = a + a\n  }\n  print(s)\n"
      "  f = 1\n  for r in range(0, n) {\n    f = 1\n    for k in range(1, 26) {\n      f = f * k\n    }\n  }\n"
      "  print(f)\n  return f\n}\n";
  VmConfig cfg = opt2(true);
  cfg.threshold = 10;
  Session s(src, cfg, "main", {300});
  EXPECT_EQ(s.r.output, "9223372036854775808\n15511210043330985984000000\n");
  EXPECT_GE(s.r.counters.deopts_by_reason[static_cast<std::size_t>(DeoptReason::IntOverflow)], 1u);
  EXPECT_NE(s.r.trace.find("reason=deopt"), std::string::npos);
}

TEST(DeoptTest, LocalKindChangeInsideHotLoop) {
  const std::string src =
      "def main(n) {\n  x = 0\n  for i in range(0, n) {\n    x = x + 1\n"
      "    if i == 150 {\n      x = 0.5\n    }\n  }\n  return x\n}\n";
  Session s(src, opt2(), "main", {300});
  EXPECT_EQ(s.r.result_repr, "149.5");
  EXPECT_GE(s.r.counters.deopts_by_reason[static_cast<std::size_t>(DeoptReason::LocalKind)], 1u);
}

TEST(DeoptTest, ListKindAndBoundsGuards) {
  const std::string src =
      "def main(n) {\n  l = [1.0, 2.0]\n  s = 0.0\n  for i in range(0, n) {\n    s = s + l[i % 2]\n"
      "    if i == 200 {\n      l[0] = 1\n    }\n  }\n  print(s)\n  m = []\n  for k in range(0, 260) {\n"
      "    append(m, 0.5)\n  }\n  t = 0.0\n  k = 0\n  while k < n {\n    j = k + k // 250 * 1000\n"
      "    t = t + m[j]\n    k = k + 1\n  }\n  return t\n}\n";
  Session s(src, opt2(), "main", {300});
  EXPECT_EQ(s.r.output, "450.0\n");
  EXPECT_FALSE(s.r.ok);
  EXPECT_EQ(s.r.error_kind, ErrorKind::IndexOutOfRange);
  EXPECT_GE(s.r.counters.deopts_by_reason[static_cast<std::size_t>(DeoptReason::ListKind)], 1u);
  EXPECT_GE(s.r.counters.deopts_by_reason[static_cast<std::size_t>(DeoptReason::IndexBounds)], 1u);
}

TEST(DeoptTest, RepeatedDeoptsBlacklistTheWindow) {
  VmConfig cfg = opt2();
  cfg.stress = DeoptStress{1.0, 3};
  cfg.threshold = 5;
  Session s("def main(n) {\n  s = 0\n  for i in range(0, n) {\n    s = s + i\n  }\n  return s\n}\n", cfg, "main",
            {5000});
  EXPECT_EQ(s.r.result_repr, "12497500");
  const CodeObject& c = s.code("main");
  bool any_blacklisted = false;
  for (bool b : c.no_region) any_blacklisted |= b;
  EXPECT_TRUE(any_blacklisted);
  // Guard-free windows may stay; nothing covers a blacklisted pc.
  for (const Region& r : c.regions)
    for (std::uint32_t q = r.start; q < r.end; ++q) EXPECT_FALSE(c.no_region[q]) << q;
  std::uint64_t total = 0;
  for (auto [start, n] : c.region_deopts) {
    EXPECT_LE(n, static_cast<std::uint32_t>(cfg.deopt_limit)) << start;
    total += n;
  }
  EXPECT_EQ(s.r.counters.deopts, total);
}

TEST(TraceTest, AllCorpusTraceLinesWellFormed) {
  const std::regex line(R"(^pc=\d+ [A-Z_a-z0-9]+ -> [A-Z_a-z0-9]+ reason=(l1|l2|dequicken|deopt|super)$)");
  auto programs = testing::bench_corpus(MLQ_SOURCE_DIR, false);
  auto rnd = testing::random_corpus(30);
  programs.insert(programs.end(), rnd.begin(), rnd.end());
  bool saw_super = false;
  for (const auto& p : programs) {
    VmConfig cfg = opt2(true);
    cfg.stress = DeoptStress{0.05, 11};
    Session s(p.source, cfg, p.entry, p.args);
    for (const auto& l : lines(s.r.trace)) {
      EXPECT_TRUE(std::regex_match(l, line)) << p.name << ": " << l;
      saw_super |= l.find("reason=super") != std::string::npos;
    }
  }
  EXPECT_TRUE(saw_super);
}

TEST(TaggedTest, SlotTagsConsistentUnderStress) {
  auto programs = testing::bench_corpus(MLQ_SOURCE_DIR, false);
  auto rnd = testing::random_corpus(60);
  programs.insert(programs.end(), rnd.begin(), rnd.end());
  for (const auto& p : programs) {
    VmConfig ref;
    ref.opt = 0;
    const std::string want = run_source(p.source, ref, p.entry, p.args).run.observable();
    for (double prob : {0.0, 0.1}) {
      VmConfig cfg = opt2();
      cfg.tagged = true;
      cfg.threshold = 3;
      if (prob > 0) cfg.stress = DeoptStress{prob, 17};
      Outcome o = run_source(p.source, cfg, p.entry, p.args);
      EXPECT_EQ(o.run.observable(), want) << p.name;
      EXPECT_EQ(o.live_after, 0) << p.name;
    }
  }
}

TEST(StateTest, CodeStatesFollowTiering) {
  const std::string src = "def main(n) {\n  s = 0\n  for i in range(0, n) {\n    s = s + i\n  }\n  return s\n}\n";
  {
    VmConfig cfg;
    cfg.opt = 1;
    Session s(src, cfg, "main", {500});
    EXPECT_EQ(s.code("main").opt_state, OptState::Cold);
  }
  Session s(src, opt2(), "main", {500});
  EXPECT_EQ(s.code("main").opt_state, OptState::Optimized);
}

}  // namespace
}  // namespace mlq
