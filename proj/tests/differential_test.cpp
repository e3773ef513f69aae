// Observable output across dispatch modes, tiers and forced deopts, against
// the opt-0 switch interpreter as the reference.
#include <gtest/gtest.h>

#include "corpus.hpp"
#include "mlq/vm.hpp"

namespace mlq {
namespace {

using testing::CorpusProgram;

std::vector<CorpusProgram> corpus(int randoms) {
  auto programs = testing::bench_corpus(MLQ_SOURCE_DIR, false);
  auto rnd = testing::random_corpus(randoms);
  programs.insert(programs.end(), rnd.begin(), rnd.end());
  return programs;
}

std::string reference(const CorpusProgram& p) {
  VmConfig cfg;
  cfg.opt = 0;
  Outcome o = run_source(p.source, cfg, p.entry, p.args);
  EXPECT_EQ(o.live_after, 0) << p.name;
  return o.run.observable();
}

TEST(DifferentialTest, ConfigGrid) {
  for (const auto& p : corpus(60)) {
    const std::string want = reference(p);
    for (VmConfig cfg : testing::config_grid()) {
      cfg.threshold = 20;
      Outcome o = run_source(p.source, cfg, p.entry, p.args);
      EXPECT_EQ(o.run.observable(), want) << p.name << " " << config_name(cfg);
      EXPECT_EQ(o.live_after, 0) << p.name << " " << config_name(cfg);
    }
  }
}

TEST(DifferentialTest, LowThresholdsAndStress) {
  std::uint64_t deopts = 0;
  for (const auto& p : corpus(60)) {
    const std::string want = reference(p);
    for (std::uint32_t threshold : {1u, 7u}) {
      for (std::uint64_t seed : {1u, 2u}) {
        VmConfig cfg;
        cfg.threshold = threshold;
        cfg.dispatch = seed == 1 ? Dispatch::Switch : Dispatch::Threaded;
        cfg.stress = DeoptStress{0.05, seed};
        Outcome o = run_source(p.source, cfg, p.entry, p.args);
        EXPECT_EQ(o.run.observable(), want) << p.name << " t=" << threshold << " seed=" << seed;
        EXPECT_EQ(o.live_after, 0) << p.name;
        deopts += o.run.counters.deopts;
      }
    }
  }
  EXPECT_GT(deopts, 0u);
}

TEST(DifferentialTest, HeavyStressStillAgrees) {
  for (const auto& p : corpus(20)) {
    const std::string want = reference(p);
    VmConfig cfg;
    cfg.threshold = 2;
    cfg.stress = DeoptStress{0.5, 99};
    cfg.tagged = true;
    Outcome o = run_source(p.source, cfg, p.entry, p.args);
    EXPECT_EQ(o.run.observable(), want) << p.name;
    EXPECT_EQ(o.live_after, 0) << p.name;
  }
}

TEST(DifferentialTest, GuestErrorsLeaveNoGarbage) {
  const char* programs[] = {
      "l = [1.0, 2.0]\nx = [l, l]\nfor i in range(0, 500) {\n  x = [x, l[i % 3]]\n}\n",
      "def f(n) {\n  s = [n]\n  return f(n + 1)\n}\nf(0)\n",
      "s = 0\nfor i in range(0, 300) {\n  s = s + 10 // (200 - i)\n}\n",
      "a = 1.5\nfor i in range(0, 300) {\n  a = a * 1.5\n  if i == 250 {\n    a = a + \"x\"\n  }\n}\n"};
  for (const char* src : programs) {
    VmConfig ref;
    ref.opt = 0;
    const std::string want = run_source(src, ref).run.observable();
    EXPECT_NE(want.find("error "), std::string::npos) << src;
    for (VmConfig cfg : testing::config_grid()) {
      Outcome o = run_source(src, cfg);
      EXPECT_EQ(o.run.observable(), want) << src << " " << config_name(cfg);
      EXPECT_EQ(o.live_after, 0) << src << " " << config_name(cfg);
    }
  }
}

}  // namespace
}  // namespace mlq
