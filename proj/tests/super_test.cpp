// Every superinstruction against its constituents, one step at a time, from
// randomized entry states. Guard failures (natural or forced by stress) must
// deoptimize to the same pc with the same boxed stack.
#include <gtest/gtest.h>

#include "superfuzz.hpp"

namespace mlq {
namespace {

TEST(SuperEquivalenceTest, FusedMatchesConstituents) {
  int supers = 0;
  for (const OpcodeInfo* info : tiers()) {
    if (info->tier != Tier::Super) continue;
    ++supers;
    const Op op = *find_op(info->mnemonic);
    const auto r = testing::check_super(op, 1000, 0x5eed + static_cast<std::uint64_t>(op));
    EXPECT_EQ(r.mismatches, 0) << info->mnemonic << "\n" << r.first_mismatch;
    // The trials must reach the deopt paths, not just the fast path.
    EXPECT_GT(r.deopts, 50) << info->mnemonic;
    EXPECT_LT(r.deopts, r.trials) << info->mnemonic;
  }
  EXPECT_GT(supers, 0);
}

}  // namespace
}  // namespace mlq
