// Seeded random mlq-script programs for differential testing.
#pragma once

#include <cstdint>
#include <string>

namespace mlq::testing {

struct GenOptions {
  int max_outer_iters = 260;  // enough to cross the default hot-loop threshold
  int statements = 14;
};

/// Deterministic in `seed`. Programs always terminate; some end in a guest error.
std::string random_program(std::uint64_t seed, const GenOptions& opts = {});

}  // namespace mlq::testing
