// Quickening passes: inline-cache specialization (L1) and unboxed regions (L2).
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlq/analysis.hpp"
#include "mlq/isa.hpp"

namespace mlq::quicken {

/// INCA opcode for a GENERIC opcode given the operands it is about to
/// consume, or nullopt when the combination has no specialization.
std::optional<Op> specialize(Op generic, std::span<const Value* const> operands);
/// GENERIC opcode an INCA opcode was specialized from (identity otherwise).
Op generic_of(Op op);
/// NAMA counterpart of an INCA opcode, if any.
std::optional<Op> unboxed_of(Op inca);

std::string trace_line(std::uint32_t pc, Op from, Op to, const char* reason);

struct L2Options {
  bool super = true;
  std::string* trace = nullptr;  // appends trace lines when set
};

struct L2Stats {
  int regions = 0;
  int rewrites = 0;
};

/// Forms unboxed regions over every stack-balanced window of eligible
/// instructions not already covered, then fuses superinstructions inside
/// them. Each rewritten pc is written once. Running it again on its own
/// output changes nothing.
L2Stats l2_optimize(CodeObject& code, const L2Options& opts);

/// Candidate windows without rewriting (for disassembly and tests).
struct Window {
  std::uint32_t start;
  std::uint32_t end;
};
std::vector<Window> candidate_windows(const CodeObject& code, const analysis::WalkResult& walk);

/// Rebuilds region_of from regions.
void index_regions(CodeObject& code);

}  // namespace mlq::quicken
