// Abstract interpretation of operand-stack and local types over a code object.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlq/isa.hpp"

namespace mlq::analysis {

enum class AbsKind : std::uint8_t { Bottom, Int, Float, Complex, Bool, Str, None, Func, List, Top };
enum class ElemT : std::uint8_t { Int, Float, Unknown };

struct AbsType {
  AbsKind kind = AbsKind::Bottom;
  ElemT elem = ElemT::Unknown;  // meaningful for List only

  static AbsType bottom() { return {}; }
  static AbsType top() { return {AbsKind::Top, ElemT::Unknown}; }
  static AbsType of(AbsKind k) { return {k, ElemT::Unknown}; }
  static AbsType list_of(ElemT e) { return {AbsKind::List, e}; }

  bool concrete() const { return kind != AbsKind::Bottom && kind != AbsKind::Top; }
  // Unboxed width in slots.
  int width() const { return kind == AbsKind::Complex ? 2 : 1; }
  bool operator==(const AbsType&) const = default;
  std::string str() const;
};

AbsType join(AbsType a, AbsType b);
bool leq(AbsType a, AbsType b);
// Speculative refinement: the seed wins when it is a concrete refinement of t.
AbsType narrow(AbsType t, AbsType seed);
AbsType abs_of_kind(StackKind k);
AbsType abs_of_value(const Value* v);

struct AbsVal {
  AbsType type;
  std::int32_t origin = -1;  // pc of the LOAD_FAST that produced this copy of a local
  bool operator==(const AbsVal&) const = default;
};

struct AbsState {
  bool reached = false;
  std::vector<AbsVal> stack;
  std::vector<AbsType> locals;
  bool operator==(const AbsState&) const = default;
};

/// Operand kinds observed at a pc, read off the INCA opcode installed there.
struct FeedbackEntry {
  std::uint32_t pc;
  std::vector<StackKind> operands;
};
using TypeFeedback = std::vector<FeedbackEntry>;
TypeFeedback feedback_from(const CodeObject& code);

struct WalkResult {
  std::vector<AbsState> before;  // state before each pc
  std::vector<AbsType> seeds;    // per local
  int iterations = 0;            // sweeps of the final fixpoint
  std::vector<Diagnostic> errors;
};

class AnalysisBailout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxSweeps = 100;

/// Forward fixpoint over the basic blocks of `code`. Consumers in `feedback`
/// seed the locals that feed them; `seeds` (if non-empty) are used directly
/// instead. Structural errors are collected, never thrown; a fixpoint that
/// does not settle within kMaxSweeps throws AnalysisBailout.
WalkResult abstract_walk(const CodeObject& code, const TypeFeedback& feedback,
                         const std::vector<AbsType>& seeds = {});

/// Basic-block leaders of the current instruction stream.
std::vector<bool> block_leaders(const CodeObject& code);

}  // namespace mlq::analysis
