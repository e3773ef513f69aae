// Instruction encoding, opcode catalog and code objects.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlq/isa_kinds.hpp"
#include "mlq/object.hpp"
#include "mlq_opcodes.hpp"  // generated: enum class Op, kOpcodeCount

namespace mlq {

struct KindSeq {
  std::uint8_t size = 0;
  std::array<StackKind, 12> kinds{};

  const StackKind* begin() const { return kinds.data(); }
  const StackKind* end() const { return kinds.data() + size; }
};

struct FusedSeq {
  std::uint8_t size = 0;
  std::array<std::uint16_t, 6> ops{};
};

struct OpcodeInfo {
  const char* mnemonic;
  Tier tier;
  Role role;
  const char* tmpl;
  KindSeq pops;
  KindSeq pushes;
  const char* guards;  // comma-separated guard kinds
  bool side_effect_free;
  bool guarded_effect;
  bool fusable;
  std::uint8_t length;  // instruction slots consumed (superinstructions, store-keep)
  FusedSeq fused;       // constituents of a SUPER opcode
};

const OpcodeInfo& op_info(Op op);
inline const char* mnemonic(Op op) { return op_info(op).mnemonic; }
inline Tier tier_of(Op op) { return op_info(op).tier; }
std::optional<Op> find_op(std::string_view mnemonic);

/// Full opcode listing, indexed by opcode value.
std::vector<const OpcodeInfo*> tiers();

/// Slot widths popped and pushed; CALL_FUNCTION and BUILD_LIST take the
/// operand into account.
struct StackEffect {
  int pops = 0;
  int pushes = 0;
};
StackEffect stack_effect(Op op, std::uint16_t operand);

struct Instr {
  Op op = Op::NOP;
  std::uint16_t operand = 0;

  bool operator==(const Instr&) const = default;
};

inline std::uint32_t encode(Instr i) {
  return (static_cast<std::uint32_t>(i.op) << 16) | i.operand;
}
inline Instr decode(std::uint32_t w) {
  return {static_cast<Op>(w >> 16), static_cast<std::uint16_t>(w & 0xffff)};
}

enum class OptState : std::uint8_t { Cold, Profiling, Optimized, Blacklisted };
std::string_view opt_state_name(OptState s);

/// Representation of an operand-stack slot above a region's base.
enum class SlotTag : std::uint8_t { Ref, RawInt, RawFloat, RawComplexLo, RawComplexHi, RawBool, Borrowed };
std::string_view slot_tag_name(SlotTag t);

enum class GuardKind : std::uint8_t { LocalIsInt, LocalIsFloat, LocalIsComplex, ListElemKind, IntOverflow, IndexInBounds, ZeroDiv };
std::string_view guard_kind_name(GuardKind g);

struct GuardSite {
  std::uint32_t pc;
  GuardKind kind;
  bool operator==(const GuardSite&) const = default;
};

/// Per-local action taken when a region is entered (guarded unboxing loads)
/// or left (boxing stores).
struct RecipeStep {
  std::uint16_t local;
  SlotTag repr;
  bool operator==(const RecipeStep&) const = default;
};

struct Region {
  std::uint32_t start = 0;
  std::uint32_t end = 0;  // half-open
  std::uint32_t base_depth = 0;  // boxed stack depth at entry, unchanged by the window
  std::vector<GuardSite> guards;
  std::vector<RecipeStep> entry_recipe;
  std::vector<RecipeStep> exit_recipe;  // raw slots live at end (always empty for balanced windows)
  // Raw slot representations above the base, before each pc in the window.
  std::vector<std::vector<SlotTag>> layouts;
  std::vector<Instr> original;
  std::uint32_t deopt_count = 0;
};

/// L1 inline-cache state of one instruction site.
struct SiteState {
  std::uint8_t mismatches = 0;
  bool megamorphic = false;
  std::uint16_t rewrites = 0;
  std::uint16_t regions = 0;  // unboxed regions that have covered this pc
};

struct CodeObject {
  std::string name;
  int arity = 0;
  int nlocals = 0;
  int max_depth = 0;  // static boxed stack depth
  std::vector<std::string> local_names;
  std::vector<Instr> instrs;
  std::vector<Instr> original_instrs;
  std::vector<Value*> consts;  // owned references
  std::vector<int> lines;
  std::vector<std::uint32_t> back_edge_counters;
  std::vector<SiteState> sites;
  std::vector<Region> regions;
  std::vector<std::int32_t> region_of;  // pc -> index into regions, -1 outside
  std::vector<bool> no_region;          // blacklisted by repeated deopts
  std::map<std::uint32_t, std::uint32_t> region_deopts;  // region start -> deopts so far
  OptState opt_state = OptState::Cold;

  /// Sizes the per-pc side tables after `instrs` is filled.
  void finalize();
  void release_consts(ObjStore& store);
  std::size_t size() const { return instrs.size(); }
  const Region* region_at(std::uint32_t pc) const {
    const std::int32_t r = region_of[pc];
    return r < 0 ? nullptr : &regions[static_cast<std::size_t>(r)];
  }
};

struct DisasmOptions {
  bool regions = false;
  bool lines = false;
};

std::string disassemble(const CodeObject& code, DisasmOptions opts = {});

struct Diagnostic {
  std::uint32_t pc;
  std::string message;
  std::string str() const;
};

/// Jump targets, const/local bounds and stack balance along every path.
std::vector<Diagnostic> validate(const CodeObject& code);

}  // namespace mlq
