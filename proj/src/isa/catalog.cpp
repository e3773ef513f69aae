#include <sstream>
#include <unordered_map>

#include "mlq/analysis.hpp"
#include "mlq/isa.hpp"

namespace mlq {

namespace {

const OpcodeInfo kCatalog[] = {
#include "mlq_catalog.inc"
};

static_assert(sizeof(kCatalog) / sizeof(kCatalog[0]) == kOpcodeCount);

}  // namespace

const OpcodeInfo& op_info(Op op) { return kCatalog[static_cast<std::size_t>(op)]; }

std::optional<Op> find_op(std::string_view mnemonic) {
  static const std::unordered_map<std::string_view, Op> index = [] {
    std::unordered_map<std::string_view, Op> m;
    for (std::size_t i = 0; i < kOpcodeCount; ++i) m.emplace(kCatalog[i].mnemonic, static_cast<Op>(i));
    return m;
  }();
  auto it = index.find(mnemonic);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::vector<const OpcodeInfo*> tiers() {
  std::vector<const OpcodeInfo*> out;
  for (const auto& info : kCatalog) out.push_back(&info);
  return out;
}

StackEffect stack_effect(Op op, std::uint16_t operand) {
  const OpcodeInfo& info = op_info(op);
  StackEffect e;
  for (StackKind k : info.pops) e.pops += k == StackKind::Argc ? operand : slot_width(k);
  for (StackKind k : info.pushes) e.pushes += slot_width(k);
  return e;
}

std::string_view opt_state_name(OptState s) {
  switch (s) {
    case OptState::Cold: return "COLD";
    case OptState::Profiling: return "PROFILING";
    case OptState::Optimized: return "OPTIMIZED";
    case OptState::Blacklisted: return "BLACKLISTED";
  }
  return "?";
}

std::string_view slot_tag_name(SlotTag t) {
  switch (t) {
    case SlotTag::Ref: return "ref";
    case SlotTag::RawInt: return "$int";
    case SlotTag::RawFloat: return "$float";
    case SlotTag::RawComplexLo: return "$complex.lo";
    case SlotTag::RawComplexHi: return "$complex.hi";
    case SlotTag::RawBool: return "$bool";
    case SlotTag::Borrowed: return "&list";
  }
  return "?";
}

std::string_view guard_kind_name(GuardKind g) {
  switch (g) {
    case GuardKind::LocalIsInt: return "local-is-int";
    case GuardKind::LocalIsFloat: return "local-is-float";
    case GuardKind::LocalIsComplex: return "local-is-complex";
    case GuardKind::ListElemKind: return "list-elem-kind";
    case GuardKind::IntOverflow: return "int-overflow";
    case GuardKind::IndexInBounds: return "index-in-bounds";
    case GuardKind::ZeroDiv: return "zero-div";
  }
  return "?";
}

void CodeObject::finalize() {
  const std::size_t n = instrs.size();
  if (original_instrs.empty()) original_instrs = instrs;
  lines.resize(n, 0);
  back_edge_counters.assign(n, 0);
  sites.assign(n, SiteState{});
  region_of.assign(n, -1);
  no_region.assign(n, false);
}

void CodeObject::release_consts(ObjStore& store) {
  for (Value* v : consts) store.decref(v);
  consts.clear();
}

std::string disassemble(const CodeObject& code, DisasmOptions opts) {
  std::ostringstream os;
  for (std::size_t pc = 0; pc < code.instrs.size(); ++pc) {
    const Instr& in = code.instrs[pc];
    const OpcodeInfo& info = op_info(in.op);
    if (pc) os << '\n';
    os << pc << ' ' << info.mnemonic << ' ' << in.operand << " [" << tier_tag(info.tier) << ']';
    if (info.tier == Tier::Super) {
      os << " =";
      for (std::size_t k = 0; k < info.fused.size; ++k)
        os << (k ? "," : " ") << mnemonic(static_cast<Op>(info.fused.ops[k]));
    }
    if (opts.lines && pc < code.lines.size()) os << "  ; line " << code.lines[pc];
  }
  if (opts.regions) {
    os << "\nregions: " << code.regions.size() << " state=" << opt_state_name(code.opt_state);
    for (std::size_t r = 0; r < code.regions.size(); ++r) {
      const Region& reg = code.regions[r];
      os << "\nregion " << r << ": pc " << reg.start << ".." << reg.end << " base=" << reg.base_depth
         << " deopts=" << reg.deopt_count;
      os << "\n  guards:";
      for (const auto& g : reg.guards) os << ' ' << g.pc << ':' << guard_kind_name(g.kind);
      os << "\n  entry:";
      for (const auto& s : reg.entry_recipe) {
        os << ' ';
        if (s.local < code.local_names.size()) os << code.local_names[s.local];
        else os << '#' << s.local;
        os << '=' << slot_tag_name(s.repr);
      }
      os << "\n  exit:";
      for (const auto& s : reg.exit_recipe) os << ' ' << slot_tag_name(s.repr);
    }
    std::size_t blacklisted = 0;
    for (bool b : code.no_region) blacklisted += b;
    if (blacklisted) os << "\nblacklisted pcs: " << blacklisted;
  }
  return os.str();
}

std::string Diagnostic::str() const { return "pc " + std::to_string(pc) + ": " + message; }

std::vector<Diagnostic> validate(const CodeObject& code) {
  try {
    return analysis::abstract_walk(code, {}).errors;
  } catch (const analysis::AnalysisBailout& e) {
    return {{0, e.what()}};
  }
}

}  // namespace mlq
