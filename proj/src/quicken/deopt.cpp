#include <stdexcept>

#include "mlq/machine.hpp"
#include "mlq/quicken.hpp"

namespace mlq {

std::string_view deopt_reason_name(DeoptReason r) {
  switch (r) {
    case DeoptReason::LocalKind: return "local-kind";
    case DeoptReason::ListKind: return "list-kind";
    case DeoptReason::IntOverflow: return "int-overflow";
    case DeoptReason::ZeroDiv: return "zero-div";
    case DeoptReason::IndexBounds: return "index-bounds";
  }
  return "?";
}

// Deoptimizes at constituent `k` of the instruction at ip: the raw stack is
// re-boxed per the region's layout, the window reverts to its generic code
// and execution resumes at the failing pc.
template <bool Tagged>
Flow Machine::deoptimize(int k, DeoptReason reason) {
  const std::uint32_t p = pc() + static_cast<std::uint32_t>(k);
  const std::int32_t ri = code->region_of[p];
  if (ri < 0) throw std::logic_error("deopt outside a region at pc " + std::to_string(p));
  Region& reg = code->regions[static_cast<std::size_t>(ri)];

  const std::vector<SlotTag>& layout = reg.layouts[p - reg.start];
  Slot* base = stack_base + reg.base_depth;
  Slot* w = base;
  for (std::size_t j = 0; j < layout.size(); ++j) {
    Slot s = base[j];
    Value* v = nullptr;
    switch (layout[j]) {
      case SlotTag::RawInt: v = store.make_int(s.i); break;
      case SlotTag::RawFloat: v = store.make_float(s.f); break;
      case SlotTag::RawBool:
        v = store.bool_value(s.i != 0);
        store.incref(v);
        break;
      case SlotTag::Borrowed:
        v = s.ref;
        store.incref(v);
        break;
      case SlotTag::RawComplexLo:
        v = store.make_complex({s.f, base[j + 1].f});
        ++j;
        break;
      case SlotTag::RawComplexHi:
      case SlotTag::Ref: throw std::logic_error("bad region layout at pc " + std::to_string(p));
    }
    w->ref = v;
    if constexpr (Tagged) tag(w) = SlotTag::Ref;
    ++w;
  }
  sp = w;

  ++counters.deopts;
  ++counters.deopts_by_reason[static_cast<std::size_t>(reason)];

  for (std::uint32_t q = reg.start; q < reg.end; ++q) {
    Instr& in = code->instrs[q];
    const Instr orig = code->original_instrs[q];
    if (in == orig) continue;
    if (cfg.trace) trace += quicken::trace_line(q, in.op, orig.op, "deopt");
    in = orig;
    ++code->sites[q].rewrites;
  }
  const std::uint32_t start = reg.start, end = reg.end;
  code->regions.erase(code->regions.begin() + ri);
  quicken::index_regions(*code);
  if (++code->region_deopts[start] >= static_cast<std::uint32_t>(cfg.deopt_limit))
    for (std::uint32_t q = start; q < end; ++q) code->no_region[q] = true;

  code->opt_state = OptState::Profiling;
  std::fill(code->back_edge_counters.begin(), code->back_edge_counters.end(), 0);
  ip = code_base + p;
  return Flow::Next;
}

template Flow Machine::deoptimize<false>(int, DeoptReason);
template Flow Machine::deoptimize<true>(int, DeoptReason);

}  // namespace mlq
