#include <algorithm>
#include <optional>

#include "mlq/quicken.hpp"

namespace mlq::quicken {

using analysis::AbsKind;
using analysis::AbsState;
using analysis::AbsType;
using analysis::ElemT;
using analysis::WalkResult;

void index_regions(CodeObject& code) {
  code.region_of.assign(code.instrs.size(), -1);
  for (std::size_t r = 0; r < code.regions.size(); ++r)
    for (std::uint32_t p = code.regions[r].start; p < code.regions[r].end; ++p)
      code.region_of[p] = static_cast<std::int32_t>(r);
}

namespace {

Op must(const char* m) {
  auto op = find_op(m);
  if (!op) throw std::logic_error(std::string("opcode missing from catalog: ") + m);
  return *op;
}

struct Ops {
  Op load_int = must("NAMA_LOAD_INT"), load_float = must("NAMA_LOAD_FLOAT"),
     load_complex = must("NAMA_LOAD_COMPLEX"), load_int_list = must("NAMA_LOAD_INT_LIST"),
     load_float_list = must("NAMA_LOAD_FLOAT_LIST"), const_int = must("NAMA_LOAD_CONST_INT"),
     const_float = must("NAMA_LOAD_CONST_FLOAT"), const_complex = must("NAMA_LOAD_CONST_COMPLEX"),
     store_int = must("NAMA_STORE_INT"), store_float = must("NAMA_STORE_FLOAT"),
     store_complex = must("NAMA_STORE_COMPLEX"), keep_int = must("NAMA_STORE_KEEP_INT"),
     keep_float = must("NAMA_STORE_KEEP_FLOAT"), keep_complex = must("NAMA_STORE_KEEP_COMPLEX"),
     jump_raw = must("NAMA_JUMP_IF_FALSE_RAW"), pad = must("NAMA_NOP");
};

const Ops& ops() {
  static const Ops o;
  return o;
}

AbsType top_of(const AbsState& s, std::size_t back) {
  if (s.stack.size() < back + 1) return AbsType::bottom();
  return s.stack[s.stack.size() - 1 - back].type;
}

AbsType local_load_type(const CodeObject& code, const WalkResult& w, std::uint32_t pc, std::uint16_t l) {
  const AbsState& s = w.before[pc];
  AbsType t = l < s.locals.size() ? s.locals[l] : AbsType::top();
  if (t.kind == AbsKind::Bottom) t = AbsType::top();
  if (l < w.seeds.size()) t = analysis::narrow(t, w.seeds[l]);
  (void)code;
  return t;
}

// The unboxed replacement of the instruction at pc, judged on its own.
std::optional<Instr> unboxed(const CodeObject& code, const WalkResult& w, std::uint32_t pc) {
  const Instr in = code.instrs[pc];
  const AbsState& s = w.before[pc];
  if (!s.reached || code.region_of[pc] >= 0 || code.no_region[pc]) return std::nullopt;
  const Ops& o = ops();
  switch (in.op) {
    case Op::LOAD_FAST: {
      const AbsType t = local_load_type(code, w, pc, in.operand);
      if (t == AbsType::of(AbsKind::Int)) return Instr{o.load_int, in.operand};
      if (t == AbsType::of(AbsKind::Float)) return Instr{o.load_float, in.operand};
      if (t == AbsType::of(AbsKind::Complex)) return Instr{o.load_complex, in.operand};
      if (t == AbsType::list_of(ElemT::Int)) return Instr{o.load_int_list, in.operand};
      if (t == AbsType::list_of(ElemT::Float)) return Instr{o.load_float_list, in.operand};
      return std::nullopt;
    }
    case Op::LOAD_CONST: {
      if (in.operand >= code.consts.size()) return std::nullopt;
      switch (code.consts[in.operand]->kind) {
        case Kind::Int: return Instr{o.const_int, in.operand};
        case Kind::Float: return Instr{o.const_float, in.operand};
        case Kind::Complex: return Instr{o.const_complex, in.operand};
        default: return std::nullopt;
      }
    }
    case Op::STORE_FAST: {
      const AbsType t = top_of(s, 0);
      if (t == AbsType::of(AbsKind::Int)) return Instr{o.store_int, in.operand};
      if (t == AbsType::of(AbsKind::Float)) return Instr{o.store_float, in.operand};
      if (t == AbsType::of(AbsKind::Complex)) return Instr{o.store_complex, in.operand};
      return std::nullopt;
    }
    case Op::POP_JUMP_IF_FALSE:
      if (top_of(s, 0) == AbsType::of(AbsKind::Bool)) return Instr{o.jump_raw, in.operand};
      return std::nullopt;
    default: break;
  }
  if (tier_of(in.op) != Tier::Inca) return std::nullopt;
  const auto u = unboxed_of(in.op);
  if (!u) return std::nullopt;
  const OpcodeInfo& info = op_info(in.op);
  const std::size_t n = info.pops.size;
  if (s.stack.size() < n) return std::nullopt;
  for (std::size_t i = 0; i < n; ++i) {
    const AbsType want = analysis::abs_of_kind(info.pops.kinds[i]);
    if (!want.concrete() || !(s.stack[s.stack.size() - n + i].type == want)) return std::nullopt;
  }
  return Instr{*u, 0};
}

int entries_popped(Op op) { return op_info(op).pops.size; }
int entries_pushed(Op op) { return op_info(op).pushes.size; }

// Abstract stack entry inside a window: which local a borrowed list came from.
struct Entry {
  bool borrowed = false;
  std::uint16_t local = 0;
};

// Simulates [a, b) over unboxed ops; returns false when the window
// underflows its base, stores into a local whose list is borrowed, or feeds
// a list access from something other than a borrowed load.
struct Sim {
  std::vector<Entry> stack;
  bool step(const Instr& raw, std::uint16_t list_local_out[1]) {
    const OpcodeInfo& info = op_info(raw.op);
    if (info.role == Role::StoreLocal)
      for (const Entry& e : stack)
        if (e.borrowed && e.local == raw.operand) return false;
    const std::size_t n = info.pops.size;
    if (stack.size() < n) return false;
    for (std::size_t i = 0; i < n; ++i) {
      const StackKind k = info.pops.kinds[i];
      const Entry& e = stack[stack.size() - n + i];
      if (k == StackKind::BorrowedListInt || k == StackKind::BorrowedListFloat) {
        if (!e.borrowed) return false;
        list_local_out[0] = e.local;
      }
    }
    stack.resize(stack.size() - n);
    for (std::size_t i = 0; i < info.pushes.size; ++i) {
      const StackKind k = info.pushes.kinds[i];
      Entry e;
      if (k == StackKind::BorrowedListInt || k == StackKind::BorrowedListFloat) {
        e.borrowed = true;
        e.local = raw.operand;
      }
      stack.push_back(e);
    }
    return true;
  }
};

std::vector<SlotTag> tags_of(StackKind k) {
  switch (k) {
    case StackKind::RawInt: return {SlotTag::RawInt};
    case StackKind::RawFloat: return {SlotTag::RawFloat};
    case StackKind::RawComplex: return {SlotTag::RawComplexLo, SlotTag::RawComplexHi};
    case StackKind::RawBool: return {SlotTag::RawBool};
    case StackKind::BorrowedListInt:
    case StackKind::BorrowedListFloat: return {SlotTag::Borrowed};
    default: return {SlotTag::Ref};
  }
}

GuardKind guard_kind(std::string_view g, Op op) {
  if (g == "local-kind") {
    const StackKind k = op_info(op).pushes.kinds[0];
    return k == StackKind::RawInt ? GuardKind::LocalIsInt
           : k == StackKind::RawFloat ? GuardKind::LocalIsFloat
                                      : GuardKind::LocalIsComplex;
  }
  if (g == "list-elem-kind") return GuardKind::ListElemKind;
  if (g == "int-overflow") return GuardKind::IntOverflow;
  if (g == "zero-div") return GuardKind::ZeroDiv;
  return GuardKind::IndexInBounds;
}

}  // namespace

std::vector<Window> candidate_windows(const CodeObject& code, const WalkResult& w) {
  std::vector<Window> out;
  const std::uint32_t n = static_cast<std::uint32_t>(code.instrs.size());
  if (w.before.size() != n || !w.errors.empty()) return out;
  const std::vector<bool> leaders = analysis::block_leaders(code);
  std::vector<std::optional<Instr>> u(n);
  for (std::uint32_t pc = 0; pc < n; ++pc) u[pc] = unboxed(code, w, pc);

  std::uint32_t pc = 0;
  while (pc < n) {
    if (!u[pc]) {
      ++pc;
      continue;
    }
    // Maximal run inside one basic block; a conditional jump closes it.
    std::uint32_t e = pc;
    while (e < n && u[e] && (e == pc || !leaders[e])) {
      const bool cond = op_info(u[e]->op).role == Role::CondJump;
      ++e;
      if (cond) break;
    }
    // Greedy trim into stack-balanced windows.
    std::uint32_t a = pc;
    while (a < e) {
      Sim sim;
      int depth = 0;
      std::uint32_t best = 0;
      for (std::uint32_t x = a; x < e; ++x) {
        std::uint16_t lst[1] = {0};
        if (entries_popped(u[x]->op) > depth) break;
        if (!sim.step(*u[x], lst)) break;
        depth += entries_pushed(u[x]->op) - entries_popped(u[x]->op);
        if (depth == 0 && x + 1 - a >= 2) best = x + 1;
      }
      if (best) {
        out.push_back({a, best});
        a = best;
      } else {
        ++a;
      }
    }
    pc = e;
  }
  return out;
}

L2Stats l2_optimize(CodeObject& code, const L2Options& opts) {
  L2Stats stats;
  if (code.instrs.empty()) return stats;
  if (code.region_of.size() != code.instrs.size()) index_regions(code);
  WalkResult w;
  try {
    w = analysis::abstract_walk(code, analysis::feedback_from(code));
  } catch (const analysis::AnalysisBailout&) {
    return stats;
  }
  const std::vector<Window> windows = candidate_windows(code, w);
  if (windows.empty()) return stats;
  const std::vector<bool> leaders = analysis::block_leaders(code);
  const Ops& o = ops();

  for (const Window& win : windows) {
    const std::uint32_t len = win.end - win.start;
    std::vector<Instr> raw(len);
    Sim sim;
    for (std::uint32_t i = 0; i < len; ++i) {
      raw[i] = *unboxed(code, w, win.start + i);
      std::uint16_t lst[1] = {0};
      sim.step(raw[i], lst);
      // List accesses index the unbox cache by the list's local.
      for (StackKind k : op_info(raw[i].op).pops)
        if (k == StackKind::BorrowedListInt || k == StackKind::BorrowedListFloat) raw[i].operand = lst[0];
    }

    Region reg;
    reg.start = win.start;
    reg.end = win.end;
    reg.base_depth = static_cast<std::uint32_t>(w.before[win.start].stack.size());
    reg.original.assign(code.instrs.begin() + win.start, code.instrs.begin() + win.end);
    auto dc = code.region_deopts.find(win.start);
    reg.deopt_count = dc == code.region_deopts.end() ? 0 : dc->second;

    // Guards, entry recipe and per-pc layouts from the unfused sequence.
    std::vector<SlotTag> layout;
    std::vector<bool> recipe_seen(static_cast<std::size_t>(code.nlocals), false);
    for (std::uint32_t i = 0; i < len; ++i) {
      const Instr in = raw[i];
      const OpcodeInfo& info = op_info(in.op);
      reg.layouts.push_back(layout);
      std::string_view gs = info.guards;
      while (!gs.empty()) {
        const auto c = gs.find(',');
        reg.guards.push_back({win.start + i, guard_kind(gs.substr(0, c), in.op)});
        gs = c == std::string_view::npos ? std::string_view{} : gs.substr(c + 1);
      }
      if (info.role == Role::LoadLocal && in.operand < recipe_seen.size() && !recipe_seen[in.operand]) {
        recipe_seen[in.operand] = true;
        reg.entry_recipe.push_back({in.operand, tags_of(info.pushes.kinds[0])[0]});
      }
      std::size_t pop_slots = 0;
      for (StackKind k : info.pops) pop_slots += static_cast<std::size_t>(slot_width(k));
      layout.resize(layout.size() - pop_slots);
      for (StackKind k : info.pushes)
        for (SlotTag t : tags_of(k)) layout.push_back(t);
    }

    // Store followed by a reload of the same local keeps the value instead.
    std::vector<Instr> fin = raw;
    for (std::uint32_t i = 0; i + 1 < len; ++i) {
      const Op keep = raw[i].op == o.store_int ? o.keep_int
                      : raw[i].op == o.store_float ? o.keep_float
                      : raw[i].op == o.store_complex ? o.keep_complex
                                                     : Op::NOP;
      if (keep == Op::NOP || leaders[win.start + i + 1]) continue;
      const Op reload = raw[i].op == o.store_int ? o.load_int
                        : raw[i].op == o.store_float ? o.load_float
                                                     : o.load_complex;
      if (raw[i + 1].op != reload || raw[i + 1].operand != raw[i].operand) continue;
      if (fin[i].op != raw[i].op || fin[i + 1].op != raw[i + 1].op) continue;
      fin[i].op = keep;
      fin[i + 1].op = o.pad;
      ++i;
    }

    // Longest-match superinstruction fusion over fusable runs.
    std::vector<bool> in_super(len, false);
    if (opts.super) {
      for (std::uint32_t i = 0; i < len;) {
        std::size_t best_len = 0;
        Op best = Op::NOP;
        for (std::size_t s = kFirstSuperOpcode; s < kOpcodeCount; ++s) {
          const OpcodeInfo& si = op_info(static_cast<Op>(s));
          const std::size_t m = si.fused.size;
          if (m <= best_len || i + m > len) continue;
          bool ok = true;
          for (std::size_t k = 0; k < m && ok; ++k) {
            const Instr& c = fin[i + k];
            ok = static_cast<std::uint16_t>(c.op) == si.fused.ops[k] && op_info(c.op).fusable &&
                 (k == 0 || !leaders[win.start + i + k]);
          }
          if (ok) {
            best_len = m;
            best = static_cast<Op>(s);
          }
        }
        if (best_len >= 2) {
          fin[i].op = best;
          for (std::size_t k = 1; k < best_len; ++k) fin[i + k].op = o.pad;
          for (std::size_t k = 0; k < best_len; ++k) in_super[i + k] = true;
          i += static_cast<std::uint32_t>(best_len);
        } else {
          ++i;
        }
      }
    }

    for (std::uint32_t i = 0; i < len; ++i) {
      const std::uint32_t p = win.start + i;
      Instr& cur = code.instrs[p];
      ++code.sites[p].regions;
      if (cur == fin[i]) continue;
      if (opts.trace) *opts.trace += trace_line(p, cur.op, fin[i].op, in_super[i] ? "super" : "l2");
      cur = fin[i];
      ++code.sites[p].rewrites;
      ++stats.rewrites;
    }
    code.regions.push_back(std::move(reg));
    ++stats.regions;
  }
  std::sort(code.regions.begin(), code.regions.end(),
            [](const Region& x, const Region& y) { return x.start < y.start; });
  index_regions(code);
  return stats;
}

}  // namespace mlq::quicken
