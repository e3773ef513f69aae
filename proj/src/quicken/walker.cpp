#include <algorithm>

#include "mlq/analysis.hpp"

namespace mlq::analysis {

std::string AbsType::str() const {
  switch (kind) {
    case AbsKind::Bottom: return "bottom";
    case AbsKind::Int: return "int";
    case AbsKind::Float: return "float";
    case AbsKind::Complex: return "complex";
    case AbsKind::Bool: return "bool";
    case AbsKind::Str: return "str";
    case AbsKind::None: return "none";
    case AbsKind::Func: return "func";
    case AbsKind::List:
      return elem == ElemT::Int ? "list[int]" : elem == ElemT::Float ? "list[float]" : "list[?]";
    case AbsKind::Top: return "top";
  }
  return "?";
}

AbsType join(AbsType a, AbsType b) {
  if (a.kind == AbsKind::Bottom) return b;
  if (b.kind == AbsKind::Bottom) return a;
  if (a.kind != b.kind) return AbsType::top();
  if (a.kind == AbsKind::List && a.elem != b.elem) return AbsType::list_of(ElemT::Unknown);
  return a;
}

bool leq(AbsType a, AbsType b) { return join(a, b) == b; }

AbsType narrow(AbsType t, AbsType seed) {
  if (seed.concrete() && leq(seed, t) && t.kind != AbsKind::Bottom) return seed;
  return t;
}

AbsType abs_of_kind(StackKind k) {
  switch (k) {
    case StackKind::Int:
    case StackKind::RawInt: return AbsType::of(AbsKind::Int);
    case StackKind::Float:
    case StackKind::RawFloat: return AbsType::of(AbsKind::Float);
    case StackKind::Complex:
    case StackKind::RawComplex: return AbsType::of(AbsKind::Complex);
    case StackKind::Str: return AbsType::of(AbsKind::Str);
    case StackKind::Bool:
    case StackKind::RawBool: return AbsType::of(AbsKind::Bool);
    case StackKind::List: return AbsType::list_of(ElemT::Unknown);
    case StackKind::ListInt:
    case StackKind::BorrowedListInt: return AbsType::list_of(ElemT::Int);
    case StackKind::ListFloat:
    case StackKind::BorrowedListFloat: return AbsType::list_of(ElemT::Float);
    default: return AbsType::top();
  }
}

AbsType abs_of_value(const Value* v) {
  switch (v->kind) {
    case Kind::Int: return AbsType::of(AbsKind::Int);
    case Kind::Float: return AbsType::of(AbsKind::Float);
    case Kind::Complex: return AbsType::of(AbsKind::Complex);
    case Kind::Bool: return AbsType::of(AbsKind::Bool);
    case Kind::Str: return AbsType::of(AbsKind::Str);
    case Kind::None: return AbsType::of(AbsKind::None);
    case Kind::Function:
    case Kind::NativeFunction: return AbsType::of(AbsKind::Func);
    case Kind::List: {
      const ElemKind e = v->list->elem;
      return AbsType::list_of(e == ElemKind::Int ? ElemT::Int : e == ElemKind::Float ? ElemT::Float : ElemT::Unknown);
    }
    default: return AbsType::top();
  }
}

TypeFeedback feedback_from(const CodeObject& code) {
  TypeFeedback fb;
  for (std::uint32_t pc = 0; pc < code.instrs.size(); ++pc) {
    const OpcodeInfo& info = op_info(code.instrs[pc].op);
    if (info.tier != Tier::Inca) continue;
    fb.push_back({pc, std::vector<StackKind>(info.pops.begin(), info.pops.end())});
  }
  return fb;
}

namespace {

int slot_length(const Instr& in) {
  const OpcodeInfo& info = op_info(in.op);
  return info.tier == Tier::Super ? info.fused.size : info.length;
}

// The op that decides control flow at the tail of an instruction (the last
// constituent for a superinstruction).
Op tail_op(const CodeObject& code, std::uint32_t pc) {
  const OpcodeInfo& info = op_info(code.instrs[pc].op);
  if (info.tier == Tier::Super) return static_cast<Op>(info.fused.ops[info.fused.size - 1]);
  return code.instrs[pc].op;
}

class Walker {
 public:
  Walker(const CodeObject& code, const TypeFeedback& fb, const std::vector<AbsType>& seeds, WalkResult& out)
      : code_(code), seeds_(seeds), out_(out), consumer_(code.instrs.size(), nullptr) {
    for (const auto& e : fb)
      if (e.pc < consumer_.size()) consumer_[e.pc] = &e.operands;
    seed_acc_.assign(static_cast<std::size_t>(code.nlocals), AbsType::bottom());
    seed_seen_.assign(static_cast<std::size_t>(code.nlocals), false);
  }

  void run() {
    const std::size_t n = code_.instrs.size();
    out_.before.assign(n, AbsState{});
    out_.errors.clear();
    if (n == 0) {
      error(0, "empty code");
      return;
    }
    leaders_ = block_leaders(code_);
    std::vector<AbsState> entry(n);
    std::vector<bool> dirty(n, false);
    AbsState init;
    init.reached = true;
    init.locals.assign(static_cast<std::size_t>(code_.nlocals), AbsType::bottom());
    for (int l = 0; l < code_.arity && l < code_.nlocals; ++l) {
      const AbsType s = seed(static_cast<std::uint16_t>(l));
      init.locals[static_cast<std::size_t>(l)] = s.concrete() ? s : AbsType::top();
    }
    entry[0] = init;
    dirty[0] = true;
    int sweeps = 0;
    for (;;) {
      bool any = false;
      for (std::uint32_t b = 0; b < n; ++b) {
        if (!leaders_[b] || !dirty[b]) continue;
        dirty[b] = false;
        any = true;
        process_block(b, entry[b], [&](std::uint32_t succ, const AbsState& st) {
          if (merge(entry[succ], st, succ)) dirty[succ] = true;
        });
      }
      if (!any) break;
      if (++sweeps > kMaxSweeps)
        throw AnalysisBailout("abstract walk of '" + code_.name + "' did not reach a fixpoint");
    }
    out_.iterations = sweeps;
  }

  const std::vector<AbsType>& collected_seeds() {
    for (std::size_t l = 0; l < seed_acc_.size(); ++l)
      if (!seed_acc_[l].concrete()) seed_acc_[l] = AbsType::bottom();
    return seed_acc_;
  }

 private:
  AbsType seed(std::uint16_t local) const {
    return local < seeds_.size() ? seeds_[local] : AbsType::bottom();
  }

  void error(std::uint32_t pc, std::string msg) {
    for (const auto& d : out_.errors)
      if (d.pc == pc && d.message == msg) return;
    out_.errors.push_back({pc, std::move(msg)});
  }

  bool merge(AbsState& into, const AbsState& st, std::uint32_t pc) {
    if (!into.reached) {
      into = st;
      return true;
    }
    if (into.stack.size() != st.stack.size()) {
      error(pc, "inconsistent stack depth at pc " + std::to_string(pc));
      return false;
    }
    bool changed = false;
    for (std::size_t i = 0; i < st.stack.size(); ++i) {
      AbsVal j{join(into.stack[i].type, st.stack[i].type),
               into.stack[i].origin == st.stack[i].origin ? st.stack[i].origin : -1};
      if (!(j == into.stack[i])) {
        into.stack[i] = j;
        changed = true;
      }
    }
    for (std::size_t l = 0; l < st.locals.size(); ++l) {
      AbsType j = join(into.locals[l], st.locals[l]);
      if (!(j == into.locals[l])) {
        into.locals[l] = j;
        changed = true;
      }
    }
    return changed;
  }

  bool check_jump(std::uint32_t pc, std::uint16_t target) {
    if (target >= code_.instrs.size()) {
      error(pc, "bad jump target " + std::to_string(target) + " at pc " + std::to_string(pc));
      return false;
    }
    return true;
  }

  bool pop(std::uint32_t pc, AbsState& s, std::size_t n) {
    if (s.stack.size() < n) {
      error(pc, "stack underflow at pc " + std::to_string(pc));
      s.stack.clear();
      return false;
    }
    s.stack.resize(s.stack.size() - n);
    return true;
  }

  // Applies one (non-super) instruction.
  void apply(std::uint32_t pc, Op op, std::uint16_t operand, AbsState& s) {
    const OpcodeInfo& info = op_info(op);
    switch (info.role) {
      case Role::Pad: return;
      case Role::LoadLocal: {
        if (operand >= code_.nlocals) {
          error(pc, "bad local index " + std::to_string(operand) + " at pc " + std::to_string(pc));
          s.stack.push_back({AbsType::top(), -1});
          return;
        }
        AbsType t;
        if (info.tier == Tier::Nama) {
          t = abs_of_kind(info.pushes.kinds[0]);
        } else {
          t = s.locals[operand];
          if (t.kind == AbsKind::Bottom) t = AbsType::top();
          t = narrow(t, seed(operand));
        }
        s.stack.push_back({t, static_cast<std::int32_t>(pc)});
        return;
      }
      case Role::LoadConst: {
        if (operand >= code_.consts.size()) {
          error(pc, "bad const index " + std::to_string(operand) + " at pc " + std::to_string(pc));
          s.stack.push_back({AbsType::top(), -1});
          return;
        }
        AbsType t = info.tier == Tier::Nama ? abs_of_kind(info.pushes.kinds[0]) : abs_of_value(code_.consts[operand]);
        s.stack.push_back({t, -1});
        return;
      }
      case Role::StoreLocal:
      case Role::StoreKeep: {
        if (s.stack.empty()) {
          error(pc, "stack underflow at pc " + std::to_string(pc));
          return;
        }
        const AbsType v = s.stack.back().type;
        if (info.role == Role::StoreLocal) s.stack.pop_back();
        if (operand >= code_.nlocals) {
          error(pc, "bad local index " + std::to_string(operand) + " at pc " + std::to_string(pc));
          return;
        }
        s.locals[operand] = narrow(v, seed(operand));
        return;
      }
      default: break;
    }
    std::size_t npops = 0;
    for (StackKind k : info.pops) npops += k == StackKind::Argc ? operand : 1;
    if (s.stack.size() >= npops) note_consumers(pc, s, npops);
    if (!pop(pc, s, npops)) {
      for (StackKind k : info.pushes) s.stack.push_back({abs_of_kind(k), -1});
      return;
    }
    for (StackKind k : info.pushes) s.stack.push_back({abs_of_kind(k), -1});
  }

  void note_consumers(std::uint32_t pc, const AbsState& s, std::size_t npops) {
    const auto* kinds = consumer_[pc];
    if (!kinds || kinds->size() != npops) return;
    const std::size_t base = s.stack.size() - npops;
    for (std::size_t i = 0; i < npops; ++i) {
      const std::int32_t o = s.stack[base + i].origin;
      if (o < 0) continue;
      const std::uint16_t local = code_.instrs[static_cast<std::size_t>(o)].operand;
      if (local >= seed_acc_.size()) continue;
      const AbsType k = abs_of_kind((*kinds)[i]);
      if (!k.concrete() || k.kind == AbsKind::Str || k.kind == AbsKind::Bool) continue;
      if (k.kind == AbsKind::List && k.elem == ElemT::Unknown) continue;
      seed_acc_[local] = seed_seen_[local] ? join(seed_acc_[local], k) : k;
      seed_seen_[local] = true;
    }
  }

  template <class Succ>
  void process_block(std::uint32_t b, const AbsState& in, Succ&& succ) {
    AbsState s = in;
    const std::uint32_t n = static_cast<std::uint32_t>(code_.instrs.size());
    std::uint32_t pc = b;
    for (;;) {
      const Instr& ins = code_.instrs[pc];
      const OpcodeInfo& info = op_info(ins.op);
      const std::uint32_t len = static_cast<std::uint32_t>(slot_length(ins));
      if (pc + len > n) {
        error(pc, "instruction at pc " + std::to_string(pc) + " overruns code end");
        return;
      }
      if (info.tier == Tier::Super) {
        for (std::uint32_t k = 0; k < len; ++k) {
          out_.before[pc + k] = s;
          apply(pc + k, static_cast<Op>(info.fused.ops[k]), code_.instrs[pc + k].operand, s);
        }
      } else {
        out_.before[pc] = s;
        apply(pc, ins.op, ins.operand, s);
        for (std::uint32_t k = 1; k < len; ++k) out_.before[pc + k] = s;
      }
      const Op tail = tail_op(code_, pc);
      const Role role = op_info(tail).role;
      const std::uint16_t target = code_.instrs[pc + len - 1].operand;
      const std::uint32_t next = pc + len;
      if (role == Role::Return) return;
      if (role == Role::Jump) {
        if (check_jump(pc, target)) succ(target, s);
        return;
      }
      if (role == Role::CondJump) {
        if (check_jump(pc, target)) succ(target, s);
        if (next >= n) {
          error(pc, "control falls off end of code");
          return;
        }
        succ(next, s);
        return;
      }
      if (next >= n) {
        error(pc, "control falls off end of code");
        return;
      }
      if (leaders_[next]) {
        succ(next, s);
        return;
      }
      pc = next;
    }
  }

  const CodeObject& code_;
  const std::vector<AbsType>& seeds_;
  WalkResult& out_;
  std::vector<const std::vector<StackKind>*> consumer_;
  std::vector<AbsType> seed_acc_;
  std::vector<bool> seed_seen_;
  std::vector<bool> leaders_;
};

}  // namespace

std::vector<bool> block_leaders(const CodeObject& code) {
  const std::uint32_t n = static_cast<std::uint32_t>(code.instrs.size());
  std::vector<bool> leader(n, false);
  if (n == 0) return leader;
  leader[0] = true;
  for (std::uint32_t pc = 0; pc < n;) {
    const std::uint32_t len = static_cast<std::uint32_t>(std::max(1, slot_length(code.instrs[pc])));
    if (pc + len > n) break;
    const Role role = op_info(tail_op(code, pc)).role;
    const std::uint16_t target = code.instrs[pc + len - 1].operand;
    if (role == Role::Jump || role == Role::CondJump) {
      if (target < n) leader[target] = true;
    }
    if ((role == Role::Jump || role == Role::CondJump || role == Role::Return) && pc + len < n)
      leader[pc + len] = true;
    pc += len;
  }
  return leader;
}

WalkResult abstract_walk(const CodeObject& code, const TypeFeedback& feedback,
                         const std::vector<AbsType>& seeds) {
  WalkResult out;
  if (!seeds.empty()) {
    Walker w(code, feedback, seeds, out);
    w.run();
    out.seeds = seeds;
    return out;
  }
  // First pass discovers which locals feed typed consumers; the second
  // propagates those speculations.
  const std::vector<AbsType> none;
  Walker probe(code, feedback, none, out);
  probe.run();
  std::vector<AbsType> found = probe.collected_seeds();
  if (feedback.empty() || std::none_of(found.begin(), found.end(), [](AbsType t) { return t.concrete(); })) {
    out.seeds = found;
    return out;
  }
  WalkResult second;
  Walker w(code, feedback, found, second);
  w.run();
  second.seeds = found;
  return second;
}

}  // namespace mlq::analysis
