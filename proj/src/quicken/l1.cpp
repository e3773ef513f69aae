#include <array>
#include <map>
#include <string>

#include "mlq/machine.hpp"
#include "mlq/quicken.hpp"

namespace mlq::quicken {

namespace {

struct Tables {
  // (generic opcode, kind token) -> INCA opcode
  std::map<std::pair<Op, std::string>, Op> special;
  std::array<Op, kOpcodeCount> generic{};
  std::array<int, kOpcodeCount> unboxed{};
};

// "inca_binop(add,int)" -> {"generic_binop(add)", "int"}
bool split_template(std::string_view t, std::string& generic, std::string& kind) {
  const auto open = t.find('(');
  if (open == std::string_view::npos || t.back() != ')') return false;
  const std::string_view name = t.substr(0, open);
  const std::string_view args = t.substr(open + 1, t.size() - open - 2);
  const auto comma = args.rfind(',');
  const std::string_view first = comma == std::string_view::npos ? std::string_view{} : args.substr(0, comma);
  kind = std::string(comma == std::string_view::npos ? args : args.substr(comma + 1));
  if (name == "inca_binop") generic = "generic_binop(" + std::string(first) + ")";
  else if (name == "inca_unop") generic = "generic_unop(" + std::string(first) + ")";
  else if (name == "inca_compare") generic = "generic_compare(" + std::string(first) + ")";
  else if (name == "inca_subscr") generic = "subscr()";
  else if (name == "inca_store_subscr") generic = "store_subscr()";
  else return false;
  return true;
}

const Tables& tables() {
  static const Tables t = [] {
    Tables t;
    std::map<std::string, Op> by_template;
    for (std::size_t i = 0; i < kOpcodeCount; ++i) {
      const Op op = static_cast<Op>(i);
      t.generic[i] = op;
      t.unboxed[i] = -1;
      if (tier_of(op) == Tier::Generic) by_template.emplace(op_info(op).tmpl, op);
    }
    for (std::size_t i = 0; i < kOpcodeCount; ++i) {
      const Op op = static_cast<Op>(i);
      if (tier_of(op) != Tier::Inca) continue;
      std::string g, kind;
      if (!split_template(op_info(op).tmpl, g, kind)) continue;
      auto it = by_template.find(g);
      if (it == by_template.end()) continue;
      t.special.emplace(std::make_pair(it->second, kind), op);
      t.generic[i] = it->second;
      // INCA_INT_ADD -> NAMA_INT_ADD, INCA_INT_LT -> NAMA_CMP_INT_LT
      std::string m = op_info(op).mnemonic;
      std::string n = "NAMA_" + m.substr(5);
      if (g.rfind("generic_compare", 0) == 0) n = "NAMA_CMP_" + m.substr(5);
      if (auto u = find_op(n)) t.unboxed[i] = static_cast<int>(*u);
    }
    return t;
  }();
  return t;
}

const char* scalar_token(Kind k) {
  switch (k) {
    case Kind::Int: return "int";
    case Kind::Float: return "float";
    case Kind::Complex: return "complex";
    case Kind::Str: return "str";
    default: return nullptr;
  }
}

const char* elem_token(ElemKind e) {
  return e == ElemKind::Int ? "int" : e == ElemKind::Float ? "float" : "any";
}

}  // namespace

std::optional<Op> specialize(Op generic, std::span<const Value* const> ops) {
  const std::string_view tmpl = op_info(generic).tmpl;
  const char* kind = nullptr;
  if (tmpl == "subscr()") {
    if (ops.size() != 2 || ops[0]->kind != Kind::List || ops[1]->kind != Kind::Int) return std::nullopt;
    kind = elem_token(ops[0]->list->elem);
  } else if (tmpl == "store_subscr()") {
    if (ops.size() != 3 || ops[1]->kind != Kind::List || ops[2]->kind != Kind::Int) return std::nullopt;
    const ElemKind e = ops[1]->list->elem;
    if (e == ElemKind::Int && ops[0]->kind == Kind::Int) kind = "int";
    else if (e == ElemKind::Float && ops[0]->kind == Kind::Float) kind = "float";
    else kind = "any";
  } else {
    if (ops.empty()) return std::nullopt;
    for (const Value* v : ops)
      if (v->kind != ops[0]->kind) return std::nullopt;
    kind = scalar_token(ops[0]->kind);
    if (!kind) return std::nullopt;
  }
  const auto& t = tables().special;
  auto it = t.find({generic, kind});
  if (it == t.end()) return std::nullopt;
  return it->second;
}

Op generic_of(Op op) { return tables().generic[static_cast<std::size_t>(op)]; }

std::optional<Op> unboxed_of(Op inca) {
  const int u = tables().unboxed[static_cast<std::size_t>(inca)];
  if (u < 0) return std::nullopt;
  return static_cast<Op>(u);
}

std::string trace_line(std::uint32_t pc, Op from, Op to, const char* reason) {
  std::string s = "pc=" + std::to_string(pc) + ' ' + mnemonic(from) + " -> " + mnemonic(to) + " reason=" + reason;
  s += '\n';
  return s;
}

}  // namespace mlq::quicken

namespace mlq {

void Machine::rewrite(std::uint32_t p, Op op, const char* reason) {
  Instr& in = code->instrs[p];
  if (in.op == op) return;
  if (cfg.trace) trace += quicken::trace_line(p, in.op, op, reason);
  in.op = op;
  ++code->sites[p].rewrites;
  ++counters.rewrites_l1;
  if (code->opt_state == OptState::Optimized) code->opt_state = OptState::Profiling;
}

namespace {

void observe(Machine& m, std::span<const Value* const> ops) {
  const std::uint32_t p = m.pc();
  SiteState& site = m.code->sites[p];
  if (site.megamorphic) return;
  if (auto s = quicken::specialize(m.code->instrs[p].op, ops))
    m.rewrite(p, *s, "l1");
  else
    site.megamorphic = true;
}

}  // namespace

void Machine::l1_observe_binop(BinOp, const Value* a, const Value* b) {
  const Value* ops[] = {a, b};
  observe(*this, ops);
}

void Machine::l1_observe_unop(const Value* a) {
  const Value* ops[] = {a};
  observe(*this, ops);
}

void Machine::l1_observe_compare(CmpOp, const Value* a, const Value* b) {
  const Value* ops[] = {a, b};
  observe(*this, ops);
}

void Machine::l1_observe_subscr(const Value* list, const Value* idx) {
  const Value* ops[] = {list, idx};
  observe(*this, ops);
}

void Machine::l1_observe_store_subscr(const Value* v, const Value* list, const Value* idx) {
  const Value* ops[] = {v, list, idx};
  observe(*this, ops);
}

// Re-specializes up to dequicken_limit times, then settles on GENERIC.
void Machine::l1_mismatch(std::span<const Value* const> operands) {
  const std::uint32_t p = pc();
  SiteState& site = code->sites[p];
  const Op generic = quicken::generic_of(code->instrs[p].op);
  if (site.mismatches < 255) ++site.mismatches;
  if (site.mismatches <= cfg.dequicken_limit) {
    if (auto s = quicken::specialize(generic, operands)) {
      rewrite(p, *s, "l1");
      return;
    }
  }
  site.megamorphic = true;
  rewrite(p, generic, "dequicken");
}

}  // namespace mlq
