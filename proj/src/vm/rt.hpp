// Handler building blocks. Generated handlers call the rt:: templates for
// boxed instructions and inline their own bodies for the unboxed tier.
#pragma once

#include <cstdint>

#include "mlq/machine.hpp"

#define MLQ_HANDLER [[gnu::always_inline]] inline
#define MLQ_ARG(k) (m.ip[k].operand)
#define MLQ_GUARD(cond) (m.guard(cond))
#define MLQ_DEOPT(k, reason)                                  \
  {                                                           \
    m.sp = sp;                                                \
    return m.template deoptimize<Tagged>((k), (reason));      \
  }
#define MLQ_TAG(p, t)                   \
  do {                                  \
    if constexpr (Tagged) m.tag(p) = t; \
  } while (0)
#define MLQ_CHECK_CACHE(e, lst)                        \
  do {                                                 \
    if constexpr (Tagged) m.check_cache((e), (lst));   \
  } while (0)

namespace mlq::rt {

enum class TKind : std::uint8_t { Int, Float, Complex, Str, Any };

template <TKind K>
constexpr Kind kind_of() {
  if constexpr (K == TKind::Int) return Kind::Int;
  if constexpr (K == TKind::Float) return Kind::Float;
  if constexpr (K == TKind::Complex) return Kind::Complex;
  return Kind::Str;
}

template <bool Tagged>
MLQ_HANDLER void push(Machine& m, Value* v) {
  m.sp->ref = v;
  MLQ_TAG(m.sp, SlotTag::Ref);
  ++m.sp;
}

template <bool Tagged>
MLQ_HANDLER Flow nop(Machine& m) {
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow load_const(Machine& m) {
  Value* v = m.consts[m.ip->operand];
  m.store.incref(v);
  push<Tagged>(m, v);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow load_local(Machine& m) {
  Value* v = m.locals[m.ip->operand].ref;
  if (!v) [[unlikely]]
    m.unbound_local(m.ip->operand);
  m.store.incref(v);
  push<Tagged>(m, v);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow store_local(Machine& m) {
  Value* v = (--m.sp)->ref;
  Value*& slot = m.locals[m.ip->operand].ref;
  Value* old = slot;
  slot = v;
  if (old) m.store.decref(old);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow pop_top(Machine& m) {
  m.store.decref((--m.sp)->ref);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow dup_top(Machine& m) {
  Value* v = m.sp[-1].ref;
  m.store.incref(v);
  push<Tagged>(m, v);
  ++m.ip;
  return Flow::Next;
}

// Replaces the top `n` stack references with `r`.
template <bool Tagged>
MLQ_HANDLER void replace_top(Machine& m, int n, Value* r) {
  Slot* base = m.sp - n;
  for (int i = 0; i < n; ++i) m.store.decref(base[i].ref);
  base->ref = r;
  MLQ_TAG(base, SlotTag::Ref);
  m.sp = base + 1;
}

template <bool Tagged, BinOp Op>
MLQ_HANDLER Flow generic_binop(Machine& m) {
  Value* a = m.sp[-2].ref;
  Value* b = m.sp[-1].ref;
  if (m.cfg.opt >= 1) m.l1_observe_binop(Op, a, b);
  Value* r = value_binop(m.store, Op, a, b);
  replace_top<Tagged>(m, 2, r);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow generic_unop(Machine& m) {
  Value* a = m.sp[-1].ref;
  if (m.cfg.opt >= 1) m.l1_observe_unop(a);
  Value* r = value_neg(m.store, a);
  replace_top<Tagged>(m, 1, r);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged, CmpOp Op>
MLQ_HANDLER Flow generic_compare(Machine& m) {
  Value* a = m.sp[-2].ref;
  Value* b = m.sp[-1].ref;
  if (m.cfg.opt >= 1) m.l1_observe_compare(Op, a, b);
  Value* r = m.store.bool_value(value_compare(Op, a, b));
  m.store.incref(r);
  replace_top<Tagged>(m, 2, r);
  ++m.ip;
  return Flow::Next;
}

[[noreturn]] void index_error();
[[noreturn]] void not_subscriptable(const Value* v);
[[noreturn]] void bad_index(const Value* v);

inline std::size_t checked_index(const Value* list, const Value* idx) {
  if (idx->kind != Kind::Int) {
    if (idx->kind == Kind::BigInt) index_error();
    bad_index(idx);
  }
  const auto n = list->list->items.size();
  if (idx->i < 0 || static_cast<std::uint64_t>(idx->i) >= n) index_error();
  return static_cast<std::size_t>(idx->i);
}

template <bool Tagged>
MLQ_HANDLER Flow subscr(Machine& m) {
  Value* list = m.sp[-2].ref;
  Value* idx = m.sp[-1].ref;
  if (list->kind != Kind::List) not_subscriptable(list);
  if (m.cfg.opt >= 1) m.l1_observe_subscr(list, idx);
  Value* r = list->list->items[checked_index(list, idx)];
  m.store.incref(r);
  replace_top<Tagged>(m, 2, r);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER void store_subscr_common(Machine& m) {
  Value* v = m.sp[-3].ref;
  Value* list = m.sp[-2].ref;
  Value* idx = m.sp[-1].ref;
  if (list->kind != Kind::List) not_subscriptable(list);
  const std::size_t i = checked_index(list, idx);
  list_store(m.store, list, i, v);  // consumes the stack's reference to v
  m.store.decref(list);
  m.store.decref(idx);
  m.sp -= 3;
}

template <bool Tagged>
MLQ_HANDLER Flow store_subscr(Machine& m) {
  Value* list = m.sp[-2].ref;
  if (m.cfg.opt >= 1 && list->kind == Kind::List) m.l1_observe_store_subscr(m.sp[-3].ref, list, m.sp[-1].ref);
  store_subscr_common<Tagged>(m);
  m.store.bump_list_epoch();
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow build_list(Machine& m) {
  const int n = m.ip->operand;
  Slot* base = m.sp - n;
  std::vector<Value*> items(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) items[static_cast<std::size_t>(i)] = base[i].ref;
  base->ref = m.store.make_list(std::move(items));
  MLQ_TAG(base, SlotTag::Ref);
  m.sp = base + 1;
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow list_append(Machine& m) {
  Value* list = m.sp[-2].ref;
  Value* item = m.sp[-1].ref;
  if (list->kind != Kind::List)
    throw GuestError(ErrorKind::TypeMismatch,
                     "append() argument 1 must be list, not " + std::string(kind_name(list->kind)));
  mlq::list_append(m.store, list, item);
  m.store.decref(list);
  Value* none = m.store.none();
  m.store.incref(none);
  m.sp -= 2;
  push<Tagged>(m, none);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow call(Machine& m) {
  m.call(m.ip->operand);
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow ret(Machine& m) {
  return m.ret();
}

template <bool Tagged>
MLQ_HANDLER Flow jump(Machine& m) {
  m.ip = m.code_base + m.ip->operand;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow jump_if_false(Machine& m) {
  Value* v = (--m.sp)->ref;
  const bool t = v->kind == Kind::Bool ? v->b : value_truthy(v);
  m.store.decref(v);
  if (t)
    ++m.ip;
  else
    m.ip = m.code_base + m.ip->operand;
  return Flow::Next;
}

template <bool Tagged>
MLQ_HANDLER Flow prof_jump(Machine& m) {
  if (m.code->opt_state == OptState::Profiling) {
    const std::uint32_t pc = m.pc();
    if (++m.code->back_edge_counters[pc] >= m.cfg.threshold) m.on_hot_loop(pc);
  }
  m.ip = m.code_base + m.ip->operand;
  return Flow::Next;
}

// ---- inline-cached tier ----

template <TKind K>
inline bool kinds_match(const Value* a, const Value* b) {
  return a->kind == kind_of<K>() && b->kind == kind_of<K>();
}

// Reuses the left operand's box when the stack holds the only reference.
template <bool Tagged>
MLQ_HANDLER void finish_float(Machine& m, Value* a, Value* b, double r) {
  m.store.decref(b);
  --m.sp;
  if (a->refcnt == 1 && a->kind == Kind::Float) {
    a->f = r;
  } else {
    m.store.decref(a);
    m.sp[-1].ref = m.store.make_float(r);
  }
}

template <bool Tagged>
MLQ_HANDLER void finish_int(Machine& m, Value* a, Value* b, std::int64_t r) {
  m.store.decref(b);
  --m.sp;
  if (a->refcnt == 1 && a->kind == Kind::Int) {
    a->i = r;
  } else {
    m.store.decref(a);
    m.sp[-1].ref = m.store.make_int(r);
  }
}

template <bool Tagged>
MLQ_HANDLER void finish_complex(Machine& m, Value* a, Value* b, Complex r) {
  m.store.decref(b);
  --m.sp;
  if (a->refcnt == 1 && a->kind == Kind::Complex) {
    a->c = r;
  } else {
    m.store.decref(a);
    m.sp[-1].ref = m.store.make_complex(r);
  }
}

template <bool Tagged, BinOp Op>
[[gnu::noinline]] Flow inca_binop_slow(Machine& m, bool mismatch) {
  Value* a = m.sp[-2].ref;
  Value* b = m.sp[-1].ref;
  if (mismatch) {
    const Value* ops[] = {a, b};
    m.l1_mismatch(ops);
  }
  Value* r = value_binop(m.store, Op, a, b);
  replace_top<Tagged>(m, 2, r);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged, BinOp Op, TKind K>
MLQ_HANDLER Flow inca_binop(Machine& m) {
  Value* a = m.sp[-2].ref;
  Value* b = m.sp[-1].ref;
  ++m.counters.guard_checks;
  if (!kinds_match<K>(a, b)) [[unlikely]] {
    ++m.counters.guard_failures;
    return inca_binop_slow<Tagged, Op>(m, true);
  }
  if constexpr (K == TKind::Int) {
    std::int64_t r;
    if constexpr (Op == BinOp::Add) {
      if (__builtin_add_overflow(a->i, b->i, &r)) return inca_binop_slow<Tagged, Op>(m, false);
    } else if constexpr (Op == BinOp::Sub) {
      if (__builtin_sub_overflow(a->i, b->i, &r)) return inca_binop_slow<Tagged, Op>(m, false);
    } else if constexpr (Op == BinOp::Mul) {
      if (__builtin_mul_overflow(a->i, b->i, &r)) return inca_binop_slow<Tagged, Op>(m, false);
    } else if constexpr (Op == BinOp::FloorDiv) {
      if (b->i == 0 || (a->i == INT64_MIN && b->i == -1)) return inca_binop_slow<Tagged, Op>(m, false);
      r = int_floordiv(a->i, b->i);
    } else if constexpr (Op == BinOp::Mod) {
      if (b->i == 0) return inca_binop_slow<Tagged, Op>(m, false);
      r = int_mod(a->i, b->i);
    } else {
      if (b->i == 0) return inca_binop_slow<Tagged, Op>(m, false);
      const double q = static_cast<double>(a->i) / static_cast<double>(b->i);
      m.store.decref(a);
      m.store.decref(b);
      --m.sp;
      m.sp[-1].ref = m.store.make_float(q);
      ++m.ip;
      return Flow::Next;
    }
    finish_int<Tagged>(m, a, b, r);
  } else if constexpr (K == TKind::Float) {
    double r;
    if constexpr (Op == BinOp::Add) r = a->f + b->f;
    else if constexpr (Op == BinOp::Sub) r = a->f - b->f;
    else if constexpr (Op == BinOp::Mul) r = a->f * b->f;
    else {
      if (b->f == 0.0) return inca_binop_slow<Tagged, Op>(m, false);
      r = a->f / b->f;
    }
    finish_float<Tagged>(m, a, b, r);
  } else if constexpr (K == TKind::Complex) {
    Complex r;
    if constexpr (Op == BinOp::Add) r = complex_add(a->c, b->c);
    else if constexpr (Op == BinOp::Sub) r = complex_sub(a->c, b->c);
    else r = complex_mul(a->c, b->c);
    finish_complex<Tagged>(m, a, b, r);
  } else {
    Value* r = m.store.make_str(*a->str + *b->str);
    replace_top<Tagged>(m, 2, r);
  }
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged, TKind K>
MLQ_HANDLER Flow inca_unop(Machine& m) {
  Value* a = m.sp[-1].ref;
  ++m.counters.guard_checks;
  const bool ok = a->kind == kind_of<K>();
  if (!ok || (K == TKind::Int && a->i == INT64_MIN)) [[unlikely]] {
    if (!ok) {
      ++m.counters.guard_failures;
      const Value* ops[] = {a};
      m.l1_mismatch(ops);
    }
    Value* r = value_neg(m.store, a);
    replace_top<Tagged>(m, 1, r);
  } else if (a->refcnt == 1) {
    if constexpr (K == TKind::Int) a->i = -a->i;
    else a->f = -a->f;
  } else {
    Value* r;
    if constexpr (K == TKind::Int) r = m.store.make_int(-a->i);
    else r = m.store.make_float(-a->f);
    replace_top<Tagged>(m, 1, r);
  }
  ++m.ip;
  return Flow::Next;
}

template <CmpOp Op, class T>
constexpr bool cmp(const T& a, const T& b) {
  if constexpr (Op == CmpOp::Lt) return a < b;
  if constexpr (Op == CmpOp::Le) return a <= b;
  if constexpr (Op == CmpOp::Eq) return a == b;
  if constexpr (Op == CmpOp::Ne) return a != b;
  if constexpr (Op == CmpOp::Gt) return a > b;
  return a >= b;
}

template <bool Tagged, CmpOp Op, TKind K>
MLQ_HANDLER Flow inca_compare(Machine& m) {
  Value* a = m.sp[-2].ref;
  Value* b = m.sp[-1].ref;
  ++m.counters.guard_checks;
  bool r;
  if (!kinds_match<K>(a, b)) [[unlikely]] {
    ++m.counters.guard_failures;
    const Value* ops[] = {a, b};
    m.l1_mismatch(ops);
    r = value_compare(Op, a, b);
  } else if constexpr (K == TKind::Int) {
    r = cmp<Op>(a->i, b->i);
  } else if constexpr (K == TKind::Float) {
    r = cmp<Op>(a->f, b->f);
  } else {
    r = cmp<Op>(*a->str, *b->str);
  }
  Value* v = m.store.bool_value(r);
  m.store.incref(v);
  replace_top<Tagged>(m, 2, v);
  ++m.ip;
  return Flow::Next;
}

template <TKind K>
inline bool list_kind_ok(const Value* list) {
  if (list->kind != Kind::List) return false;
  if constexpr (K == TKind::Int) return list->list->elem == ElemKind::Int;
  if constexpr (K == TKind::Float) return list->list->elem == ElemKind::Float;
  return true;
}

template <bool Tagged, TKind K>
MLQ_HANDLER Flow inca_subscr(Machine& m) {
  Value* list = m.sp[-2].ref;
  Value* idx = m.sp[-1].ref;
  ++m.counters.guard_checks;
  if (!list_kind_ok<K>(list) || idx->kind != Kind::Int) [[unlikely]] {
    ++m.counters.guard_failures;
    const Value* ops[] = {list, idx};
    m.l1_mismatch(ops);
    if (list->kind != Kind::List) not_subscriptable(list);
  }
  Value* r = list->list->items[checked_index(list, idx)];
  m.store.incref(r);
  replace_top<Tagged>(m, 2, r);
  ++m.ip;
  return Flow::Next;
}

template <bool Tagged, TKind K>
MLQ_HANDLER Flow inca_store_subscr(Machine& m) {
  Value* v = m.sp[-3].ref;
  Value* list = m.sp[-2].ref;
  Value* idx = m.sp[-1].ref;
  ++m.counters.guard_checks;
  bool ok = list_kind_ok<K>(list) && idx->kind == Kind::Int;
  if constexpr (K != TKind::Any) ok = ok && v->kind == kind_of<K>();
  if (!ok) [[unlikely]] {
    ++m.counters.guard_failures;
    const Value* ops[] = {v, list, idx};
    m.l1_mismatch(ops);
    m.store.bump_list_epoch();
  }
  store_subscr_common<Tagged>(m);
  if constexpr (K == TKind::Any) m.store.bump_list_epoch();
  ++m.ip;
  return Flow::Next;
}

}  // namespace mlq::rt
