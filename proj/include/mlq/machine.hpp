// Interpreter machine state shared by handlers, the optimizer and tests.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mlq/isa.hpp"
#include "mlq/object.hpp"
#include "mlq/vm.hpp"

namespace mlq {

union Slot {
  Value* ref;
  std::int64_t i;
  double f;
};

struct UnboxEntry {
  Value* list = nullptr;  // identity only, not a reference
  std::uint64_t length = 0;
  std::uint64_t epoch = ~std::uint64_t{0};
};

enum class Flow : std::uint8_t { Next, Halt };

struct Frame {
  CodeObject* code = nullptr;
  Instr* ip = nullptr;  // resume point while suspended
  Slot* locals = nullptr;
  Slot* stack_base = nullptr;
  Slot* sp = nullptr;
  UnboxEntry* cache = nullptr;
};

class NativeContext {
 public:
  NativeContext(ObjStore& store, std::string& output) : store(store), output(output) {}
  ObjStore& store;
  std::string& output;
};

class Machine {
 public:
  Machine(ObjStore& store, const VmConfig& cfg, std::size_t max_frame_slots);
  ~Machine();
  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  /// Pushes the entry frame; takes ownership of `args`.
  void enter(CodeObject& code, std::span<Value* const> args);
  /// Executes one dispatch (one instruction or superinstruction).
  Flow step();
  /// Runs until the entry frame returns. GuestError propagates with the
  /// machine still holding its frames; call unwind() to release them.
  void run_loop();
  void unwind();

  Value* take_result() {
    Value* r = result_;
    result_ = nullptr;
    return r;
  }

  // ---- state read by generated handlers ----
  Instr* ip = nullptr;
  Slot* sp = nullptr;
  Slot* locals = nullptr;
  Value* const* consts = nullptr;
  UnboxEntry* cache = nullptr;
  Instr* code_base = nullptr;
  Slot* stack_base = nullptr;
  CodeObject* code = nullptr;
  ObjStore& store;
  const VmConfig cfg;
  EventCounters counters;
  std::string output;
  std::string trace;

  // ---- guards and deoptimization ----
  bool guard(bool ok) {
    ++counters.guard_checks;
    if (ok && stress_on_) ok = !stress_fail();
    if (!ok) ++counters.guard_failures;
    return ok;
  }
  template <bool Tagged>
  Flow deoptimize(int k, DeoptReason reason);

  // ---- boxing helpers ----
  void store_int_local(std::uint16_t idx, std::int64_t v) {
    Value* old = locals[idx].ref;
    if (old && old->refcnt == 1 && old->kind == Kind::Int) {
      old->i = v;
      return;
    }
    locals[idx].ref = store.make_int(v);
    if (old) store.decref(old);
  }
  void store_float_local(std::uint16_t idx, double v) {
    Value* old = locals[idx].ref;
    if (old && old->refcnt == 1 && old->kind == Kind::Float) {
      old->f = v;
      return;
    }
    locals[idx].ref = store.make_float(v);
    if (old) store.decref(old);
  }
  void store_complex_local(std::uint16_t idx, double re, double im) {
    Value* old = locals[idx].ref;
    if (old && old->refcnt == 1 && old->kind == Kind::Complex) {
      old->c = {re, im};
      return;
    }
    locals[idx].ref = store.make_complex({re, im});
    if (old) store.decref(old);
  }
  void store_int_elem(Value* list, std::size_t i, std::int64_t v) {
    Value*& slot = list->list->items[i];
    if (slot->refcnt == 1) {
      slot->i = v;
      return;
    }
    Value* old = slot;
    slot = store.make_int(v);
    store.decref(old);
  }
  void store_float_elem(Value* list, std::size_t i, double v) {
    Value*& slot = list->list->items[i];
    if (slot->refcnt == 1) {
      slot->f = v;
      return;
    }
    Value* old = slot;
    slot = store.make_float(v);
    store.decref(old);
  }
  void fill_unbox_cache(UnboxEntry& e, Value* list) {
    e.list = list;
    e.length = list->list->items.size();
    e.epoch = store.list_epoch();
    ++counters.unbox_cache_fills;
  }

  // ---- tagged debug mode ----
  SlotTag& tag(Slot* p) { return tags_[static_cast<std::size_t>(p - arena_.data())]; }
  void check_cache(const UnboxEntry& e, const Value* list) const;
  void check_boxed_boundary(Op executed);
  void check_region_layout();

  // ---- slow paths ----
  [[noreturn]] void unbound_local(std::uint16_t idx) const;
  void rewrite(std::uint32_t pc, Op op, const char* reason);
  void l1_observe_binop(BinOp op, const Value* a, const Value* b);
  void l1_observe_unop(const Value* a);
  void l1_observe_compare(CmpOp op, const Value* a, const Value* b);
  void l1_observe_subscr(const Value* list, const Value* idx);
  void l1_observe_store_subscr(const Value* v, const Value* list, const Value* idx);
  void l1_mismatch(std::span<const Value* const> operands);
  void on_hot_loop(std::uint32_t pc);
  void call(std::uint16_t argc);
  Flow ret();
  std::uint32_t pc() const { return static_cast<std::uint32_t>(ip - code_base); }

  int depth() const { return static_cast<int>(frames_.size()); }
  const std::vector<Frame>& frames() const { return frames_; }

 private:
  bool stress_fail();
  void push_frame(CodeObject& code, std::span<Value* const> args);
  void load_frame(const Frame& f);
  void save_frame();
  void release_frame(Frame& f);
  template <bool Tagged>
  void loop_switch();
  template <bool Tagged>
  void loop_threaded();
  template <bool Tagged>
  Flow step_impl();

  std::vector<Slot> arena_;
  std::vector<SlotTag> tags_;
  std::vector<UnboxEntry> cache_arena_;
  std::vector<Frame> frames_;
  std::size_t max_frame_slots_;
  Value* result_ = nullptr;
  bool stress_on_ = false;
  double stress_p_ = 0.0;
  std::mt19937_64 rng_;
};

}  // namespace mlq
