#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mlq/machine.hpp"
#include "mlq/quicken.hpp"
#include "vm/rt.hpp"

namespace mlq {

namespace {

using rt::TKind;

#include "mlq_handlers.inc"

using Handler = Flow (*)(Machine&);

template <bool Tagged>
constexpr Handler kTable[] = {
#include "mlq_dispatch_table.inc"
};

static_assert(sizeof(kTable<false>) / sizeof(Handler) == kOpcodeCount);

}  // namespace

namespace rt {

void index_error() { throw GuestError(ErrorKind::IndexOutOfRange, "list index out of range"); }

void not_subscriptable(const Value* v) {
  throw GuestError(ErrorKind::TypeMismatch, "'" + std::string(kind_name(v->kind)) + "' object is not subscriptable");
}

void bad_index(const Value* v) {
  throw GuestError(ErrorKind::TypeMismatch,
                   "list indices must be integers, not " + std::string(kind_name(v->kind)));
}

}  // namespace rt

Machine::Machine(ObjStore& s, const VmConfig& c, std::size_t max_frame_slots)
    : store(s), cfg(c), max_frame_slots_(std::max<std::size_t>(max_frame_slots, 1)) {
  const std::size_t depth = static_cast<std::size_t>(std::max(cfg.depth_limit, 1));
  arena_.resize(depth * max_frame_slots_);
  if (cfg.tagged) tags_.assign(arena_.size(), SlotTag::Ref);
  cache_arena_.resize(depth * max_frame_slots_);
  frames_.reserve(depth);
  if (cfg.stress) {
    stress_on_ = cfg.stress->probability > 0.0;
    stress_p_ = cfg.stress->probability;
    rng_.seed(cfg.stress->seed);
  }
}

Machine::~Machine() {
  unwind();
  if (result_) store.decref(result_);
}

bool Machine::stress_fail() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < stress_p_;
}

void Machine::load_frame(const Frame& f) {
  code = f.code;
  code_base = code->instrs.data();
  ip = f.ip;
  locals = f.locals;
  stack_base = f.stack_base;
  sp = f.sp;
  cache = f.cache;
  consts = code->consts.data();
}

void Machine::save_frame() {
  Frame& f = frames_.back();
  f.ip = ip;
  f.sp = sp;
}

void Machine::push_frame(CodeObject& c, std::span<Value* const> args) {
  const std::size_t d = frames_.size();
  Frame f;
  f.code = &c;
  f.locals = arena_.data() + d * max_frame_slots_;
  f.stack_base = f.locals + c.nlocals;
  f.sp = f.stack_base;
  f.cache = cache_arena_.data() + d * max_frame_slots_;
  f.ip = c.instrs.data();
  for (int l = 0; l < c.nlocals; ++l) {
    f.locals[l].ref = static_cast<std::size_t>(l) < args.size() ? args[static_cast<std::size_t>(l)] : nullptr;
    f.cache[l] = UnboxEntry{};
  }
  if (cfg.opt >= 2 && c.opt_state == OptState::Cold) c.opt_state = OptState::Profiling;
  frames_.push_back(f);
  load_frame(frames_.back());
}

void Machine::release_frame(Frame& f) {
  for (int l = 0; l < f.code->nlocals; ++l)
    if (Value* v = f.locals[l].ref) {
      f.locals[l].ref = nullptr;
      store.decref(v);
    }
  for (Slot* s = f.stack_base; s < f.sp; ++s) store.decref(s->ref);
  f.sp = f.stack_base;
}

void Machine::enter(CodeObject& c, std::span<Value* const> args) {
  if (static_cast<int>(args.size()) != c.arity) {
    for (Value* v : args) store.decref(v);
    throw GuestError(ErrorKind::ArityMismatch, c.name + "() takes " + std::to_string(c.arity) +
                                                   " arguments (" + std::to_string(args.size()) + " given)");
  }
  push_frame(c, args);
}

void Machine::unwind() {
  if (frames_.empty()) return;
  save_frame();
  while (!frames_.empty()) {
    release_frame(frames_.back());
    frames_.pop_back();
  }
}

[[noreturn]] void Machine::unbound_local(std::uint16_t idx) const {
  const std::string name =
      idx < code->local_names.size() ? code->local_names[idx] : "#" + std::to_string(idx);
  throw GuestError(ErrorKind::UnboundLocal, "local variable '" + name + "' referenced before assignment");
}

void Machine::call(std::uint16_t argc) {
  Slot* fslot = sp - argc - 1;
  Value* f = fslot->ref;
  if (f->kind == Kind::Function) {
    CodeObject& callee = *const_cast<CodeObject*>(f->fn->code);
    if (argc != callee.arity)
      throw GuestError(ErrorKind::ArityMismatch, f->fn->name + "() takes " + std::to_string(callee.arity) +
                                                     " arguments (" + std::to_string(argc) + " given)");
    if (static_cast<int>(frames_.size()) >= cfg.depth_limit)
      throw GuestError(ErrorKind::StackOverflow, "maximum recursion depth exceeded");
    Value* small[16];
    const std::size_t n = argc;
    std::vector<Value*> big;
    Value** a = small;
    if (n > 16) {
      big.resize(n);
      a = big.data();
    }
    for (std::size_t i = 0; i < n; ++i) a[i] = fslot[1 + i].ref;
    sp = fslot;
    ++ip;
    save_frame();
    store.decref(f);
    push_frame(callee, std::span<Value* const>(a, n));
    return;
  }
  if (f->kind == Kind::NativeFunction) {
    const NativeData* nd = f->native;
    if (nd->arity >= 0 && argc != nd->arity)
      throw GuestError(ErrorKind::ArityMismatch, nd->name + "() takes " + std::to_string(nd->arity) +
                                                     " arguments (" + std::to_string(argc) + " given)");
    NativeContext ctx(store, output);
    Value* small[16];
    std::vector<Value*> big;
    Value** argv = small;
    if (argc > 16) {
      big.resize(argc);
      argv = big.data();
    }
    for (std::size_t i = 0; i < argc; ++i) argv[i] = fslot[1 + i].ref;
    const std::span<Value* const> args(argv, argc);
    ++counters.native_calls;
    Value* r;
    if (cfg.attribute_time) {
      const auto t0 = std::chrono::steady_clock::now();
      r = nd->fn(ctx, args);
      counters.native_time += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      r = nd->fn(ctx, args);
    }
    for (Value* v : args) store.decref(v);
    store.decref(f);
    fslot->ref = r;
    if (cfg.tagged) tag(fslot) = SlotTag::Ref;
    sp = fslot + 1;
    ++ip;
    return;
  }
  throw GuestError(ErrorKind::TypeMismatch, "'" + std::string(kind_name(f->kind)) + "' object is not callable");
}

Flow Machine::ret() {
  Value* r = (--sp)->ref;
  save_frame();
  release_frame(frames_.back());
  frames_.pop_back();
  if (frames_.empty()) {
    result_ = r;
    return Flow::Halt;
  }
  load_frame(frames_.back());
  sp->ref = r;
  if (cfg.tagged) tag(sp) = SlotTag::Ref;
  ++sp;
  return Flow::Next;
}

void Machine::on_hot_loop(std::uint32_t p) {
  code->back_edge_counters[p] = 0;
  quicken::L2Options o;
  o.super = cfg.super;
  o.trace = cfg.trace ? &trace : nullptr;
  const quicken::L2Stats st = quicken::l2_optimize(*code, o);
  counters.rewrites_l2 += static_cast<std::uint64_t>(st.rewrites);
  code->opt_state = OptState::Optimized;
}

// ---- tagged checks ----

void Machine::check_cache(const UnboxEntry& e, const Value* list) const {
  if (e.list != list || e.epoch != store.list_epoch() || list->kind != Kind::List ||
      e.length != list->list->items.size())
    throw std::logic_error("stale unbox cache at pc " + std::to_string(pc()));
}

void Machine::check_boxed_boundary(Op executed) {
  for (Slot* s = stack_base; s < sp; ++s)
    if (tag(s) != SlotTag::Ref)
      throw std::logic_error(std::string("raw slot live after ") + mnemonic(executed) + " at depth " +
                             std::to_string(s - stack_base));
}

void Machine::check_region_layout() {
  const std::uint32_t p = pc();
  const Region* reg = code->region_at(p);
  if (!reg) {
    for (Slot* s = stack_base; s < sp; ++s)
      if (tag(s) != SlotTag::Ref)
        throw std::logic_error("raw slot outside a region at pc " + std::to_string(p));
    return;
  }
  const auto& layout = reg->layouts[p - reg->start];
  if (sp - stack_base != static_cast<std::ptrdiff_t>(reg->base_depth + layout.size()))
    throw std::logic_error("stack depth disagrees with region layout at pc " + std::to_string(p));
  for (std::uint32_t j = 0; j < reg->base_depth; ++j)
    if (tag(stack_base + j) != SlotTag::Ref)
      throw std::logic_error("raw slot below region base at pc " + std::to_string(p));
  for (std::size_t j = 0; j < layout.size(); ++j)
    if (tag(stack_base + reg->base_depth + j) != layout[j])
      throw std::logic_error("slot tag " + std::string(slot_tag_name(tag(stack_base + reg->base_depth + j))) +
                             " where layout has " + std::string(slot_tag_name(layout[j])) + " at pc " +
                             std::to_string(p));
}

// ---- dispatch ----

template <bool Tagged>
Flow Machine::step_impl() {
  Machine& m = *this;
  const Op op = ip->op;
  ++counters.histogram[static_cast<std::size_t>(op)];
  if constexpr (Tagged) check_region_layout();
  Flow fl = Flow::Next;
  switch (op) {
#include "mlq_switch_cases.inc"
    default: __builtin_unreachable();
  }
  if constexpr (Tagged) {
    const Tier t = tier_of(op);
    if (fl == Flow::Next && (t == Tier::Generic || t == Tier::Inca || t == Tier::Prof)) check_boxed_boundary(op);
  }
  return fl;
}

template <bool Tagged>
void Machine::loop_switch() {
  Machine& m = *this;
  std::uint64_t* hist = counters.histogram.data();
  for (;;) {
    const Op op = ip->op;
    ++hist[static_cast<std::size_t>(op)];
    if constexpr (Tagged) check_region_layout();
    Flow fl = Flow::Next;
    switch (op) {
#include "mlq_switch_cases.inc"
      default: __builtin_unreachable();
    }
    if constexpr (Tagged) {
      const Tier t = tier_of(op);
      if (fl == Flow::Next && (t == Tier::Generic || t == Tier::Inca || t == Tier::Prof)) check_boxed_boundary(op);
    }
    if (fl == Flow::Halt) [[unlikely]]
      return;
  }
}

template <bool Tagged>
void Machine::loop_threaded() {
  std::uint64_t* hist = counters.histogram.data();
  for (;;) {
    const std::size_t op = static_cast<std::size_t>(ip->op);
    ++hist[op];
    if constexpr (Tagged) check_region_layout();
    const Flow fl = kTable<Tagged>[op](*this);
    if constexpr (Tagged) {
      const Tier t = tier_of(static_cast<Op>(op));
      if (fl == Flow::Next && (t == Tier::Generic || t == Tier::Inca || t == Tier::Prof))
        check_boxed_boundary(static_cast<Op>(op));
    }
    if (fl == Flow::Halt) [[unlikely]]
      return;
  }
}

Flow Machine::step() { return cfg.tagged ? step_impl<true>() : step_impl<false>(); }

void Machine::run_loop() {
  if (frames_.empty()) return;
  if (cfg.dispatch == Dispatch::Switch) {
    if (cfg.tagged) loop_switch<true>();
    else loop_switch<false>();
  } else {
    if (cfg.tagged) loop_threaded<true>();
    else loop_threaded<false>();
  }
}

// ---- configuration and results ----

std::string config_name(const VmConfig& cfg) {
  std::string s = cfg.dispatch == Dispatch::Switch ? "switch" : "threaded";
  s += "-o" + std::to_string(cfg.opt);
  if (cfg.super && cfg.opt >= 2) s += "-super";
  return s;
}

std::optional<VmConfig> parse_config_name(std::string_view name) {
  VmConfig c;
  c.super = false;
  std::vector<std::string_view> parts;
  std::size_t b = 0;
  while (b <= name.size()) {
    const std::size_t e = name.find('-', b);
    parts.push_back(name.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
  if (parts[0] == "switch") c.dispatch = Dispatch::Switch;
  else if (parts[0] == "threaded") c.dispatch = Dispatch::Threaded;
  else return std::nullopt;
  if (parts[1] == "o0") c.opt = 0;
  else if (parts[1] == "o1") c.opt = 1;
  else if (parts[1] == "o2") c.opt = 2;
  else return std::nullopt;
  if (parts.size() == 3) {
    if (parts[2] != "super" || c.opt < 2) return std::nullopt;
    c.super = true;
  }
  return c;
}

std::string EventCounters::format() const {
  std::ostringstream os;
  os << "dispatches=" << dispatches << '\n'
     << "guard_checks=" << guard_checks << '\n'
     << "guard_failures=" << guard_failures << '\n'
     << "rewrites_l1=" << rewrites_l1 << '\n'
     << "rewrites_l2=" << rewrites_l2 << '\n'
     << "deopts=" << deopts << '\n';
  for (std::size_t r = 0; r < kDeoptReasons; ++r)
    os << "deopts." << deopt_reason_name(static_cast<DeoptReason>(r)) << '=' << deopts_by_reason[r] << '\n';
  os << "unbox_cache_fills=" << unbox_cache_fills << '\n' << "native_calls=" << native_calls << '\n';
  return os.str();
}

std::string RunResult::observable() const {
  std::string s = output;
  if (ok)
    s += "=> " + result_repr + '\n';
  else
    s += "error " + std::string(error_kind_name(error_kind)) + ": " + error_message + '\n';
  return s;
}

Program::~Program() {
  for (auto& c : codes) c->release_consts(*store);
}

CodeObject* Program::find(std::string_view name) const {
  for (const auto& c : codes)
    if (c->name == name) return c.get();
  return nullptr;
}

std::size_t Program::max_frame_slots() const {
  std::size_t m = 1;
  for (const auto& c : codes)
    m = std::max(m, static_cast<std::size_t>(c->nlocals + 2 * c->max_depth + 4));
  return m;
}

RunResult run(Program& program, std::string_view entry, std::vector<Value*> args, const VmConfig& cfg) {
  RunResult r;
  CodeObject* code = program.find(entry);
  if (!code) {
    for (Value* v : args) program.store->decref(v);
    throw std::invalid_argument("no function named '" + std::string(entry) + "'");
  }
  Machine m(*program.store, cfg, program.max_frame_slots());
  const auto t0 = std::chrono::steady_clock::now();
  try {
    m.enter(*code, args);
    m.run_loop();
    r.result = Ref(*program.store, m.take_result());
    r.result_repr = value_repr(r.result.get());
  } catch (const GuestError& e) {
    r.ok = false;
    r.error_kind = e.kind();
    r.error_message = e.what();
    m.unwind();
  }
  m.counters.total_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.counters.dispatches = std::accumulate(m.counters.histogram.begin(), m.counters.histogram.end(), std::uint64_t{0});
  r.output = std::move(m.output);
  r.trace = std::move(m.trace);
  r.counters = m.counters;
  return r;
}

}  // namespace mlq
