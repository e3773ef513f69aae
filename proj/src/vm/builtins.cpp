#include <chrono>
#include <cmath>
#include <thread>

#include "mlq/machine.hpp"
#include "mlq/vm.hpp"

namespace mlq {

namespace {

using Args = std::span<Value* const>;

Value* retained(ObjStore& s, Value* v) {
  s.incref(v);
  return v;
}

[[noreturn]] void type_error(const std::string& fn, const Value* v) {
  throw GuestError(ErrorKind::TypeMismatch, fn + "() argument must be a number, not " + std::string(kind_name(v->kind)));
}

double as_double(const std::string& fn, const Value* v) {
  switch (v->kind) {
    case Kind::Int: return static_cast<double>(v->i);
    case Kind::BigInt: return static_cast<double>(*v->big);
    case Kind::Float: return v->f;
    default: type_error(fn, v);
  }
}

Value* b_print(NativeContext& ctx, Args a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) ctx.output += ' ';
    ctx.output += value_str(a[i]);
  }
  ctx.output += '\n';
  return retained(ctx.store, ctx.store.none());
}

Value* b_len(NativeContext& ctx, Args a) {
  const Value* v = a[0];
  if (v->kind == Kind::List) return ctx.store.make_int(static_cast<std::int64_t>(v->list->items.size()));
  if (v->kind == Kind::Str) return ctx.store.make_int(static_cast<std::int64_t>(v->str->size()));
  throw GuestError(ErrorKind::TypeMismatch, "object of type '" + std::string(kind_name(v->kind)) + "' has no len()");
}

Value* b_clock(NativeContext& ctx, Args) {
  const auto t = std::chrono::steady_clock::now().time_since_epoch();
  return ctx.store.make_float(std::chrono::duration<double>(t).count());
}

Value* b_sqrt(NativeContext& ctx, Args a) {
  const double x = as_double("sqrt", a[0]);
  if (x < 0.0) throw GuestError(ErrorKind::MathDomain, "math domain error");
  return ctx.store.make_float(std::sqrt(x));
}

Value* b_abs(NativeContext& ctx, Args a) {
  const Value* v = a[0];
  switch (v->kind) {
    case Kind::Int:
    case Kind::BigInt: {
      const BigInt b = to_bigint(v);
      return ctx.store.make_integer(b < 0 ? BigInt(-b) : b);
    }
    case Kind::Float: return ctx.store.make_float(std::fabs(v->f));
    case Kind::Complex: return ctx.store.make_float(std::hypot(v->c.re, v->c.im));
    default: type_error("abs", v);
  }
}

Value* b_float(NativeContext& ctx, Args a) { return ctx.store.make_float(as_double("float", a[0])); }

Value* b_int(NativeContext& ctx, Args a) {
  const Value* v = a[0];
  if (v->kind == Kind::Int || v->kind == Kind::BigInt) return retained(ctx.store, const_cast<Value*>(v));
  if (v->kind != Kind::Float) type_error("int", v);
  if (!std::isfinite(v->f)) throw GuestError(ErrorKind::ValueError, "cannot convert float " + float_repr(v->f) + " to integer");
  const double t = std::trunc(v->f);
  if (t >= -9.2e18 && t <= 9.2e18) return ctx.store.make_int(static_cast<std::int64_t>(t));
  return ctx.store.make_integer(BigInt(t));
}

Value* b_str(NativeContext& ctx, Args a) { return ctx.store.make_str(value_str(a[0])); }

// Busy native work for calibrating the attribution run.
Value* b_spin(NativeContext& ctx, Args a) {
  const double secs = as_double("spin", a[0]);
  const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(secs);
  volatile std::uint64_t x = 0;
  while (std::chrono::steady_clock::now() < until) x = x + 1;
  return retained(ctx.store, ctx.store.none());
}

}  // namespace

const std::vector<NativeData>& builtins() {
  static const std::vector<NativeData> table = {
      {"print", -1, &b_print}, {"len", 1, &b_len},     {"clock", 0, &b_clock},  {"sqrt", 1, &b_sqrt},
      {"abs", 1, &b_abs},      {"float", 1, &b_float}, {"int", 1, &b_int},      {"str_of", 1, &b_str},
      {"spin", 1, &b_spin},
  };
  return table;
}

const NativeData* find_builtin(std::string_view name) {
  for (const auto& b : builtins())
    if (b.name == name) return &b;
  return nullptr;
}

}  // namespace mlq
