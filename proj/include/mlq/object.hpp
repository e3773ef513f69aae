// Dynamic values of the guest language and their reference-counted store.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mlq {

using BigInt = boost::multiprecision::cpp_int;

struct CodeObject;
class ObjStore;
struct Value;

enum class Kind : std::uint8_t { Int, BigInt, Float, Complex, Bool, None, Str, List, Function, NativeFunction };

std::string_view kind_name(Kind k);

/// Summary of a list's element kinds, kept current on every mutation so that
/// typed list access can check homogeneity in O(1).
enum class ElemKind : std::uint8_t { Empty, Int, Float, Mixed };

enum class ErrorKind : std::uint8_t {
  TypeMismatch,
  ZeroDivision,
  IndexOutOfRange,
  StackOverflow,
  UnboundLocal,
  ArityMismatch,
  MathDomain,
  ValueError,
};

std::string_view error_kind_name(ErrorKind k);

/// A guest-visible failure. Message text is part of the observable behavior
/// and must not depend on the optimization level.
class GuestError : public std::runtime_error {
 public:
  GuestError(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by the default underflow handler replacement in tests; the
/// production handler aborts.
class RefcountUnderflow : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Complex {
  double re = 0.0;
  double im = 0.0;
  bool operator==(const Complex&) const = default;
};

// Shared by the boxed and raw arithmetic paths so both round identically.
inline Complex complex_add(Complex a, Complex b) { return {a.re + b.re, a.im + b.im}; }
inline Complex complex_sub(Complex a, Complex b) { return {a.re - b.re, a.im - b.im}; }
inline Complex complex_mul(Complex a, Complex b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

// Floor semantics for the guest's // and %.
inline std::int64_t int_floordiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
inline std::int64_t int_mod(std::int64_t a, std::int64_t b) {
  if (b == -1) return 0;
  std::int64_t r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

struct ListData {
  std::vector<Value*> items;
  ElemKind elem = ElemKind::Empty;
};

struct FunctionData {
  const CodeObject* code = nullptr;
  std::string name;
  int arity = 0;
};

class NativeContext;
using NativeFn = Value* (*)(NativeContext&, std::span<Value* const>);

struct NativeData {
  std::string name;
  int arity = 0;  // -1: variadic
  NativeFn fn = nullptr;
};

struct Value {
  Kind kind;
  std::uint32_t refcnt;
  union {
    std::int64_t i;
    double f;
    Complex c;
    bool b;
    BigInt* big;
    std::string* str;
    ListData* list;
    FunctionData* fn;
    const NativeData* native;
  };
};

/// Owns every Value allocation. Live count is allocations minus reclamations;
/// with tracking on, the live set itself is kept for leak reports.
class ObjStore {
 public:
  explicit ObjStore(bool track = false);
  ~ObjStore();
  ObjStore(const ObjStore&) = delete;
  ObjStore& operator=(const ObjStore&) = delete;

  Value* make_int(std::int64_t v);
  // Normalizes: values that fit in 64 bits become Int.
  Value* make_integer(const BigInt& v);
  Value* make_float(double v);
  Value* make_complex(Complex v);
  Value* make_str(std::string v);
  Value* make_list(std::vector<Value*> items = {});  // takes ownership of the refs
  Value* make_function(const CodeObject* code, std::string name, int arity);
  Value* make_native(const NativeData* native);

  // Singletons. Borrowed references; incref before storing.
  Value* none() const { return none_; }
  Value* bool_value(bool b) const { return b ? true_ : false_; }

  void incref(Value* v) { ++v->refcnt; }
  void decref(Value* v) {
    if (v->refcnt == 0) underflow(v);
    if (--v->refcnt == 0) reclaim(v);
  }

  std::int64_t live() const { return allocated_ - reclaimed_; }
  std::int64_t allocated() const { return allocated_; }
  std::int64_t reclaimed() const { return reclaimed_; }

  /// Generation counter bumped by every list operation that may change a
  /// list's length or element-kind summary; unboxing caches compare against it.
  std::uint64_t list_epoch() const { return list_epoch_; }
  void bump_list_epoch() { ++list_epoch_; }

  /// Drops the singletons and returns the number of objects still alive.
  /// A clean run returns 0.
  std::int64_t finish();

  // Live objects (tracking mode only).
  std::vector<const Value*> live_objects() const;

  using UnderflowHandler = void (*)(const Value*);
  static void set_underflow_handler(UnderflowHandler h);

 private:
  Value* alloc(Kind k);
  void reclaim(Value* v);
  [[noreturn]] static void underflow(const Value* v);

  bool track_;
  std::int64_t allocated_ = 0;
  std::int64_t reclaimed_ = 0;
  std::uint64_t list_epoch_ = 0;
  std::unordered_set<const Value*> registry_;
  Value* none_ = nullptr;
  Value* true_ = nullptr;
  Value* false_ = nullptr;
  bool finished_ = false;
};

/// Owning handle for host-side code (compiler, builtins, tests).
class Ref {
 public:
  Ref() = default;
  Ref(ObjStore& s, Value* v) : store_(&s), v_(v) {}  // adopts
  Ref(const Ref& o) : store_(o.store_), v_(o.v_) {
    if (v_) store_->incref(v_);
  }
  Ref(Ref&& o) noexcept : store_(o.store_), v_(o.v_) { o.v_ = nullptr; }
  Ref& operator=(Ref o) noexcept {
    std::swap(store_, o.store_);
    std::swap(v_, o.v_);
    return *this;
  }
  ~Ref() {
    if (v_) store_->decref(v_);
  }
  static Ref borrow(ObjStore& s, Value* v) {
    s.incref(v);
    return Ref(s, v);
  }

  Value* get() const { return v_; }
  Value* operator->() const { return v_; }
  explicit operator bool() const { return v_ != nullptr; }
  Value* release() {
    Value* v = v_;
    v_ = nullptr;
    return v;
  }

 private:
  ObjStore* store_ = nullptr;
  Value* v_ = nullptr;
};

void list_append(ObjStore& store, Value* list, Value* item);          // takes item ref
void list_store(ObjStore& store, Value* list, std::size_t i, Value* item);  // takes item ref
// Recomputes the element-kind summary after an in-place change.
ElemKind elem_kind_after(ElemKind current, Kind added, bool list_was_empty);

enum class BinOp : std::uint8_t { Add, Sub, Mul, TrueDiv, FloorDiv, Mod };
enum class UnOp : std::uint8_t { Neg };
enum class CmpOp : std::uint8_t { Lt, Le, Eq, Ne, Gt, Ge };

std::string_view binop_symbol(BinOp op);
std::string_view cmpop_symbol(CmpOp op);

/// All arithmetic returns a new reference with refcount 1 (or a retained
/// singleton) and throws GuestError on unsupported kinds.
Value* value_binop(ObjStore& store, BinOp op, const Value* a, const Value* b);
inline Value* value_add(ObjStore& s, const Value* a, const Value* b) { return value_binop(s, BinOp::Add, a, b); }
inline Value* value_sub(ObjStore& s, const Value* a, const Value* b) { return value_binop(s, BinOp::Sub, a, b); }
inline Value* value_mul(ObjStore& s, const Value* a, const Value* b) { return value_binop(s, BinOp::Mul, a, b); }
inline Value* value_truediv(ObjStore& s, const Value* a, const Value* b) { return value_binop(s, BinOp::TrueDiv, a, b); }
inline Value* value_floordiv(ObjStore& s, const Value* a, const Value* b) { return value_binop(s, BinOp::FloorDiv, a, b); }
inline Value* value_mod(ObjStore& s, const Value* a, const Value* b) { return value_binop(s, BinOp::Mod, a, b); }
Value* value_neg(ObjStore& store, const Value* a);
bool value_compare(CmpOp op, const Value* a, const Value* b);
bool value_truthy(const Value* v);

BigInt to_bigint(const Value* v);  // Int or BigInt

/// Same text for the same value at every optimization level.
std::string value_repr(const Value* v);
// print() form: strings without quotes.
std::string value_str(const Value* v);
std::string float_repr(double d);

}  // namespace mlq
