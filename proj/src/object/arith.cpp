#include <cmath>
#include <limits>

#include "mlq/object.hpp"

namespace mlq {

std::string_view binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::TrueDiv: return "/";
    case BinOp::FloorDiv: return "//";
    case BinOp::Mod: return "%";
  }
  return "?";
}

std::string_view cmpop_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

BigInt to_bigint(const Value* v) {
  if (v->kind == Kind::Int) return BigInt(v->i);
  return *v->big;
}

namespace {

bool is_integer(const Value* v) { return v->kind == Kind::Int || v->kind == Kind::BigInt; }
bool is_real(const Value* v) { return is_integer(v) || v->kind == Kind::Float; }
bool is_numeric(const Value* v) { return is_real(v) || v->kind == Kind::Complex; }

double to_double(const Value* v) {
  switch (v->kind) {
    case Kind::Int: return static_cast<double>(v->i);
    case Kind::BigInt: return v->big->convert_to<double>();
    default: return v->f;
  }
}

Complex to_complex(const Value* v) {
  if (v->kind == Kind::Complex) return v->c;
  return {to_double(v), 0.0};
}

[[noreturn]] void type_error(BinOp op, const Value* a, const Value* b) {
  throw GuestError(ErrorKind::TypeMismatch, "unsupported operand kinds for " + std::string(binop_symbol(op)) +
                                                ": '" + std::string(kind_name(a->kind)) + "' and '" +
                                                std::string(kind_name(b->kind)) + "'");
}

[[noreturn]] void zero_division(std::string_view what) {
  throw GuestError(ErrorKind::ZeroDivision, std::string(what));
}

BigInt big_floordiv(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  BigInt r = a - q * b;
  if (r != 0 && ((r < 0) != (b < 0))) --q;
  return q;
}

BigInt big_mod(const BigInt& a, const BigInt& b) {
  BigInt r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

// Floor division and modulo for floats with the sign conventions of the
// guest language (result of % takes the sign of the divisor).
void float_divmod(double vx, double wx, double& floordiv, double& mod) {
  mod = std::fmod(vx, wx);
  double div = (vx - mod) / wx;
  if (mod != 0.0) {
    if ((wx < 0) != (mod < 0)) {
      mod += wx;
      div -= 1.0;
    }
  } else {
    mod = std::copysign(0.0, wx);
  }
  if (div != 0.0) {
    floordiv = std::floor(div);
    if (div - floordiv > 0.5) floordiv += 1.0;
  } else {
    floordiv = std::copysign(0.0, vx / wx);
  }
}

Complex complex_quot(Complex a, Complex b) {
  const double abs_breal = std::fabs(b.re);
  const double abs_bimag = std::fabs(b.im);
  Complex r;
  if (abs_breal >= abs_bimag) {
    if (abs_breal == 0.0) zero_division("complex division by zero");
    const double ratio = b.im / b.re;
    const double denom = b.re + b.im * ratio;
    r.re = (a.re + a.im * ratio) / denom;
    r.im = (a.im - a.re * ratio) / denom;
  } else if (abs_bimag >= abs_breal) {
    const double ratio = b.re / b.im;
    const double denom = b.re * ratio + b.im;
    r.re = (a.re * ratio + a.im) / denom;
    r.im = (a.im * ratio - a.re) / denom;
  } else {
    r.re = r.im = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

Value* int_binop(ObjStore& s, BinOp op, std::int64_t a, std::int64_t b) {
  std::int64_t r;
  switch (op) {
    case BinOp::Add:
      if (__builtin_add_overflow(a, b, &r)) return s.make_integer(BigInt(a) + b);
      return s.make_int(r);
    case BinOp::Sub:
      if (__builtin_sub_overflow(a, b, &r)) return s.make_integer(BigInt(a) - b);
      return s.make_int(r);
    case BinOp::Mul:
      if (__builtin_mul_overflow(a, b, &r)) return s.make_integer(BigInt(a) * b);
      return s.make_int(r);
    case BinOp::TrueDiv:
      if (b == 0) zero_division("division by zero");
      return s.make_float(static_cast<double>(a) / static_cast<double>(b));
    case BinOp::FloorDiv:
      if (b == 0) zero_division("integer division or modulo by zero");
      if (a == std::numeric_limits<std::int64_t>::min() && b == -1) return s.make_integer(-BigInt(a));
      return s.make_int(int_floordiv(a, b));
    case BinOp::Mod:
      if (b == 0) zero_division("integer division or modulo by zero");
      return s.make_int(int_mod(a, b));
  }
  return nullptr;
}

Value* big_binop(ObjStore& s, BinOp op, const BigInt& a, const BigInt& b) {
  switch (op) {
    case BinOp::Add: return s.make_integer(a + b);
    case BinOp::Sub: return s.make_integer(a - b);
    case BinOp::Mul: return s.make_integer(a * b);
    case BinOp::TrueDiv:
      if (b == 0) zero_division("division by zero");
      return s.make_float(a.convert_to<double>() / b.convert_to<double>());
    case BinOp::FloorDiv:
      if (b == 0) zero_division("integer division or modulo by zero");
      return s.make_integer(big_floordiv(a, b));
    case BinOp::Mod:
      if (b == 0) zero_division("integer division or modulo by zero");
      return s.make_integer(big_mod(a, b));
  }
  return nullptr;
}

Value* float_binop(ObjStore& s, BinOp op, double a, double b) {
  switch (op) {
    case BinOp::Add: return s.make_float(a + b);
    case BinOp::Sub: return s.make_float(a - b);
    case BinOp::Mul: return s.make_float(a * b);
    case BinOp::TrueDiv:
      if (b == 0.0) zero_division("float division by zero");
      return s.make_float(a / b);
    case BinOp::FloorDiv:
    case BinOp::Mod: {
      if (b == 0.0) zero_division(op == BinOp::Mod ? "float modulo" : "float floor division by zero");
      double q, r;
      float_divmod(a, b, q, r);
      return s.make_float(op == BinOp::Mod ? r : q);
    }
  }
  return nullptr;
}

int compare_big_float(const BigInt& a, double d) {
  if (std::isinf(d)) return d > 0 ? -1 : 1;
  const double fl = std::floor(d);
  BigInt fi(fl);
  if (a < fi) return -1;
  if (a > fi) return 1;
  return d > fl ? -1 : 0;
}

// Three-way comparison of two reals; returns 2 when unordered (NaN).
int compare_real(const Value* a, const Value* b) {
  auto sign = [](auto x, auto y) { return x < y ? -1 : x > y ? 1 : 0; };
  if (a->kind == Kind::Int && b->kind == Kind::Int) return sign(a->i, b->i);
  if (is_integer(a) && is_integer(b)) return sign(to_bigint(a), to_bigint(b));
  if (a->kind == Kind::Float && b->kind == Kind::Float) {
    if (std::isnan(a->f) || std::isnan(b->f)) return 2;
    return sign(a->f, b->f);
  }
  // Mixed integer/float: exact comparison, no rounding of the integer.
  const bool a_float = a->kind == Kind::Float;
  const double d = a_float ? a->f : b->f;
  if (std::isnan(d)) return 2;
  const Value* n = a_float ? b : a;
  int c;
  if (n->kind == Kind::Int)
    c = sign(static_cast<long double>(n->i), static_cast<long double>(d));
  else
    c = compare_big_float(*n->big, d);
  return a_float ? -c : c;
}

bool values_equal(const Value* a, const Value* b);

bool lists_equal(const Value* a, const Value* b) {
  const auto& x = a->list->items;
  const auto& y = b->list->items;
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!values_equal(x[i], y[i])) return false;
  return true;
}

bool values_equal(const Value* a, const Value* b) {
  if (is_real(a) && is_real(b)) return compare_real(a, b) == 0;
  if (is_numeric(a) && is_numeric(b)) {
    Complex x = to_complex(a), y = to_complex(b);
    return x.re == y.re && x.im == y.im;
  }
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Kind::Bool: return a->b == b->b;
    case Kind::None: return true;
    case Kind::Str: return *a->str == *b->str;
    case Kind::List: return lists_equal(a, b);
    case Kind::Function: return a->fn->code == b->fn->code;
    case Kind::NativeFunction: return a->native == b->native;
    default: return false;
  }
}

}  // namespace

Value* value_binop(ObjStore& s, BinOp op, const Value* a, const Value* b) {
  if (a->kind == Kind::Int && b->kind == Kind::Int) return int_binop(s, op, a->i, b->i);
  if (is_integer(a) && is_integer(b)) return big_binop(s, op, to_bigint(a), to_bigint(b));
  if (is_real(a) && is_real(b)) return float_binop(s, op, to_double(a), to_double(b));
  if (is_numeric(a) && is_numeric(b)) {
    const Complex x = to_complex(a), y = to_complex(b);
    switch (op) {
      case BinOp::Add: return s.make_complex(complex_add(x, y));
      case BinOp::Sub: return s.make_complex(complex_sub(x, y));
      case BinOp::Mul: return s.make_complex(complex_mul(x, y));
      case BinOp::TrueDiv: return s.make_complex(complex_quot(x, y));
      default: type_error(op, a, b);
    }
  }
  if (op == BinOp::Add && a->kind == Kind::Str && b->kind == Kind::Str) return s.make_str(*a->str + *b->str);
  type_error(op, a, b);
}

Value* value_neg(ObjStore& s, const Value* a) {
  switch (a->kind) {
    case Kind::Int:
      if (a->i == std::numeric_limits<std::int64_t>::min()) return s.make_integer(-BigInt(a->i));
      return s.make_int(-a->i);
    case Kind::BigInt: return s.make_integer(-*a->big);
    case Kind::Float: return s.make_float(-a->f);
    case Kind::Complex: return s.make_complex({-a->c.re, -a->c.im});
    default:
      throw GuestError(ErrorKind::TypeMismatch,
                       "bad operand kind for unary -: '" + std::string(kind_name(a->kind)) + "'");
  }
}

bool value_compare(CmpOp op, const Value* a, const Value* b) {
  if (op == CmpOp::Eq) return values_equal(a, b);
  if (op == CmpOp::Ne) return !values_equal(a, b);
  int c;
  if (is_real(a) && is_real(b)) {
    c = compare_real(a, b);
    if (c == 2) return false;
  } else if (a->kind == Kind::Str && b->kind == Kind::Str) {
    const int r = a->str->compare(*b->str);
    c = r < 0 ? -1 : r > 0 ? 1 : 0;
  } else {
    throw GuestError(ErrorKind::TypeMismatch, "'" + std::string(cmpop_symbol(op)) +
                                                  "' not supported between '" + std::string(kind_name(a->kind)) +
                                                  "' and '" + std::string(kind_name(b->kind)) + "'");
  }
  switch (op) {
    case CmpOp::Lt: return c < 0;
    case CmpOp::Le: return c <= 0;
    case CmpOp::Gt: return c > 0;
    case CmpOp::Ge: return c >= 0;
    default: return false;
  }
}

bool value_truthy(const Value* v) {
  switch (v->kind) {
    case Kind::Int: return v->i != 0;
    case Kind::BigInt: return *v->big != 0;
    case Kind::Float: return v->f != 0.0;
    case Kind::Complex: return v->c.re != 0.0 || v->c.im != 0.0;
    case Kind::Bool: return v->b;
    case Kind::None: return false;
    case Kind::Str: return !v->str->empty();
    case Kind::List: return !v->list->items.empty();
    default: return true;
  }
}

}  // namespace mlq
