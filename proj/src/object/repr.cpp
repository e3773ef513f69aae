#include <charconv>
#include <cmath>
#include <cstdio>

#include "mlq/object.hpp"

namespace mlq {

namespace {

// Shortest round-trip digits of |d| and the decimal exponent such that
// d = 0.DIGITS * 10^decpt.
void shortest_digits(double d, std::string& digits, int& decpt) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, std::fabs(d), std::chars_format::scientific);
  std::string_view s(buf, static_cast<std::size_t>(res.ptr - buf));
  const auto e = s.find('e');
  digits.clear();
  for (char c : s.substr(0, e))
    if (c != '.') digits.push_back(c);
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  int exp10 = 0;
  std::from_chars(s.data() + e + (s[e + 1] == '+' ? 2 : 1), s.data() + s.size(), exp10);
  decpt = exp10 + 1;
}

std::string format_real(double d, bool force_point) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  std::string out = std::signbit(d) ? "-" : "";
  if (d == 0.0) return out + (force_point ? "0.0" : "0");
  std::string digits;
  int decpt;
  shortest_digits(d, digits, decpt);
  const int n = static_cast<int>(digits.size());
  if (decpt <= -4 || decpt > 16) {
    out += digits[0];
    if (n > 1) {
      out += '.';
      out.append(digits, 1, std::string::npos);
    }
    const int e = decpt - 1;
    char buf[16];
    std::snprintf(buf, sizeof buf, "e%c%02d", e < 0 ? '-' : '+', std::abs(e));
    return out + buf;
  }
  if (decpt <= 0) {
    out += "0.";
    out.append(static_cast<std::size_t>(-decpt), '0');
    return out + digits;
  }
  if (decpt >= n) {
    out += digits;
    out.append(static_cast<std::size_t>(decpt - n), '0');
    return force_point ? out + ".0" : out;
  }
  out.append(digits, 0, static_cast<std::size_t>(decpt));
  out += '.';
  out.append(digits, static_cast<std::size_t>(decpt), std::string::npos);
  return out;
}

std::string complex_repr(Complex c) {
  std::string im = format_real(c.im, false) + "j";
  if (c.re == 0.0 && !std::signbit(c.re)) return im;
  std::string re = format_real(c.re, false);
  const bool neg_im = std::signbit(c.im) && !std::isnan(c.im);
  return "(" + re + (neg_im ? "" : "+") + im + ")";
}

std::string str_repr(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "'";
}

}  // namespace

std::string float_repr(double d) { return format_real(d, true); }

std::string value_repr(const Value* v) {
  switch (v->kind) {
    case Kind::Int: return std::to_string(v->i);
    case Kind::BigInt: return v->big->str();
    case Kind::Float: return float_repr(v->f);
    case Kind::Complex: return complex_repr(v->c);
    case Kind::Bool: return v->b ? "True" : "False";
    case Kind::None: return "None";
    case Kind::Str: return str_repr(*v->str);
    case Kind::List: {
      std::string out = "[";
      for (std::size_t i = 0; i < v->list->items.size(); ++i) {
        if (i) out += ", ";
        out += value_repr(v->list->items[i]);
      }
      return out + "]";
    }
    case Kind::Function: return "<function " + v->fn->name + ">";
    case Kind::NativeFunction: return "<built-in function " + v->native->name + ">";
  }
  return "?";
}

std::string value_str(const Value* v) {
  if (v->kind == Kind::Str) return *v->str;
  return value_repr(v);
}

}  // namespace mlq
