// Handler body templates. Each template identifier fixes an instruction's
// shape (stack effect as a function of its arguments) and its code.
#include <functional>
#include <map>
#include <set>

#include "stage_internal.hpp"

namespace mlq::stage {
namespace {

using K = StackKind;

const std::set<std::string> kBinOps = {"add", "sub", "mul", "truediv", "floordiv", "mod"};
const std::set<std::string> kCmpOps = {"lt", "le", "eq", "ne", "gt", "ge"};

K boxed(const std::string& kind) {
  if (kind == "int") return K::Int;
  if (kind == "float") return K::Float;
  if (kind == "complex") return K::Complex;
  if (kind == "str") return K::Str;
  return K::Any;
}

K raw(const std::string& kind) {
  if (kind == "int") return K::RawInt;
  if (kind == "float") return K::RawFloat;
  return K::RawComplex;
}

K boxed_list(const std::string& elem) {
  if (elem == "int") return K::ListInt;
  if (elem == "float") return K::ListFloat;
  return K::List;
}

K borrowed_list(const std::string& elem) {
  return elem == "int" ? K::BorrowedListInt : K::BorrowedListFloat;
}

struct Shape {
  std::vector<K> pops;
  std::vector<K> pushes;
};

struct Template {
  std::size_t nargs;
  std::vector<std::set<std::string>> arg_domains;
  TemplateTraits traits;
  std::function<Shape(const std::vector<std::string>&)> shape;
};

const std::set<std::string> kNum3 = {"int", "float", "complex"};
const std::set<std::string> kNum4 = {"int", "float", "complex", "str"};
const std::set<std::string> kNum2 = {"int", "float"};
const std::set<std::string> kElem = {"int", "float", "any"};
const std::set<std::string> kNeg = {"neg"};

TemplateTraits traits(Role role, bool sef, bool fusable = false, int length = 1,
                      bool guarded_effect = false) {
  TemplateTraits t;
  t.role = role;
  t.side_effect_free = sef;
  t.fusable = fusable;
  t.length = length;
  t.guarded_effect = guarded_effect;
  return t;
}

Shape fixed(std::vector<K> pops, std::vector<K> pushes) { return {std::move(pops), std::move(pushes)}; }

const std::map<std::string, Template>& registry() {
  static const std::map<std::string, Template> reg = [] {
    std::map<std::string, Template> r;
    auto add = [&](std::string name, std::size_t nargs, std::vector<std::set<std::string>> doms,
                   TemplateTraits t, std::function<Shape(const std::vector<std::string>&)> shape) {
      r.emplace(std::move(name), Template{nargs, std::move(doms), t, std::move(shape)});
    };
    auto konst = [](Shape s) { return [s](const std::vector<std::string>&) { return s; }; };

    add("nop", 0, {}, traits(Role::Plain, true), konst(fixed({}, {})));
    add("load_const", 0, {}, traits(Role::LoadConst, true), konst(fixed({}, {K::Any})));
    add("load_local", 0, {}, traits(Role::LoadLocal, false), konst(fixed({}, {K::Any})));
    add("store_local", 0, {}, traits(Role::StoreLocal, true), konst(fixed({K::Any}, {})));
    add("pop_top", 0, {}, traits(Role::Plain, true), konst(fixed({K::Any}, {})));
    add("dup_top", 0, {}, traits(Role::Plain, true), konst(fixed({K::Any}, {K::Any, K::Any})));
    add("generic_binop", 1, {kBinOps}, traits(Role::Plain, false),
        konst(fixed({K::Any, K::Any}, {K::Any})));
    add("generic_unop", 1, {kNeg}, traits(Role::Plain, false), konst(fixed({K::Any}, {K::Any})));
    add("generic_compare", 1, {kCmpOps}, traits(Role::Plain, false),
        konst(fixed({K::Any, K::Any}, {K::Bool})));
    add("subscr", 0, {}, traits(Role::Plain, false), konst(fixed({K::Any, K::Any}, {K::Any})));
    add("store_subscr", 0, {}, traits(Role::Plain, false), konst(fixed({K::Any, K::Any, K::Any}, {})));
    add("build_list", 0, {}, traits(Role::BuildList, false), konst(fixed({K::Argc}, {K::List})));
    add("list_append", 0, {}, traits(Role::Plain, false), konst(fixed({K::Any, K::Any}, {K::Any})));
    add("call", 0, {}, traits(Role::Call, false), konst(fixed({K::Any, K::Argc}, {K::Any})));
    add("ret", 0, {}, traits(Role::Return, false), konst(fixed({K::Any}, {})));
    add("jump", 0, {}, traits(Role::Jump, true), konst(fixed({}, {})));
    add("jump_if_false", 0, {}, traits(Role::CondJump, true), konst(fixed({K::Any}, {})));
    add("prof_jump", 0, {}, traits(Role::Jump, true), konst(fixed({}, {})));

    add("inca_binop", 2, {kBinOps, kNum4}, traits(Role::Plain, false),
        [](const std::vector<std::string>& a) {
          K k = boxed(a[1]);
          return fixed({k, k}, {a[0] == "truediv" ? K::Float : k});
        });
    add("inca_unop", 2, {kNeg, kNum2}, traits(Role::Plain, false),
        [](const std::vector<std::string>& a) { return fixed({boxed(a[1])}, {boxed(a[1])}); });
    add("inca_compare", 2, {kCmpOps, {"int", "float", "str"}}, traits(Role::Plain, false),
        [](const std::vector<std::string>& a) {
          return fixed({boxed(a[1]), boxed(a[1])}, {K::Bool});
        });
    add("inca_subscr", 1, {kElem}, traits(Role::Plain, false),
        [](const std::vector<std::string>& a) {
          return fixed({boxed_list(a[0]), K::Int}, {boxed(a[0])});
        });
    add("inca_store_subscr", 1, {kElem}, traits(Role::Plain, false),
        [](const std::vector<std::string>& a) {
          return fixed({boxed(a[0]), boxed_list(a[0]), K::Int}, {});
        });

    add("pad", 0, {}, traits(Role::Pad, true), konst(fixed({}, {})));
    add("load_local_unbox", 1, {kNum3}, traits(Role::LoadLocal, true, true),
        [](const std::vector<std::string>& a) { return fixed({}, {raw(a[0])}); });
    add("load_list_local", 1, {kNum2}, traits(Role::LoadLocal, true, true),
        [](const std::vector<std::string>& a) { return fixed({}, {borrowed_list(a[0])}); });
    add("load_const_unbox", 1, {kNum3}, traits(Role::LoadConst, true, true),
        [](const std::vector<std::string>& a) { return fixed({}, {raw(a[0])}); });
    add("store_local_box", 1, {kNum3}, traits(Role::StoreLocal, true, true),
        [](const std::vector<std::string>& a) { return fixed({raw(a[0])}, {}); });
    add("store_keep_box", 1, {kNum3}, traits(Role::StoreKeep, true, false, 2),
        [](const std::vector<std::string>& a) { return fixed({raw(a[0])}, {raw(a[0])}); });
    add("raw_binop", 2, {kBinOps, kNum3}, traits(Role::Plain, true, true),
        [](const std::vector<std::string>& a) {
          K k = raw(a[1]);
          return fixed({k, k}, {a[0] == "truediv" ? K::RawFloat : k});
        });
    add("raw_unop", 2, {kNeg, kNum2}, traits(Role::Plain, true, true),
        [](const std::vector<std::string>& a) { return fixed({raw(a[1])}, {raw(a[1])}); });
    add("raw_compare", 2, {kCmpOps, kNum2}, traits(Role::Plain, true, true),
        [](const std::vector<std::string>& a) {
          return fixed({raw(a[1]), raw(a[1])}, {K::RawBool});
        });
    add("raw_jump_if_false", 0, {}, traits(Role::CondJump, true, true),
        konst(fixed({K::RawBool}, {})));
    add("raw_subscript", 1, {kNum2}, traits(Role::Plain, true, true),
        [](const std::vector<std::string>& a) {
          return fixed({borrowed_list(a[0]), K::RawInt}, {raw(a[0])});
        });
    add("raw_store_subscript", 1, {kNum2}, traits(Role::Plain, false, true, 1, true),
        [](const std::vector<std::string>& a) {
          return fixed({raw(a[0]), borrowed_list(a[0]), K::RawInt}, {});
        });
    return r;
  }();
  return reg;
}

bool is_nama_template(const std::string& t) {
  static const std::set<std::string> nama = {
      "pad",           "load_local_unbox", "load_list_local", "load_const_unbox",
      "store_local_box", "store_keep_box", "raw_binop",       "raw_unop",
      "raw_compare",   "raw_jump_if_false", "raw_subscript",  "raw_store_subscript"};
  return nama.count(t) != 0;
}

std::string shape_str(const std::vector<K>& ks) {
  std::string s;
  for (K k : ks) {
    if (!s.empty()) s += ",";
    s += kind_token(k);
  }
  return s;
}

}  // namespace

TemplateTraits template_traits(const InstrDescriptor& d) {
  const auto& reg = registry();
  auto it = reg.find(d.tmpl);
  if (it == reg.end()) throw StageError({{"", d.line, "unknown template '" + d.tmpl + "'"}});
  const Template& t = it->second;
  if (d.args.size() != t.nargs)
    throw StageError({{"", d.line, "template '" + d.tmpl + "' takes " + std::to_string(t.nargs) +
                                       " argument(s)"}});
  for (std::size_t i = 0; i < t.nargs; ++i)
    if (!t.arg_domains[i].count(d.args[i]))
      throw StageError({{"", d.line, "bad argument '" + d.args[i] + "' for template '" + d.tmpl + "'"}});
  if (is_nama_template(d.tmpl) != (d.tier == Tier::Nama))
    throw StageError({{"", d.line, "template '" + d.tmpl + "' not allowed in tier " +
                                       std::string(tier_name(d.tier))}});
  Shape s = t.shape(d.args);
  if (s.pops != d.pops || s.pushes != d.pushes)
    throw StageError({{"", d.line, "declared effect pops:" + shape_str(d.pops) + " pushes:" +
                                       shape_str(d.pushes) + " does not match template '" + d.tmpl +
                                       "' (pops:" + shape_str(s.pops) + " pushes:" +
                                       shape_str(s.pushes) + ")"}});
  return t.traits;
}

bool has_inline_body(const InstrDescriptor& d) { return d.tier == Tier::Nama; }

namespace {

std::string cxx_arg(const std::string& a) {
  static const std::map<std::string, std::string> m = {
      {"add", "BinOp::Add"},     {"sub", "BinOp::Sub"},   {"mul", "BinOp::Mul"},
      {"truediv", "BinOp::TrueDiv"}, {"floordiv", "BinOp::FloorDiv"}, {"mod", "BinOp::Mod"},
      {"neg", "UnOp::Neg"},      {"lt", "CmpOp::Lt"},     {"le", "CmpOp::Le"},
      {"eq", "CmpOp::Eq"},       {"ne", "CmpOp::Ne"},     {"gt", "CmpOp::Gt"},
      {"ge", "CmpOp::Ge"},       {"int", "TKind::Int"},   {"float", "TKind::Float"},
      {"complex", "TKind::Complex"}, {"str", "TKind::Str"}, {"any", "TKind::Any"}};
  return m.at(a);
}

// Code fragments below run with `m` (Machine&) and `sp` (Slot*, cached stack
// pointer) in scope. $K is the constituent index within the handler.

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string kind_enum(const std::string& k) {
  if (k == "int") return "Kind::Int";
  if (k == "float") return "Kind::Float";
  return "Kind::Complex";
}

std::string elem_enum(const std::string& k) { return k == "int" ? "ElemKind::Int" : "ElemKind::Float"; }

std::string field(const std::string& k) { return k == "int" ? "i" : "f"; }

std::string raw_tag(const std::string& k) { return k == "int" ? "SlotTag::RawInt" : "SlotTag::RawFloat"; }

std::string cmp_sym(const std::string& c) {
  static const std::map<std::string, std::string> m = {{"lt", "<"},  {"le", "<="}, {"eq", "=="},
                                                       {"ne", "!="}, {"gt", ">"},  {"ge", ">="}};
  return m.at(c);
}

std::string body_for(const InstrDescriptor& d) {
  const std::string& t = d.tmpl;
  const auto& a = d.args;
  if (t == "pad") return "";
  if (t == "load_local_unbox") {
    std::string s =
        "Value* v = m.locals[MLQ_ARG($K)].ref;\n"
        "if (!MLQ_GUARD(v != nullptr && v->kind == " + kind_enum(a[0]) + ")) MLQ_DEOPT($K, DeoptReason::LocalKind);\n";
    if (a[0] == "complex")
      return s +
             "sp[0].f = v->c.re;\nsp[1].f = v->c.im;\n"
             "MLQ_TAG(sp, SlotTag::RawComplexLo);\nMLQ_TAG(sp + 1, SlotTag::RawComplexHi);\nsp += 2;\n";
    return s + "sp->" + field(a[0]) + " = v->" + field(a[0]) + ";\nMLQ_TAG(sp, " + raw_tag(a[0]) +
           ");\n++sp;\n";
  }
  if (t == "load_list_local")
    return "const std::uint16_t idx = MLQ_ARG($K);\n"
           "Value* v = m.locals[idx].ref;\n"
           "UnboxEntry& e = m.cache[idx];\n"
           "if (e.list != v || e.epoch != m.store.list_epoch()) {\n"
           "  if (!MLQ_GUARD(v != nullptr && v->kind == Kind::List && v->list->elem == " + elem_enum(a[0]) +
           ")) MLQ_DEOPT($K, DeoptReason::ListKind);\n"
           "  m.fill_unbox_cache(e, v);\n"
           "}\n"
           "sp->ref = v;\nMLQ_TAG(sp, SlotTag::Borrowed);\n++sp;\n";
  if (t == "load_const_unbox") {
    std::string s = "const Value* v = m.consts[MLQ_ARG($K)];\n";
    if (a[0] == "complex")
      return s +
             "sp[0].f = v->c.re;\nsp[1].f = v->c.im;\n"
             "MLQ_TAG(sp, SlotTag::RawComplexLo);\nMLQ_TAG(sp + 1, SlotTag::RawComplexHi);\nsp += 2;\n";
    return s + "sp->" + field(a[0]) + " = v->" + field(a[0]) + ";\nMLQ_TAG(sp, " + raw_tag(a[0]) +
           ");\n++sp;\n";
  }
  if (t == "store_local_box") {
    if (a[0] == "complex") return "sp -= 2;\nm.store_complex_local(MLQ_ARG($K), sp[0].f, sp[1].f);\n";
    return "--sp;\nm.store_" + a[0] + "_local(MLQ_ARG($K), sp->" + field(a[0]) + ");\n";
  }
  if (t == "store_keep_box") {
    if (a[0] == "complex") return "m.store_complex_local(MLQ_ARG($K), sp[-2].f, sp[-1].f);\n";
    return "m.store_" + a[0] + "_local(MLQ_ARG($K), sp[-1]." + field(a[0]) + ");\n";
  }
  if (t == "raw_binop") {
    const std::string& op = a[0];
    const std::string& k = a[1];
    if (k == "complex") {
      std::string fn = op == "add" ? "complex_add" : op == "sub" ? "complex_sub" : "complex_mul";
      return "const Complex rhs{sp[-2].f, sp[-1].f};\n"
             "const Complex lhs{sp[-4].f, sp[-3].f};\n"
             "const Complex r = " + fn + "(lhs, rhs);\n"
             "sp[-4].f = r.re;\nsp[-3].f = r.im;\nsp -= 2;\n";
    }
    if (k == "float") {
      std::string s = "const double rhs = sp[-1].f;\nconst double lhs = sp[-2].f;\n";
      if (op == "truediv") s += "if (!MLQ_GUARD(rhs != 0.0)) MLQ_DEOPT($K, DeoptReason::ZeroDiv);\n";
      std::string sym = op == "add" ? "+" : op == "sub" ? "-" : op == "mul" ? "*" : "/";
      return s + "sp[-2].f = lhs " + sym + " rhs;\n--sp;\n";
    }
    std::string s = "const std::int64_t rhs = sp[-1].i;\nconst std::int64_t lhs = sp[-2].i;\n";
    if (op == "add" || op == "sub" || op == "mul") {
      std::string b = op == "add" ? "__builtin_add_overflow" : op == "sub" ? "__builtin_sub_overflow"
                                                                           : "__builtin_mul_overflow";
      return s + "std::int64_t r;\n"
                 "if (!MLQ_GUARD(!" + b + "(lhs, rhs, &r))) MLQ_DEOPT($K, DeoptReason::IntOverflow);\n"
                 "sp[-2].i = r;\n--sp;\n";
    }
    if (op == "floordiv")
      return s + "if (!MLQ_GUARD(rhs != 0)) MLQ_DEOPT($K, DeoptReason::ZeroDiv);\n"
                 "if (!MLQ_GUARD(!(lhs == INT64_MIN && rhs == -1))) MLQ_DEOPT($K, DeoptReason::IntOverflow);\n"
                 "sp[-2].i = int_floordiv(lhs, rhs);\n--sp;\n";
    if (op == "mod")
      return s + "if (!MLQ_GUARD(rhs != 0)) MLQ_DEOPT($K, DeoptReason::ZeroDiv);\n"
                 "sp[-2].i = int_mod(lhs, rhs);\n--sp;\n";
    return s + "if (!MLQ_GUARD(rhs != 0)) MLQ_DEOPT($K, DeoptReason::ZeroDiv);\n"
               "sp[-2].f = static_cast<double>(lhs) / static_cast<double>(rhs);\n"
               "MLQ_TAG(sp - 2, SlotTag::RawFloat);\n--sp;\n";
  }
  if (t == "raw_unop") {
    if (a[1] == "float") return "sp[-1].f = -sp[-1].f;\n";
    return "if (!MLQ_GUARD(sp[-1].i != INT64_MIN)) MLQ_DEOPT($K, DeoptReason::IntOverflow);\n"
           "sp[-1].i = -sp[-1].i;\n";
  }
  if (t == "raw_compare") {
    std::string f = field(a[1]);
    return "const bool r = sp[-2]." + f + " " + cmp_sym(a[0]) + " sp[-1]." + f + ";\n"
           "sp[-2].i = r;\nMLQ_TAG(sp - 2, SlotTag::RawBool);\n--sp;\n";
  }
  if (t == "raw_jump_if_false")
    return "--sp;\n"
           "if (sp->i == 0) {\n"
           "  m.sp = sp;\n"
           "  m.ip = m.code_base + MLQ_ARG($K);\n"
           "  return Flow::Next;\n"
           "}\n";
  if (t == "raw_subscript")
    return "const std::int64_t i = sp[-1].i;\n"
           "Value* lst = sp[-2].ref;\n"
           "const UnboxEntry& e = m.cache[MLQ_ARG($K)];\n"
           "MLQ_CHECK_CACHE(e, lst);\n"
           "if (!MLQ_GUARD(static_cast<std::uint64_t>(i) < e.length)) MLQ_DEOPT($K, DeoptReason::IndexBounds);\n"
           "sp[-2]." + field(a[0]) + " = lst->list->items[static_cast<std::size_t>(i)]->" + field(a[0]) + ";\n"
           "MLQ_TAG(sp - 2, " + raw_tag(a[0]) + ");\n--sp;\n";
  if (t == "raw_store_subscript")
    return "const std::int64_t i = sp[-1].i;\n"
           "Value* lst = sp[-2].ref;\n"
           "const UnboxEntry& e = m.cache[MLQ_ARG($K)];\n"
           "MLQ_CHECK_CACHE(e, lst);\n"
           "if (!MLQ_GUARD(static_cast<std::uint64_t>(i) < e.length)) MLQ_DEOPT($K, DeoptReason::IndexBounds);\n"
           "m.store_" + a[0] + "_elem(lst, static_cast<std::size_t>(i), sp[-3]." + field(a[0]) + ");\n"
           "sp -= 3;\n";
  return "";
}

}  // namespace

std::string runtime_call(const InstrDescriptor& d) {
  std::string s = "rt::" + d.tmpl + "<Tagged";
  for (const auto& a : d.args)
    if (a != "neg") s += ", " + cxx_arg(a);
  return s + ">(m)";
}

std::string inline_body(const InstrDescriptor& d, int k) {
  return replace_all(body_for(d), "$K", std::to_string(k));
}

}  // namespace mlq::stage
