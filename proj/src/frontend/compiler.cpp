#include <algorithm>
#include <bit>
#include <map>
#include <set>

#include "mlq/frontend.hpp"

namespace mlq::frontend {

namespace {

Op binop_opcode(BinOp op) {
  switch (op) {
    case BinOp::Add: return Op::BINARY_ADD;
    case BinOp::Sub: return Op::BINARY_SUB;
    case BinOp::Mul: return Op::BINARY_MULTIPLY;
    case BinOp::TrueDiv: return Op::BINARY_TRUEDIV;
    case BinOp::FloorDiv: return Op::BINARY_FLOORDIV;
    case BinOp::Mod: return Op::BINARY_MOD;
  }
  return Op::NOP;
}

Op cmp_opcode(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return Op::COMPARE_LT;
    case CmpOp::Le: return Op::COMPARE_LE;
    case CmpOp::Eq: return Op::COMPARE_EQ;
    case CmpOp::Ne: return Op::COMPARE_NE;
    case CmpOp::Gt: return Op::COMPARE_GT;
    case CmpOp::Ge: return Op::COMPARE_GE;
  }
  return Op::NOP;
}

struct ModuleInfo {
  std::map<std::string, std::pair<CodeObject*, int>> funcs;  // name -> code, arity
};

class FunctionCompiler {
 public:
  FunctionCompiler(CodeObject& code, const ModuleInfo& mod, ObjStore& store)
      : code_(code), mod_(mod), store_(store) {}

  void compile(const std::vector<std::string>& params, const Block& body) {
    for (const auto& p : params) local(p);
    collect(body);
    code_.arity = static_cast<int>(params.size());
    block(body);
    emit(Op::LOAD_CONST, const_none(), last_line_);
    emit(Op::RETURN_VALUE, 0, last_line_);
    code_.nlocals = static_cast<int>(code_.local_names.size());
    code_.max_depth = max_depth_;
    code_.original_instrs.clear();
    code_.finalize();
  }

 private:
  std::uint16_t local(const std::string& name) {
    auto it = locals_.find(name);
    if (it != locals_.end()) return it->second;
    if (code_.local_names.size() >= 0xffff) throw CompileError({}, "too many locals in " + code_.name);
    const auto idx = static_cast<std::uint16_t>(code_.local_names.size());
    code_.local_names.push_back(name);
    locals_.emplace(name, idx);
    return idx;
  }

  // Every assigned name is local to the whole function.
  void collect(const Block& b) {
    for (const auto& s : b) {
      if (s->kind == StmtKind::Assign || s->kind == StmtKind::For) local(s->name);
      collect(s->body);
      collect(s->orelse);
    }
  }

  std::uint32_t here() const { return static_cast<std::uint32_t>(code_.instrs.size()); }

  void emit(Op op, std::uint32_t operand, int line) {
    if (operand > 0xffff) throw CompileError({line, 1}, "operand out of range");
    code_.instrs.push_back({op, static_cast<std::uint16_t>(operand)});
    code_.lines.push_back(line);
    const StackEffect e = stack_effect(op, static_cast<std::uint16_t>(operand));
    depth_ += e.pushes - e.pops;
    max_depth_ = std::max(max_depth_, depth_ + (e.pops > 0 ? e.pops : 0));
    max_depth_ = std::max(max_depth_, depth_);
    last_line_ = line;
  }

  void patch(std::uint32_t at, std::uint32_t target) {
    if (target > 0xffff) throw CompileError({}, "jump target out of range");
    code_.instrs[at].operand = static_cast<std::uint16_t>(target);
  }

  // ---- constants, deduplicated by kind and bit pattern ----

  std::uint32_t add_const(std::string key, Value* v) {
    auto it = const_index_.find(key);
    if (it != const_index_.end()) {
      store_.decref(v);
      return it->second;
    }
    const auto idx = static_cast<std::uint32_t>(code_.consts.size());
    code_.consts.push_back(v);
    const_index_.emplace(std::move(key), idx);
    return idx;
  }

  std::uint32_t const_none() {
    store_.incref(store_.none());
    return add_const("n", store_.none());
  }

  std::uint32_t const_int_text(const std::string& digits) {
    Value* v = store_.make_integer(BigInt(digits));
    return add_const(v->kind == Kind::Int ? "i" + std::to_string(v->i) : "I" + digits, v);
  }

  std::uint32_t const_of(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Int: return const_int_text(e.text);
      case ExprKind::Float:
        return add_const("f" + std::to_string(std::bit_cast<std::uint64_t>(e.num)), store_.make_float(e.num));
      case ExprKind::Imag:
        return add_const("c0:" + std::to_string(std::bit_cast<std::uint64_t>(e.num)),
                         store_.make_complex({0.0, e.num}));
      case ExprKind::Str: return add_const("s" + e.text, store_.make_str(e.text));
      case ExprKind::True:
      case ExprKind::False: {
        Value* b = store_.bool_value(e.kind == ExprKind::True);
        store_.incref(b);
        return add_const(e.kind == ExprKind::True ? "T" : "F", b);
      }
      case ExprKind::None: return const_none();
      default: throw CompileError(e.span, "not a constant");
    }
  }

  // ---- statements ----

  void block(const Block& b) {
    for (const auto& s : b) stmt(*s);
  }

  void stmt(const Stmt& s) {
    const int line = s.span.line;
    switch (s.kind) {
      case StmtKind::Expr:
        expr(*s.exprs[0]);
        emit(Op::POP_TOP, 0, line);
        return;
      case StmtKind::Assign:
        expr(*s.exprs[0]);
        emit(Op::STORE_FAST, local(s.name), line);
        return;
      case StmtKind::IndexAssign:
        expr(*s.exprs[2]);
        expr(*s.exprs[0]);
        expr(*s.exprs[1]);
        emit(Op::STORE_SUBSCR, 0, line);
        return;
      case StmtKind::Return:
        if (s.exprs.empty()) emit(Op::LOAD_CONST, const_none(), line);
        else expr(*s.exprs[0]);
        emit(Op::RETURN_VALUE, 0, line);
        depth_ = 0;
        return;
      case StmtKind::If: {
        const int d = depth_;
        expr(*s.exprs[0]);
        const std::uint32_t jf = here();
        emit(Op::POP_JUMP_IF_FALSE, 0, line);
        block(s.body);
        if (s.orelse.empty()) {
          patch(jf, here());
        } else {
          const std::uint32_t j = here();
          emit(Op::JUMP_ABSOLUTE, 0, line);
          patch(jf, here());
          depth_ = d;
          block(s.orelse);
          patch(j, here());
        }
        depth_ = d;
        return;
      }
      case StmtKind::While: {
        const int d = depth_;
        const std::uint32_t head = here();
        expr(*s.exprs[0]);
        const std::uint32_t jf = here();
        emit(Op::POP_JUMP_IF_FALSE, 0, line);
        block(s.body);
        emit(Op::PROF_JUMP_ABSOLUTE, head, line);
        patch(jf, here());
        depth_ = d;
        return;
      }
      case StmtKind::For: {
        const int d = depth_;
        const std::uint16_t var = local(s.name);
        const std::uint16_t end = local("$end" + std::to_string(hidden_++));
        expr(*s.exprs[0]);
        expr(*s.exprs[1]);
        emit(Op::STORE_FAST, end, line);
        emit(Op::STORE_FAST, var, line);
        const std::uint32_t head = here();
        emit(Op::LOAD_FAST, var, line);
        emit(Op::LOAD_FAST, end, line);
        emit(Op::COMPARE_LT, 0, line);
        const std::uint32_t jf = here();
        emit(Op::POP_JUMP_IF_FALSE, 0, line);
        block(s.body);
        emit(Op::LOAD_FAST, var, line);
        emit(Op::LOAD_CONST, const_int_text("1"), line);
        emit(Op::BINARY_ADD, 0, line);
        emit(Op::STORE_FAST, var, line);
        emit(Op::PROF_JUMP_ABSOLUTE, head, line);
        patch(jf, here());
        depth_ = d;
        return;
      }
    }
  }

  // ---- expressions ----

  void expr(const Expr& e) {
    const int line = e.span.line;
    switch (e.kind) {
      case ExprKind::Int:
      case ExprKind::Float:
      case ExprKind::Imag:
      case ExprKind::Str:
      case ExprKind::True:
      case ExprKind::False:
      case ExprKind::None: emit(Op::LOAD_CONST, const_of(e), line); return;
      case ExprKind::Name: name(e); return;
      case ExprKind::List:
        for (const auto& k : e.kids) expr(*k);
        emit(Op::BUILD_LIST, static_cast<std::uint32_t>(e.kids.size()), line);
        return;
      case ExprKind::Neg:
        expr(*e.kids[0]);
        emit(Op::UNARY_NEG, 0, line);
        return;
      case ExprKind::Binary:
        expr(*e.kids[0]);
        expr(*e.kids[1]);
        emit(binop_opcode(e.bop), 0, line);
        return;
      case ExprKind::Compare:
        expr(*e.kids[0]);
        expr(*e.kids[1]);
        emit(cmp_opcode(e.cop), 0, line);
        return;
      case ExprKind::Index:
        expr(*e.kids[0]);
        expr(*e.kids[1]);
        emit(Op::BINARY_SUBSCR, 0, line);
        return;
      case ExprKind::Call: call(e); return;
    }
  }

  void name(const Expr& e) {
    const int line = e.span.line;
    if (auto it = locals_.find(e.text); it != locals_.end()) {
      emit(Op::LOAD_FAST, it->second, line);
      return;
    }
    if (auto it = mod_.funcs.find(e.text); it != mod_.funcs.end()) {
      Value* f = store_.make_function(it->second.first, e.text, it->second.second);
      emit(Op::LOAD_CONST, add_const("d" + e.text, f), line);
      return;
    }
    if (const NativeData* nd = find_builtin(e.text)) {
      emit(Op::LOAD_CONST, add_const("b" + e.text, store_.make_native(nd)), line);
      return;
    }
    if (e.text == "append") throw CompileError(e.span, "append() can only be called directly");
    throw CompileError(e.span, "undefined name '" + e.text + "'");
  }

  void call(const Expr& e) {
    const int line = e.span.line;
    const Expr& callee = *e.kids[0];
    const std::size_t argc = e.kids.size() - 1;
    if (callee.kind == ExprKind::Name && !locals_.count(callee.text)) {
      int arity = -2;
      if (auto it = mod_.funcs.find(callee.text); it != mod_.funcs.end()) {
        arity = it->second.second;
      } else if (const NativeData* nd = find_builtin(callee.text)) {
        arity = nd->arity;
      } else if (callee.text == "append") {
        if (argc != 2) throw CompileError(e.span, "append() takes 2 arguments (" + std::to_string(argc) + " given)");
        expr(*e.kids[1]);
        expr(*e.kids[2]);
        emit(Op::LIST_APPEND, 0, line);
        return;
      }
      if (arity >= 0 && static_cast<std::size_t>(arity) != argc)
        throw CompileError(e.span, callee.text + "() takes " + std::to_string(arity) + " arguments (" +
                                       std::to_string(argc) + " given)");
    }
    expr(callee);
    for (std::size_t i = 1; i < e.kids.size(); ++i) expr(*e.kids[i]);
    emit(Op::CALL_FUNCTION, static_cast<std::uint32_t>(argc), line);
  }

  CodeObject& code_;
  const ModuleInfo& mod_;
  ObjStore& store_;
  std::map<std::string, std::uint16_t> locals_;
  std::map<std::string, std::uint32_t> const_index_;
  int depth_ = 0;
  int max_depth_ = 0;
  int hidden_ = 0;
  int last_line_ = 1;
};

}  // namespace

std::unique_ptr<Program> compile(const Module& m, ObjStore& store) {
  auto prog = std::make_unique<Program>(store);
  ModuleInfo mod;
  std::set<std::string> seen;
  for (const auto& f : m.funcs) {
    if (!seen.insert(f.name).second) throw CompileError(f.span, "duplicate function '" + f.name + "'");
    if (f.name == "__main__" || f.name == "append" || find_builtin(f.name))
      throw CompileError(f.span, "cannot redefine '" + f.name + "'");
    auto c = std::make_unique<CodeObject>();
    c->name = f.name;
    mod.funcs.emplace(f.name, std::make_pair(c.get(), static_cast<int>(f.params.size())));
    prog->codes.push_back(std::move(c));
  }
  auto main = std::make_unique<CodeObject>();
  main->name = "__main__";
  CodeObject* main_ptr = main.get();
  prog->codes.push_back(std::move(main));
  for (std::size_t i = 0; i < m.funcs.size(); ++i)
    FunctionCompiler(*prog->codes[i], mod, store).compile(m.funcs[i].params, m.funcs[i].body);
  FunctionCompiler(*main_ptr, mod, store).compile({}, m.body);
  return prog;
}

std::unique_ptr<Program> compile_source(std::string_view src, ObjStore& store) { return compile(parse(src), store); }

}  // namespace mlq::frontend

namespace mlq {

Outcome run_source(std::string_view source, const VmConfig& cfg, std::string_view entry,
                   const std::vector<std::int64_t>& int_args) {
  Outcome out;
  ObjStore store;
  {
    auto prog = frontend::compile_source(source, store);
    std::vector<Value*> args;
    for (std::int64_t a : int_args) args.push_back(store.make_int(a));
    out.run = run(*prog, entry, std::move(args), cfg);
    out.run.result = Ref();
  }
  out.live_after = store.finish();
  return out;
}

}  // namespace mlq
