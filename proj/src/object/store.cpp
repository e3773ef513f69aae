#include <cstdio>
#include <cstdlib>

#include "mlq/object.hpp"

namespace mlq {

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Int: return "int";
    case Kind::BigInt: return "int";
    case Kind::Float: return "float";
    case Kind::Complex: return "complex";
    case Kind::Bool: return "bool";
    case Kind::None: return "NoneType";
    case Kind::Str: return "str";
    case Kind::List: return "list";
    case Kind::Function: return "function";
    case Kind::NativeFunction: return "builtin_function";
  }
  return "?";
}

std::string_view error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::ZeroDivision: return "ZeroDivision";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::StackOverflow: return "StackOverflow";
    case ErrorKind::UnboundLocal: return "UnboundLocal";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::MathDomain: return "MathDomain";
    case ErrorKind::ValueError: return "ValueError";
  }
  return "?";
}

namespace {

ObjStore::UnderflowHandler g_underflow_handler = nullptr;

}  // namespace

void ObjStore::set_underflow_handler(UnderflowHandler h) { g_underflow_handler = h; }

void ObjStore::underflow(const Value* v) {
  if (g_underflow_handler) g_underflow_handler(v);
  std::fprintf(stderr, "fatal: refcount underflow on %s object %p\n",
               std::string(kind_name(v->kind)).c_str(), static_cast<const void*>(v));
  std::abort();
}

ObjStore::ObjStore(bool track) : track_(track) {
  none_ = alloc(Kind::None);
  true_ = alloc(Kind::Bool);
  true_->b = true;
  false_ = alloc(Kind::Bool);
  false_->b = false;
}

ObjStore::~ObjStore() {
  if (!finished_) finish();
}

std::int64_t ObjStore::finish() {
  if (!finished_) {
    finished_ = true;
    decref(none_);
    decref(true_);
    decref(false_);
  }
  return live();
}

Value* ObjStore::alloc(Kind k) {
  Value* v = static_cast<Value*>(std::malloc(sizeof(Value)));
  v->kind = k;
  v->refcnt = 1;
  v->i = 0;
  ++allocated_;
  if (track_) registry_.insert(v);
  return v;
}

void ObjStore::reclaim(Value* first) {
  // Iterative so that long chains of nested lists cannot exhaust the C stack.
  std::vector<Value*> work{first};
  while (!work.empty()) {
    Value* v = work.back();
    work.pop_back();
    switch (v->kind) {
      case Kind::BigInt: delete v->big; break;
      case Kind::Str: delete v->str; break;
      case Kind::List:
        for (Value* item : v->list->items) {
          if (item->refcnt == 0) underflow(item);
          if (--item->refcnt == 0) work.push_back(item);
        }
        delete v->list;
        break;
      case Kind::Function: delete v->fn; break;
      default: break;
    }
    ++reclaimed_;
    if (track_) registry_.erase(v);
    std::free(v);
  }
}

std::vector<const Value*> ObjStore::live_objects() const {
  return {registry_.begin(), registry_.end()};
}

Value* ObjStore::make_int(std::int64_t x) {
  Value* v = alloc(Kind::Int);
  v->i = x;
  return v;
}

Value* ObjStore::make_integer(const BigInt& x) {
  if (x >= std::numeric_limits<std::int64_t>::min() && x <= std::numeric_limits<std::int64_t>::max())
    return make_int(static_cast<std::int64_t>(x));
  Value* v = alloc(Kind::BigInt);
  v->big = new BigInt(x);
  return v;
}

Value* ObjStore::make_float(double x) {
  Value* v = alloc(Kind::Float);
  v->f = x;
  return v;
}

Value* ObjStore::make_complex(Complex x) {
  Value* v = alloc(Kind::Complex);
  v->c = x;
  return v;
}

Value* ObjStore::make_str(std::string s) {
  Value* v = alloc(Kind::Str);
  v->str = new std::string(std::move(s));
  return v;
}

Value* ObjStore::make_list(std::vector<Value*> items) {
  Value* v = alloc(Kind::List);
  v->list = new ListData{};
  ElemKind ek = ElemKind::Empty;
  for (std::size_t i = 0; i < items.size(); ++i) ek = elem_kind_after(ek, items[i]->kind, i == 0);
  v->list->items = std::move(items);
  v->list->elem = ek;
  // A new list may reuse a freed list's address; stale cache entries must miss.
  ++list_epoch_;
  return v;
}

Value* ObjStore::make_function(const CodeObject* code, std::string name, int arity) {
  Value* v = alloc(Kind::Function);
  v->fn = new FunctionData{code, std::move(name), arity};
  return v;
}

Value* ObjStore::make_native(const NativeData* native) {
  Value* v = alloc(Kind::NativeFunction);
  v->native = native;
  return v;
}

ElemKind elem_kind_after(ElemKind current, Kind added, bool list_was_empty) {
  ElemKind k = added == Kind::Int ? ElemKind::Int : added == Kind::Float ? ElemKind::Float : ElemKind::Mixed;
  if (list_was_empty) return k;
  return current == k ? k : ElemKind::Mixed;
}

void list_append(ObjStore& store, Value* list, Value* item) {
  ListData& d = *list->list;
  d.elem = elem_kind_after(d.elem, item->kind, d.items.empty());
  d.items.push_back(item);
  store.bump_list_epoch();
}

void list_store(ObjStore& store, Value* list, std::size_t i, Value* item) {
  ListData& d = *list->list;
  Value* old = d.items[i];
  d.items[i] = item;
  // Replacement can only keep or lose homogeneity; Mixed is sticky.
  if (d.elem != ElemKind::Mixed && elem_kind_after(d.elem, item->kind, false) == ElemKind::Mixed) {
    d.elem = ElemKind::Mixed;
    store.bump_list_epoch();
  }
  store.decref(old);
}

}  // namespace mlq
