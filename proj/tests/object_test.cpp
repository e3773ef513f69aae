// Object model: arithmetic against an __int128 oracle and frozen bignum
// values, refcount bookkeeping, list kind summaries and repr.
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mlq/object.hpp"

namespace mlq {
namespace {

using i128 = __int128;

std::string i128_str(i128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
  std::string s;
  while (u) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  return neg ? "-" + s : s;
}

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct Fixture : ::testing::Test {
  ObjStore store{true};
  void TearDown() override { EXPECT_EQ(store.finish(), 0); }
  Ref i(std::int64_t v) { return Ref(store, store.make_int(v)); }
  Ref big(const std::string& s) { return Ref(store, store.make_integer(BigInt(s))); }
  Ref f(double v) { return Ref(store, store.make_float(v)); }
  Ref c(double re, double im) { return Ref(store, store.make_complex({re, im})); }
  Ref s(std::string v) { return Ref(store, store.make_str(std::move(v))); }
  std::string bin(BinOp op, const Ref& a, const Ref& b) {
    Ref r(store, value_binop(store, op, a.get(), b.get()));
    return value_repr(r.get());
  }
};

using ObjectTest = Fixture;

TEST_F(ObjectTest, IntArithmeticMatchesInt128Oracle) {
  std::mt19937_64 rng(7);
  const std::int64_t edges[] = {0, 1, -1, 2, -2, std::numeric_limits<std::int64_t>::max(),
                                std::numeric_limits<std::int64_t>::min(), 4611686018427387904LL,
                                -4611686018427387904LL, 3037000499LL, 3037000500LL};
  auto draw = [&]() -> std::int64_t {
    switch (rng() % 3) {
      case 0: return edges[rng() % std::size(edges)];
      case 1: return static_cast<std::int64_t>(rng() % 2001) - 1000;
      default: return static_cast<std::int64_t>(rng());
    }
  };
  for (int n = 0; n < 4000; ++n) {
    const std::int64_t a = draw(), b = draw();
    Ref ra = i(a), rb = i(b);
    const i128 A = a, B = b;
    EXPECT_EQ(bin(BinOp::Add, ra, rb), i128_str(A + B)) << a << " + " << b;
    EXPECT_EQ(bin(BinOp::Sub, ra, rb), i128_str(A - B)) << a << " - " << b;
    EXPECT_EQ(bin(BinOp::Mul, ra, rb), i128_str(A * B)) << a << " * " << b;
    if (b != 0) {
      EXPECT_EQ(bin(BinOp::FloorDiv, ra, rb), i128_str(floor_div(A, B))) << a << " // " << b;
      EXPECT_EQ(bin(BinOp::Mod, ra, rb), i128_str(A - floor_div(A, B) * B)) << a << " % " << b;
    }
  }
}

TEST_F(ObjectTest, ResultsThatFitAreNormalizedToInt) {
  Ref a = i(std::numeric_limits<std::int64_t>::max());
  Ref one = i(1);
  Ref big_sum(store, value_add(store, a.get(), one.get()));
  EXPECT_EQ(big_sum->kind, Kind::BigInt);
  Ref back(store, value_sub(store, big_sum.get(), one.get()));
  EXPECT_EQ(back->kind, Kind::Int);
  EXPECT_EQ(back->i, std::numeric_limits<std::int64_t>::max());
}

// Values computed offline with Python's arbitrary-precision int.
TEST_F(ObjectTest, BigIntFrozenValues) {
  EXPECT_EQ(bin(BinOp::Add, i(4611686018427387904LL), i(4611686018427387904LL)), "9223372036854775808");
  {
    Ref acc = i(1);
    for (int k = 1; k <= 25; ++k) acc = Ref(store, value_mul(store, acc.get(), i(k).get()));
    EXPECT_EQ(value_repr(acc.get()), "15511210043330985984000000");
  }
  EXPECT_EQ(bin(BinOp::Mul, i(9223372036854775807LL), i(9223372036854775807LL)),
            "85070591730234615847396907784232501249");
  Ref x = big("-1000000000000000000000000000000");
  EXPECT_EQ(bin(BinOp::FloorDiv, x, i(7)), "-142857142857142857142857142858");
  EXPECT_EQ(bin(BinOp::Mod, x, i(7)), "6");
  EXPECT_EQ(bin(BinOp::FloorDiv, x, i(-7)), "142857142857142857142857142857");
  EXPECT_EQ(bin(BinOp::Mod, x, i(-7)), "-1");
  EXPECT_EQ(bin(BinOp::TrueDiv, big("100000000000000000000"), i(8)), "1.25e+19");
  EXPECT_EQ(bin(BinOp::Add, big("100000000000000000000"), f(0.5)), "1e+20");
  EXPECT_EQ(value_repr(Ref(store, value_neg(store, i(std::numeric_limits<std::int64_t>::min()).get())).get()),
            "9223372036854775808");
}

TEST_F(ObjectTest, FloorSemantics) {
  EXPECT_EQ(bin(BinOp::FloorDiv, i(-7), i(2)), "-4");
  EXPECT_EQ(bin(BinOp::Mod, i(-7), i(3)), "2");
  EXPECT_EQ(bin(BinOp::Mod, i(7), i(-3)), "-2");
  EXPECT_EQ(bin(BinOp::FloorDiv, i(7), i(-2)), "-4");
  EXPECT_EQ(bin(BinOp::FloorDiv, f(-7.0), f(2.0)), "-4.0");
  EXPECT_EQ(bin(BinOp::Mod, f(-7.0), f(3.0)), "2.0");
  EXPECT_EQ(bin(BinOp::TrueDiv, i(7), i(2)), "3.5");
  EXPECT_EQ(bin(BinOp::TrueDiv, i(6), i(3)), "2.0");
}

TEST_F(ObjectTest, MixedAndComplex) {
  EXPECT_EQ(bin(BinOp::Add, i(1), f(0.5)), "1.5");
  EXPECT_EQ(bin(BinOp::Mul, c(1, 2), c(3, -1)), "(5+5j)");
  EXPECT_EQ(bin(BinOp::Add, f(2.0), c(0, -0.0)), "(2+0j)");
  EXPECT_EQ(bin(BinOp::Sub, c(0, 0), c(0, 1)), "-1j");
  EXPECT_EQ(bin(BinOp::Add, s("ab"), s("cd")), "'abcd'");
  EXPECT_TRUE(value_compare(CmpOp::Lt, i(1).get(), f(1.5).get()));
  EXPECT_TRUE(value_compare(CmpOp::Lt, i(std::numeric_limits<std::int64_t>::max()).get(),
                            big("9223372036854775808").get()));
  EXPECT_TRUE(value_compare(CmpOp::Eq, c(1, 0).get(), f(1.0).get()));
}

TEST_F(ObjectTest, GuestErrors) {
  auto kind_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const GuestError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return ErrorKind::ValueError;
  };
  EXPECT_EQ(kind_of([&] { bin(BinOp::FloorDiv, i(1), i(0)); }), ErrorKind::ZeroDivision);
  EXPECT_EQ(kind_of([&] { bin(BinOp::TrueDiv, f(1), f(0)); }), ErrorKind::ZeroDivision);
  EXPECT_EQ(kind_of([&] { bin(BinOp::Mod, big("100000000000000000000"), i(0)); }), ErrorKind::ZeroDivision);
  EXPECT_EQ(kind_of([&] { bin(BinOp::Add, s("a"), i(1)); }), ErrorKind::TypeMismatch);
  Ref t = Ref::borrow(store, store.bool_value(true));
  EXPECT_EQ(kind_of([&] { bin(BinOp::Add, t, i(1)); }), ErrorKind::TypeMismatch);
  EXPECT_EQ(kind_of([&] { value_compare(CmpOp::Lt, c(1, 1).get(), c(0, 1).get()); }), ErrorKind::TypeMismatch);
}

TEST(FloatRepr, MatchesShortestRoundTrip) {
  const std::pair<double, const char*> cases[] = {
      {0.1, "0.1"},       {1e16, "1e+16"},       {1e-5, "1e-05"},
      {123456789012345680.0, "1.2345678901234568e+17"},
      {2.5, "2.5"},       {-0.0, "-0.0"},        {1.0 / 3.0, "0.3333333333333333"},
      {100.0, "100.0"},   {1e22, "1e+22"},       {0.0001, "0.0001"},
      {std::numeric_limits<double>::infinity(), "inf"},
      {-std::numeric_limits<double>::infinity(), "-inf"},
      {5e-324, "5e-324"}, {1e15, "1000000000000000.0"}};
  for (auto [d, want] : cases) EXPECT_EQ(float_repr(d), want);
  EXPECT_EQ(float_repr(std::nan("")), "nan");
}

TEST_F(ObjectTest, RefcountsReachZero) {
  {
    std::vector<Value*> items;
    for (int k = 0; k < 5; ++k) items.push_back(store.make_int(k));
    Ref l(store, store.make_list(std::move(items)));
    Ref inner(store, store.make_list({store.make_float(1.0)}));
    list_append(store, l.get(), Ref::borrow(store, inner.get()).release());
    EXPECT_EQ(inner->refcnt, 2u);
    EXPECT_EQ(value_repr(l.get()), "[0, 1, 2, 3, 4, [1.0]]");
  }
  EXPECT_EQ(store.live(), 3);  // None, True, False
}

TEST_F(ObjectTest, DeepListReclaimDoesNotRecurse) {
  Ref head(store, store.make_list());
  for (int k = 0; k < 200000; ++k) head = Ref(store, store.make_list({head.release()}));
}

TEST_F(ObjectTest, UnderflowIsReported) {
  ObjStore::set_underflow_handler([](const Value*) { throw RefcountUnderflow("underflow"); });
  Value* v = store.make_int(3);
  v->refcnt = 0;
  EXPECT_THROW(store.decref(v), RefcountUnderflow);
  v->refcnt = 1;
  store.decref(v);
  ObjStore::set_underflow_handler(nullptr);
}

TEST_F(ObjectTest, TrackingListsLiveObjects) {
  Ref a = i(5);
  const auto live = store.live_objects();
  EXPECT_NE(std::find(live.begin(), live.end(), a.get()), live.end());
}

TEST_F(ObjectTest, ElemKindSummary) {
  Ref l(store, store.make_list());
  EXPECT_EQ(l->list->elem, ElemKind::Empty);
  list_append(store, l.get(), store.make_int(1));
  EXPECT_EQ(l->list->elem, ElemKind::Int);
  list_append(store, l.get(), store.make_int(2));
  EXPECT_EQ(l->list->elem, ElemKind::Int);
  const auto e0 = store.list_epoch();
  list_store(store, l.get(), 0, store.make_float(1.0));
  EXPECT_EQ(l->list->elem, ElemKind::Mixed);
  EXPECT_GT(store.list_epoch(), e0);
  Ref fl(store, store.make_list({store.make_float(1.0), store.make_float(2.0)}));
  EXPECT_EQ(fl->list->elem, ElemKind::Float);
  // Replacing a float with a float keeps the summary and the epoch.
  const auto e1 = store.list_epoch();
  list_store(store, fl.get(), 1, store.make_float(3.0));
  EXPECT_EQ(fl->list->elem, ElemKind::Float);
  EXPECT_EQ(store.list_epoch(), e1);
}

TEST(ObjStoreTest, FinishReportsLeaks) {
  ObjStore s;
  Value* leaked = s.make_str("x");
  (void)leaked;
  EXPECT_EQ(s.finish(), 1);
}

}  // namespace
}  // namespace mlq
