#include "progen.hpp"

#include <random>
#include <sstream>
#include <vector>

namespace mlq::testing {

namespace {

enum class Ty { Int, Float, Complex };

class Gen {
 public:
  Gen(std::uint64_t seed, const GenOptions& o) : rng_(seed), o_(o) {}

  std::string program() {
    nfuncs_ = pick(0, 2);
    for (int f = 0; f < nfuncs_; ++f) func(f);
    line("i0 = " + std::to_string(pick(-9, 9)));
    line("i1 = " + std::to_string(pick(0, 40)));
    line("i2 = " + (chance(0.2) ? std::string("4611686018427387904") : std::to_string(pick(1, 1000))));
    line("f0 = " + flit());
    line("f1 = " + flit());
    line("c0 = " + flit() + " + " + flit() + "j");
    line("v = " + std::to_string(pick(0, 5)));
    line("li = [" + std::to_string(pick(-5, 5)) + ", " + std::to_string(pick(-5, 5)) + ", " +
         std::to_string(pick(-5, 5)) + "]");
    line("lf = [" + flit() + ", " + flit() + "]");
    line("lm = [1, 2.5]");
    line("s = \"\"");
    for (int i = 0; i < o_.statements; ++i) stmt(0);
    line("print(i0, i1, i2, f0, f1, c0, v)");
    line("print(li, lf, lm, len(s))");
    return os_.str();
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  void line(const std::string& s) { os_ << std::string(static_cast<std::size_t>(indent_) * 2, ' ') << s << '\n'; }

  std::string flit() {
    static const char* k[] = {"0.5", "1.25", "-2.0", "3.0", "0.1", "-0.75", "10.0", "1e-3", "2.5e2"};
    return k[pick(0, 8)];
  }

  std::string ivar() {
    static const char* k[] = {"i0", "i1", "i2"};
    if (!loopvars_.empty() && chance(0.4)) return loopvars_[static_cast<std::size_t>(pick(0, static_cast<int>(loopvars_.size()) - 1))];
    return k[pick(0, 2)];
  }
  std::string fvar() { return chance(0.5) ? "f0" : "f1"; }

  std::string index(const std::string& list) { return "(" + iexpr(1) + ") % len(" + list + ")"; }

  std::string iexpr(int d) {
    const int r = pick(0, d >= 3 ? 1 : 9);
    switch (r) {
      case 0: return std::to_string(pick(-20, 20));
      case 1: return ivar();
      case 2:
      case 3: {
        static const char* ops[] = {" + ", " - ", " * "};
        return "(" + iexpr(d + 1) + ops[pick(0, 2)] + iexpr(d + 1) + ")";
      }
      case 4: {
        // Mostly nonzero divisors; the rest may raise ZeroDivision.
        const std::string den = chance(0.95) ? "(" + iexpr(d + 2) + ") % 97 + 1" : iexpr(d + 2);
        return "(" + iexpr(d + 1) + (chance(0.5) ? " // " : " % ") + "(" + den + "))";
      }
      case 5: return "li[" + index("li") + "]";
      case 6: return "len(li)";
      case 7: return chance(0.3) ? "int(" + fexpr(d + 1) + ")" : "abs(" + iexpr(d + 1) + ")";
      case 8:
        if (nfuncs_ > 0) return "g" + std::to_string(pick(0, nfuncs_ - 1)) + "(" + iexpr(d + 1) + ", " + iexpr(d + 2) + ")";
        return ivar();
      default: return "(-" + ivar() + ")";
    }
  }

  std::string fexpr(int d) {
    const int r = pick(0, d >= 3 ? 1 : 8);
    switch (r) {
      case 0: return flit();
      case 1: return fvar();
      case 2:
      case 3: {
        static const char* ops[] = {" + ", " - ", " * "};
        return "(" + fexpr(d + 1) + ops[pick(0, 2)] + (chance(0.3) ? iexpr(d + 1) : fexpr(d + 1)) + ")";
      }
      case 4: return "(" + fexpr(d + 1) + " / " + (chance(0.95) ? "(abs(" + fexpr(d + 1) + ") + 0.5)" : fexpr(d + 1)) + ")";
      case 5: return "lf[" + index("lf") + "]";
      case 6: return "float(" + iexpr(d + 1) + ")";
      case 7: return "sqrt(abs(" + fexpr(d + 1) + "))";
      default: return "(-" + fvar() + ")";
    }
  }

  std::string cexpr(int d) {
    switch (pick(0, d >= 2 ? 0 : 3)) {
      case 0: return "c0";
      case 1: return "(c0 * c0 + " + fexpr(d + 1) + " * 1j)";
      case 2: return "(c0 - " + fexpr(d + 1) + ")";
      default: return "(c0 * " + flit() + "j)";
    }
  }

  std::string cond() {
    static const char* cmp[] = {" < ", " <= ", " == ", " != ", " > ", " >= "};
    if (chance(0.6)) return iexpr(1) + cmp[pick(0, 5)] + iexpr(1);
    return fexpr(1) + cmp[pick(0, 5)] + fexpr(1);
  }

  // Int assignments inside loops stay bounded by a modulus.
  std::string bound(const std::string& e) { return depth_ > 0 ? "(" + e + ") % 1000003" : e; }

  void stmt(int nest) {
    const int r = pick(0, nest >= 2 ? 11 : 15);
    switch (r) {
      case 0:
      case 1: {
        static const char* k[] = {"i0", "i1", "i2"};
        line(std::string(k[pick(0, 2)]) + " = " + bound(iexpr(0)));
        return;
      }
      case 2:
      case 3: line(fvar() + " = " + fexpr(0)); return;
      case 4: line("c0 = " + cexpr(0)); return;
      case 5: line("li[" + index("li") + "] = " + bound(iexpr(1))); return;
      case 6: line("lf[" + index("lf") + "] = " + fexpr(1)); return;
      case 7:
        // Changes the kind of v or of lm's elements.
        if (chance(0.5)) {
          static const char* k[] = {"i1", "f0", "c0", "0.5", "3"};
          line("v = v + " + std::string(k[pick(0, 4)]));
        } else {
          line("lm[" + index("lm") + "] = " + (chance(0.5) ? iexpr(1) : fexpr(1)));
        }
        return;
      case 8:
        if (!loopvars_.empty() && chance(0.5)) {
          // Type or magnitude change after the loop is likely hot.
          static const char* k[] = {"v = v + 0.5", "v = v + c0", "lm[0] = 0.25", "lm[1] = 7",
                                    "i0 = i0 + 4611686018427387904", "i2 = i2 * 4611686018427387904",
                                    "f0 = 3", "li[0] = 1.5"};
          line("if " + loopvars_.front() + " == " + std::to_string(pick(90, 240)) + " {");
          line(std::string("  ") + k[pick(0, 7)]);
          line("}");
        } else if (depth_ == 0 || chance(0.1)) line("print(" + iexpr(1) + ", " + fexpr(1) + ")");
        else line("i1 = " + bound("i1 + " + iexpr(1)));
        return;
      case 9:
        if (depth_ < 2 && chance(0.3)) line(std::string("append(") + (chance(0.5) ? "li, " + bound(iexpr(1)) : "lf, " + fexpr(1)) + ")");
        else line("s = s + \"" + std::string(1, static_cast<char>('a' + pick(0, 25))) + "\"");
        return;
      case 10:
      case 11: {
        line("if " + cond() + " {");
        block(nest + 1, pick(1, 3));
        if (chance(0.5)) {
          line("} else {");
          block(nest + 1, pick(1, 3));
        }
        line("}");
        return;
      }
      case 12:
      case 13:
      case 14: {
        const std::string lv = "k" + std::to_string(counter_++);
        const int n = depth_ == 0 ? pick(0, o_.max_outer_iters) : pick(0, 12);
        line("for " + lv + " in range(" + std::to_string(pick(-2, 2)) + ", " + std::to_string(n) + ") {");
        loopvars_.push_back(lv);
        ++depth_;
        block(nest + 1, pick(2, 5));
        --depth_;
        loopvars_.pop_back();
        line("}");
        return;
      }
      default: {
        const std::string w = "w" + std::to_string(counter_++);
        const int n = depth_ == 0 ? pick(0, o_.max_outer_iters) : pick(0, 10);
        line(w + " = 0");
        line("while " + w + " < " + std::to_string(n) + " {");
        ++depth_;
        block(nest + 1, pick(2, 4));
        line(w + " = " + w + " + 1");
        --depth_;
        line("}");
        return;
      }
    }
  }

  void block(int nest, int n) {
    ++indent_;
    for (int i = 0; i < n; ++i) stmt(nest);
    --indent_;
  }

  void func(int f) {
    line("def g" + std::to_string(f) + "(a, b) {");
    ++indent_;
    line("t = 0");
    const int n = pick(0, 8);
    line("for j in range(0, " + std::to_string(n) + ") {");
    line("  t = (t * 3 + a - j) % 10007");
    line("}");
    if (chance(0.5)) {
      line("if a < b {");
      line("  return t + b");
      line("}");
    }
    line("return (t + a * b) % 1000003");
    --indent_;
    line("}");
  }

  std::mt19937_64 rng_;
  GenOptions o_;
  std::ostringstream os_;
  int indent_ = 0;
  int depth_ = 0;
  int counter_ = 0;
  int nfuncs_ = 0;
  std::vector<std::string> loopvars_;
};

}  // namespace

std::string random_program(std::uint64_t seed, const GenOptions& opts) { return Gen(seed, opts).program(); }

}  // namespace mlq::testing
