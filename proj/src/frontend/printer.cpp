#include <sstream>

#include "mlq/frontend.hpp"

namespace mlq::frontend {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\0': out += "\\0"; break;
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      default: out += c;
    }
  }
  return out + '"';
}

void expr(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case ExprKind::Int: os << e.text; return;
    case ExprKind::Float: os << float_repr(e.num); return;
    case ExprKind::Imag: os << float_repr(e.num) << 'j'; return;
    case ExprKind::Str: os << quote(e.text); return;
    case ExprKind::True: os << "True"; return;
    case ExprKind::False: os << "False"; return;
    case ExprKind::None: os << "None"; return;
    case ExprKind::Name: os << e.text; return;
    case ExprKind::List:
      os << '[';
      for (std::size_t i = 0; i < e.kids.size(); ++i) {
        if (i) os << ", ";
        expr(os, *e.kids[i]);
      }
      os << ']';
      return;
    case ExprKind::Neg:
      os << "(-";
      expr(os, *e.kids[0]);
      os << ')';
      return;
    case ExprKind::Binary:
      os << '(';
      expr(os, *e.kids[0]);
      os << ' ' << binop_symbol(e.bop) << ' ';
      expr(os, *e.kids[1]);
      os << ')';
      return;
    case ExprKind::Compare:
      os << '(';
      expr(os, *e.kids[0]);
      os << ' ' << cmpop_symbol(e.cop) << ' ';
      expr(os, *e.kids[1]);
      os << ')';
      return;
    case ExprKind::Call:
      expr(os, *e.kids[0]);
      os << '(';
      for (std::size_t i = 1; i < e.kids.size(); ++i) {
        if (i > 1) os << ", ";
        expr(os, *e.kids[i]);
      }
      os << ')';
      return;
    case ExprKind::Index:
      expr(os, *e.kids[0]);
      os << '[';
      expr(os, *e.kids[1]);
      os << ']';
      return;
  }
}

void block(std::ostream& os, const Block& b, int indent);

void stmt(std::ostream& os, const Stmt& s, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  switch (s.kind) {
    case StmtKind::Expr:
      os << pad;
      expr(os, *s.exprs[0]);
      os << '\n';
      return;
    case StmtKind::Assign:
      os << pad << s.name << " = ";
      expr(os, *s.exprs[0]);
      os << '\n';
      return;
    case StmtKind::IndexAssign:
      os << pad;
      expr(os, *s.exprs[0]);
      os << '[';
      expr(os, *s.exprs[1]);
      os << "] = ";
      expr(os, *s.exprs[2]);
      os << '\n';
      return;
    case StmtKind::If:
      os << pad << "if ";
      expr(os, *s.exprs[0]);
      os << " {\n";
      block(os, s.body, indent + 1);
      os << pad << '}';
      if (!s.orelse.empty()) {
        os << " else {\n";
        block(os, s.orelse, indent + 1);
        os << pad << '}';
      }
      os << '\n';
      return;
    case StmtKind::While:
      os << pad << "while ";
      expr(os, *s.exprs[0]);
      os << " {\n";
      block(os, s.body, indent + 1);
      os << pad << "}\n";
      return;
    case StmtKind::For:
      os << pad << "for " << s.name << " in range(";
      expr(os, *s.exprs[0]);
      os << ", ";
      expr(os, *s.exprs[1]);
      os << ") {\n";
      block(os, s.body, indent + 1);
      os << pad << "}\n";
      return;
    case StmtKind::Return:
      os << pad << "return";
      if (!s.exprs.empty()) {
        os << ' ';
        expr(os, *s.exprs[0]);
      }
      os << '\n';
      return;
  }
}

void block(std::ostream& os, const Block& b, int indent) {
  for (const auto& s : b) stmt(os, *s, indent);
}

}  // namespace

std::string pretty(const Module& m) {
  std::ostringstream os;
  for (const auto& f : m.funcs) {
    os << "def " << f.name << '(';
    for (std::size_t i = 0; i < f.params.size(); ++i) os << (i ? ", " : "") << f.params[i];
    os << ") {\n";
    block(os, f.body, 1);
    os << "}\n";
  }
  block(os, m.body, 0);
  return os.str();
}

}  // namespace mlq::frontend
