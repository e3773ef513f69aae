#include <cctype>

#include "mlq/frontend.hpp"

namespace mlq::frontend {

namespace {

bool is_keyword(std::string_view s) {
  static constexpr std::string_view kw[] = {"def", "if", "else", "while", "for", "in", "return", "True", "False", "None"};
  for (auto k : kw)
    if (k == s) return true;
  return false;
}

}  // namespace

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  int nesting = 0;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    const Span at{line, col};
    if (c == ' ' || c == '\t' || c == '\r') {
      advance();
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    if (c == '\n') {
      if (nesting == 0) out.push_back({TokKind::Newline, "\n", "", at});
      advance();
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      bool real = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.' && j + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        real = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          real = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      TokKind kind = real ? TokKind::Float : TokKind::Int;
      std::string text(src.substr(i, j - i));
      if (j < src.size() && (src[j] == 'j' || src[j] == 'J')) {
        kind = TokKind::Imag;
        ++j;
      }
      if (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        throw CompileError(at, "invalid numeric literal");
      out.push_back({kind, text, "", at});
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      std::string text(src.substr(i, j - i));
      out.push_back({is_keyword(text) ? TokKind::Keyword : TokKind::Name, text, "", at});
      advance(j - i);
      continue;
    }
    if (c == '"' || c == '\'') {
      std::string s;
      advance();
      for (;;) {
        if (i >= src.size() || src[i] == '\n') throw CompileError(at, "unterminated string literal");
        const char d = src[i];
        if (d == c) {
          advance();
          break;
        }
        if (d == '\\') {
          if (i + 1 >= src.size()) throw CompileError(at, "unterminated string literal");
          const char e = src[i + 1];
          switch (e) {
            case 'n': s += '\n'; break;
            case 't': s += '\t'; break;
            case 'r': s += '\r'; break;
            case '0': s += '\0'; break;
            case '\\': s += '\\'; break;
            case '"': s += '"'; break;
            case '\'': s += '\''; break;
            default: throw CompileError({line, col}, std::string("unknown escape \\") + e);
          }
          advance(2);
          continue;
        }
        s += d;
        advance();
      }
      out.push_back({TokKind::Str, "", s, at});
      continue;
    }
    static constexpr std::string_view two[] = {"//", "==", "!=", "<=", ">="};
    bool matched = false;
    for (auto t : two)
      if (src.substr(i, 2) == t) {
        out.push_back({TokKind::Op, std::string(t), "", at});
        advance(2);
        matched = true;
        break;
      }
    if (matched) continue;
    if (std::string_view("+-*/%<>=()[]{},;").find(c) != std::string_view::npos) {
      if (c == '(' || c == '[') ++nesting;
      if ((c == ')' || c == ']') && nesting > 0) --nesting;
      out.push_back({TokKind::Op, std::string(1, c), "", at});
      advance();
      continue;
    }
    throw CompileError(at, std::string("unexpected character '") + c + "'");
  }
  out.push_back({TokKind::End, "", "", {line, col}});
  return out;
}

}  // namespace mlq::frontend
