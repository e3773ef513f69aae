#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "mlq/stage.hpp"
#include "stage_internal.hpp"

namespace mlq::stage {

std::string Diagnostic::str() const {
  std::ostringstream os;
  os << file << ":" << line << ": " << message;
  return os.str();
}

namespace {

std::string join_diags(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += "\n";
    out += d.str();
  }
  return out;
}

}  // namespace

StageError::StageError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_diags(diags)), diags_(std::move(diags)) {}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::pair<int, std::string_view>> content_lines(std::string_view text) {
  std::vector<std::pair<int, std::string_view>> out;
  int lineno = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    out.emplace_back(lineno, line);
  }
  return out;
}

const InstrDescriptor* IsaTable::find(std::string_view mnemonic) const {
  for (const auto& d : instrs)
    if (d.mnemonic == mnemonic) return &d;
  return nullptr;
}

namespace {

bool parse_kind_list(std::string_view field, std::string_view prefix, std::vector<StackKind>& out,
                     std::string& err) {
  field = trim(field);
  if (field.substr(0, prefix.size()) != prefix) {
    err = "expected field '" + std::string(prefix) + "'";
    return false;
  }
  field.remove_prefix(prefix.size());
  field = trim(field);
  if (field.empty()) return true;
  for (std::string_view tok : split(field, ',')) {
    auto k = parse_kind_token(trim(tok));
    if (!k) {
      err = "unknown stack kind '" + std::string(trim(tok)) + "'";
      return false;
    }
    out.push_back(*k);
  }
  return true;
}

}  // namespace

IsaTable parse_isa(std::string_view text, std::string file) {
  IsaTable table;
  table.file = file;
  std::vector<Diagnostic> diags;
  auto lines = content_lines(text);
  if (lines.empty() || lines.front().second != "mlq-isa v1") {
    diags.push_back({file, lines.empty() ? 1 : lines.front().first, "missing 'mlq-isa v1' header"});
    throw StageError(diags);
  }
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto [lineno, line] = lines[i];
    auto fields = split(line, '|');
    if (fields.size() != 6) {
      diags.push_back({file, lineno, "expected 6 '|'-separated fields"});
      continue;
    }
    InstrDescriptor d;
    d.line = lineno;
    d.mnemonic = std::string(trim(fields[0]));
    auto tier = parse_tier(trim(fields[1]));
    if (!tier || *tier == Tier::Super) {
      diags.push_back({file, lineno, "unknown tier '" + std::string(trim(fields[1])) + "'"});
      continue;
    }
    d.tier = *tier;
    std::string_view tmpl = trim(fields[2]);
    auto lp = tmpl.find('(');
    if (lp == std::string_view::npos || tmpl.back() != ')') {
      diags.push_back({file, lineno, "malformed template '" + std::string(tmpl) + "'"});
      continue;
    }
    d.tmpl = std::string(trim(tmpl.substr(0, lp)));
    std::string_view args = trim(tmpl.substr(lp + 1, tmpl.size() - lp - 2));
    if (!args.empty())
      for (auto a : split(args, ',')) d.args.emplace_back(trim(a));
    std::string err;
    if (!parse_kind_list(fields[3], "pops:", d.pops, err) ||
        !parse_kind_list(fields[4], "pushes:", d.pushes, err)) {
      diags.push_back({file, lineno, err});
      continue;
    }
    std::string_view guards = trim(fields[5]);
    if (guards.substr(0, 7) != "guards:") {
      diags.push_back({file, lineno, "expected field 'guards:'"});
      continue;
    }
    guards.remove_prefix(7);
    if (!trim(guards).empty())
      for (auto g : split(guards, ',')) d.guards.emplace_back(trim(g));
    if (!seen.insert(d.mnemonic).second) {
      diags.push_back({file, lineno, "duplicate mnemonic '" + d.mnemonic + "'"});
      continue;
    }
    try {
      template_traits(d);
    } catch (const StageError& e) {
      for (auto diag : e.diagnostics()) {
        diag.file = file;
        diag.line = lineno;
        diags.push_back(diag);
      }
      continue;
    }
    table.instrs.push_back(std::move(d));
  }
  if (!diags.empty()) throw StageError(diags);
  return table;
}

Catalog parse_catalog(std::string_view text, std::string file) {
  Catalog cat;
  cat.file = file;
  std::vector<Diagnostic> diags;
  auto lines = content_lines(text);
  if (lines.empty() || lines.front().second != "mlq-super v1") {
    diags.push_back({file, lines.empty() ? 1 : lines.front().first, "missing 'mlq-super v1' header"});
    throw StageError(diags);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto [lineno, line] = lines[i];
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      diags.push_back({file, lineno, "expected 'name: mnemonic,...'"});
      continue;
    }
    SuperPattern p;
    p.line = lineno;
    p.name = std::string(trim(line.substr(0, colon)));
    bool ok = !p.name.empty() && std::all_of(p.name.begin(), p.name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
    if (!ok) {
      diags.push_back({file, lineno, "bad pattern name '" + p.name + "'"});
      continue;
    }
    for (auto m : split(line.substr(colon + 1), ',')) p.constituents.emplace_back(trim(m));
    cat.patterns.push_back(std::move(p));
  }
  if (!diags.empty()) throw StageError(diags);
  return cat;
}

Effect compose(const IsaTable& isa, const std::vector<std::string>& seq) {
  Effect eff;
  std::vector<StackKind> stack;
  for (const auto& m : seq) {
    const InstrDescriptor* d = isa.find(m);
    if (!d) throw StageError({{isa.file, 0, "unknown constituent '" + m + "'"}});
    for (auto it = d->pops.rbegin(); it != d->pops.rend(); ++it) {
      if (*it == StackKind::Argc)
        throw StageError({{isa.file, d->line, "variable-effect constituent '" + m + "'"}});
      if (stack.empty()) {
        eff.pops.insert(eff.pops.begin(), *it);
        continue;
      }
      if (stack.back() != *it && !(*it == StackKind::Any && !is_raw(stack.back())))
        throw StageError({{isa.file, d->line,
                           "ill-typed sequence: '" + m + "' pops " + std::string(kind_token(*it)) +
                               " but finds " + std::string(kind_token(stack.back()))}});
      stack.pop_back();
    }
    for (StackKind k : d->pushes) stack.push_back(k);
  }
  eff.pushes = stack;
  for (StackKind k : eff.pushes) eff.width += slot_width(k);
  for (StackKind k : eff.pops) eff.width -= slot_width(k);
  return eff;
}

}  // namespace mlq::stage
