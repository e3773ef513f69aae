#include <fstream>
#include <set>
#include <sstream>

#include "mlq/stage.hpp"
#include "stage_internal.hpp"

namespace mlq::stage {
namespace {

constexpr std::size_t kOpcodeSpace = 1u << 16;
constexpr std::size_t kMaxPatternLength = 6;

std::string kinds_csv(const std::vector<StackKind>& ks) {
  std::string s;
  for (StackKind k : ks) {
    if (!s.empty()) s += ",";
    s += kind_token(k);
  }
  return s;
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string s;
  for (const auto& x : xs) {
    if (!s.empty()) s += sep;
    s += x;
  }
  return s;
}

std::string super_mnemonic(const SuperPattern& p) { return "SUPER_" + p.name; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StageError({{p.string(), 0, "cannot read file"}});
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string kindseq_init(const std::vector<StackKind>& ks) {
  std::string s = "{" + std::to_string(ks.size()) + ", {";
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (i) s += ", ";
    s += "StackKind::";
    static const char* names[] = {"Any",     "Int",       "Float",      "Complex",
                                  "Str",     "Bool",      "List",       "ListInt",
                                  "ListFloat", "RawInt",  "RawFloat",   "RawComplex",
                                  "RawBool", "BorrowedListInt", "BorrowedListFloat", "Argc"};
    s += names[static_cast<int>(ks[i])];
  }
  return s + "}}";
}

std::string tmpl_text(const InstrDescriptor& d) { return d.tmpl + "(" + join(d.args, ",") + ")"; }

constexpr const char* kBanner = "// Generated by mlq-stage. Do not edit.\n";

}  // namespace

Manifest build_manifest(const IsaTable& isa, const Catalog& catalog) {
  std::vector<Diagnostic> diags;
  Manifest man;
  std::set<std::string> names;
  std::set<std::vector<std::string>> seqs;
  std::size_t next = isa.instrs.size();
  for (const auto& p : catalog.patterns) {
    auto err = [&](std::string msg) { diags.push_back({catalog.file, p.line, std::move(msg)}); };
    if (!names.insert(p.name).second) {
      err("duplicate pattern name '" + p.name + "'");
      continue;
    }
    if (!seqs.insert(p.constituents).second) {
      err("duplicate pattern '" + p.name + "'");
      continue;
    }
    if (p.constituents.size() < 2 || p.constituents.size() > kMaxPatternLength) {
      err("pattern '" + p.name + "' must have 2 to 6 constituents");
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < p.constituents.size() && ok; ++i) {
      const InstrDescriptor* d = isa.find(p.constituents[i]);
      if (!d) {
        err("unknown constituent '" + p.constituents[i] + "'");
        ok = false;
        break;
      }
      TemplateTraits t = template_traits(*d);
      if (d->tier != Tier::Nama || !t.fusable) {
        err("unfusable constituent '" + d->mnemonic + "'");
        ok = false;
      } else if (t.role == Role::CondJump && i + 1 != p.constituents.size()) {
        err("jump '" + d->mnemonic + "' must be the last constituent");
        ok = false;
      }
    }
    if (!ok) continue;
    ManifestEntry e;
    try {
      e.effect = compose(isa, p.constituents);
    } catch (const StageError& ex) {
      err("pattern '" + p.name + "': " + ex.diagnostics().front().message);
      continue;
    }
    if (next >= kOpcodeSpace) {
      err("opcode space exhausted");
      continue;
    }
    e.mnemonic = super_mnemonic(p);
    e.opcode = static_cast<std::uint16_t>(next++);
    e.constituents = p.constituents;
    man.supers.push_back(std::move(e));
  }
  if (!diags.empty()) throw StageError(diags);
  man.opcode_count = static_cast<std::uint16_t>(next);
  return man;
}

std::string emit_manifest(const Manifest& manifest) {
  std::ostringstream os;
  os << "mlq-manifest v1\n";
  os << "opcodes " << manifest.opcode_count << "\n";
  for (const auto& e : manifest.supers) {
    os << e.mnemonic << "|opcode=" << e.opcode << "|pops:" << kinds_csv(e.effect.pops)
       << "|pushes:" << kinds_csv(e.effect.pushes) << "|width=" << e.effect.width
       << "|constituents:" << join(e.constituents, ",") << "\n";
  }
  return os.str();
}

Manifest parse_manifest(std::string_view text) {
  Manifest man;
  std::vector<Diagnostic> diags;
  auto lines = content_lines(text);
  if (lines.size() < 2 || lines[0].second != "mlq-manifest v1" ||
      lines[1].second.substr(0, 8) != "opcodes ")
    throw StageError({{"<manifest>", 1, "missing manifest header"}});
  man.opcode_count = static_cast<std::uint16_t>(std::stoul(std::string(lines[1].second.substr(8))));
  for (std::size_t i = 2; i < lines.size(); ++i) {
    auto [lineno, line] = lines[i];
    auto f = split(line, '|');
    auto bad = [&, ln = lineno] { diags.push_back({"<manifest>", ln, "malformed manifest entry"}); };
    if (f.size() != 6 || f[1].substr(0, 7) != "opcode=" || f[2].substr(0, 5) != "pops:" ||
        f[3].substr(0, 7) != "pushes:" || f[4].substr(0, 6) != "width=" ||
        f[5].substr(0, 13) != "constituents:") {
      bad();
      continue;
    }
    ManifestEntry e;
    e.mnemonic = std::string(f[0]);
    try {
      e.opcode = static_cast<std::uint16_t>(std::stoul(std::string(f[1].substr(7))));
      e.effect.width = std::stoi(std::string(f[4].substr(6)));
    } catch (const std::exception&) {
      bad();
      continue;
    }
    bool ok = true;
    auto kinds = [&](std::string_view s, std::vector<StackKind>& out) {
      if (s.empty()) return;
      for (auto tok : split(s, ',')) {
        auto k = parse_kind_token(tok);
        if (!k) ok = false;
        else out.push_back(*k);
      }
    };
    kinds(f[2].substr(5), e.effect.pops);
    kinds(f[3].substr(7), e.effect.pushes);
    for (auto c : split(f[5].substr(13), ',')) e.constituents.emplace_back(c);
    if (!ok) {
      bad();
      continue;
    }
    man.supers.push_back(std::move(e));
  }
  if (!diags.empty()) throw StageError(diags);
  return man;
}

std::vector<std::string> verify_manifest(const Manifest& manifest, const IsaTable& isa) {
  std::vector<std::string> errors;
  std::size_t expect = isa.instrs.size();
  for (const auto& e : manifest.supers) {
    bool known = true;
    for (const auto& c : e.constituents)
      if (!isa.find(c)) {
        errors.push_back(e.mnemonic + ": unknown constituent '" + c + "'");
        known = false;
      }
    if (e.opcode != expect)
      errors.push_back(e.mnemonic + ": opcode mismatch (expected " + std::to_string(expect) + ")");
    ++expect;
    if (!known) continue;
    Effect actual;
    try {
      actual = compose(isa, e.constituents);
    } catch (const StageError& ex) {
      errors.push_back(e.mnemonic + ": " + ex.diagnostics().front().message);
      continue;
    }
    if (!(actual == e.effect))
      errors.push_back(e.mnemonic + ": effect mismatch (declared pops:" + kinds_csv(e.effect.pops) +
                       " pushes:" + kinds_csv(e.effect.pushes) + " width=" +
                       std::to_string(e.effect.width) + ", composed pops:" + kinds_csv(actual.pops) +
                       " pushes:" + kinds_csv(actual.pushes) + " width=" +
                       std::to_string(actual.width) + ")");
  }
  if (manifest.opcode_count != expect)
    errors.push_back("opcode count mismatch (expected " + std::to_string(expect) + ")");
  return errors;
}

GeneratedFiles generate(const IsaTable& isa, const Catalog& catalog) {
  Manifest man = build_manifest(isa, catalog);
  GeneratedFiles out;

  {
    std::ostringstream os;
    os << kBanner << "#pragma once\n\n#include <cstddef>\n#include <cstdint>\n\nnamespace mlq {\n\n";
    os << "enum class Op : std::uint16_t {\n";
    for (std::size_t i = 0; i < isa.instrs.size(); ++i)
      os << "  " << isa.instrs[i].mnemonic << " = " << i << ",\n";
    for (const auto& e : man.supers) os << "  " << e.mnemonic << " = " << e.opcode << ",\n";
    os << "};\n\n";
    os << "inline constexpr std::size_t kOpcodeCount = " << man.opcode_count << ";\n";
    os << "inline constexpr std::size_t kSuperCount = " << man.supers.size() << ";\n";
    os << "inline constexpr std::size_t kFirstSuperOpcode = " << isa.instrs.size() << ";\n\n";
    os << "}  // namespace mlq\n";
    out["mlq_opcodes.hpp"] = os.str();
  }

  {
    std::ostringstream os;
    os << kBanner;
    for (const auto& d : isa.instrs) {
      TemplateTraits t = template_traits(d);
      std::vector<std::string> guards = d.guards;
      os << "{\"" << d.mnemonic << "\", Tier::" << (d.tier == Tier::Generic ? "Generic"
                                                   : d.tier == Tier::Prof  ? "Prof"
                                                   : d.tier == Tier::Inca  ? "Inca"
                                                                           : "Nama")
         << ", Role::" << role_name(t.role) << ", \"" << tmpl_text(d) << "\", " << kindseq_init(d.pops)
         << ", " << kindseq_init(d.pushes) << ", \"" << join(guards, ",") << "\", "
         << (t.side_effect_free ? "true" : "false") << ", " << (t.guarded_effect ? "true" : "false")
         << ", " << (t.fusable ? "true" : "false") << ", " << t.length << ", {0, {}}},\n";
    }
    for (const auto& e : man.supers) {
      bool sef = true;
      bool guarded = false;
      std::set<std::string> guards;
      for (const auto& c : e.constituents) {
        const InstrDescriptor* d = isa.find(c);
        TemplateTraits t = template_traits(*d);
        sef = sef && t.side_effect_free;
        guarded = guarded || t.guarded_effect;
        for (const auto& g : d->guards) guards.insert(g);
      }
      os << "{\"" << e.mnemonic << "\", Tier::Super, Role::Super, \"super(" << e.mnemonic.substr(6)
         << ")\", " << kindseq_init(e.effect.pops) << ", " << kindseq_init(e.effect.pushes) << ", \""
         << join(std::vector<std::string>(guards.begin(), guards.end()), ",") << "\", "
         << (sef ? "true" : "false") << ", " << (guarded ? "true" : "false") << ", false, "
         << e.constituents.size() << ", {" << e.constituents.size() << ", {";
      for (std::size_t i = 0; i < e.constituents.size(); ++i)
        os << (i ? ", " : "") << "static_cast<std::uint16_t>(Op::" << e.constituents[i] << ")";
      os << "}}},\n";
    }
    out["mlq_catalog.inc"] = os.str();
  }

  {
    std::ostringstream os;
    os << kBanner;
    auto open = [&](const std::string& name) {
      os << "\ntemplate <bool Tagged>\nMLQ_HANDLER Flow h_" << name << "(Machine& m) {\n";
    };
    auto indent = [](const std::string& body, const char* pad) {
      std::string s;
      std::istringstream is(body);
      std::string line;
      while (std::getline(is, line)) s += std::string(pad) + line + "\n";
      return s;
    };
    for (const auto& d : isa.instrs) {
      open(d.mnemonic);
      if (!has_inline_body(d)) {
        os << "  return " << runtime_call(d) << ";\n}\n";
        continue;
      }
      TemplateTraits t = template_traits(d);
      std::string body = inline_body(d, 0);
      if (body.empty()) {
        os << "  m.ip += " << t.length << ";\n  return Flow::Next;\n}\n";
        continue;
      }
      os << "  Slot* sp = m.sp;\n  {\n" << indent(body, "    ") << "  }\n";
      os << "  m.sp = sp;\n  m.ip += " << t.length << ";\n  return Flow::Next;\n}\n";
    }
    for (const auto& e : man.supers) {
      open(e.mnemonic);
      os << "  Slot* sp = m.sp;\n";
      for (std::size_t k = 0; k < e.constituents.size(); ++k) {
        const InstrDescriptor* d = isa.find(e.constituents[k]);
        os << "  {  // [" << k << "] " << d->mnemonic << "\n"
           << indent(inline_body(*d, static_cast<int>(k)), "    ") << "  }\n";
      }
      os << "  m.sp = sp;\n  m.ip += " << e.constituents.size() << ";\n  return Flow::Next;\n}\n";
    }
    out["mlq_handlers.inc"] = os.str();
  }

  {
    std::ostringstream table, cases;
    table << kBanner;
    cases << kBanner;
    auto row = [&](const std::string& m) {
      table << "&h_" << m << "<Tagged>,\n";
      cases << "case Op::" << m << ": fl = h_" << m << "<Tagged>(m); break;\n";
    };
    for (const auto& d : isa.instrs) row(d.mnemonic);
    for (const auto& e : man.supers) row(e.mnemonic);
    out["mlq_dispatch_table.inc"] = table.str();
    out["mlq_switch_cases.inc"] = cases.str();
  }

  out["manifest.txt"] = emit_manifest(man);
  return out;
}

void write_outputs(const GeneratedFiles& files, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : files) {
    auto path = dir / name;
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      if (os.str() == contents) continue;
    }
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) throw StageError({{path.string(), 0, "cannot write file"}});
    o << contents;
  }
}

GeneratedFiles run_stage(const std::filesystem::path& isa_path,
                         const std::filesystem::path& catalog_path,
                         const std::filesystem::path& out_dir) {
  IsaTable isa = parse_isa(read_file(isa_path), isa_path.filename().string());
  Catalog cat = parse_catalog(read_file(catalog_path), catalog_path.filename().string());
  GeneratedFiles files = generate(isa, cat);
  write_outputs(files, out_dir);
  return files;
}

}  // namespace mlq::stage
