// Build-time staging: instruction descriptors + superinstruction catalog in,
// handler source, dispatch tables and a substitution manifest out.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlq/isa_kinds.hpp"

namespace mlq::stage {

struct Diagnostic {
  std::string file;
  int line = 0;
  std::string message;

  std::string str() const;
};

class StageError : public std::runtime_error {
 public:
  explicit StageError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

struct InstrDescriptor {
  std::string mnemonic;
  Tier tier = Tier::Generic;
  std::string tmpl;
  std::vector<std::string> args;
  std::vector<StackKind> pops;
  std::vector<StackKind> pushes;
  std::vector<std::string> guards;
  int line = 0;
};

struct SuperPattern {
  std::string name;
  std::vector<std::string> constituents;
  int line = 0;
};

/// Properties of a handler body template, keyed by template identifier.
struct TemplateTraits {
  Role role = Role::Plain;
  bool side_effect_free = false;
  // A guarded effect: every guard of the instruction runs before its single
  // heap mutation, so a guard failure leaves no trace.
  bool guarded_effect = false;
  bool fusable = false;
  int length = 1;
};

struct IsaTable {
  std::string file;
  std::vector<InstrDescriptor> instrs;

  const InstrDescriptor* find(std::string_view mnemonic) const;
};

struct Catalog {
  std::string file;
  std::vector<SuperPattern> patterns;
};

/// Net stack effect of an instruction sequence. `pops` lists the entry stack
/// the sequence needs (bottom first), `pushes` what it leaves behind.
struct Effect {
  std::vector<StackKind> pops;
  std::vector<StackKind> pushes;
  int width = 0;  // slots pushed minus slots popped

  bool operator==(const Effect&) const = default;
};

IsaTable parse_isa(std::string_view text, std::string file = "<isa>");
Catalog parse_catalog(std::string_view text, std::string file = "<catalog>");

/// Throws StageError on an unknown template or an effect that disagrees
/// with the template's declared shape.
TemplateTraits template_traits(const InstrDescriptor& d);

/// Composes constituent effects; throws StageError when a constituent pops a
/// kind the sequence has not produced in that position.
Effect compose(const IsaTable& isa, const std::vector<std::string>& seq);

struct ManifestEntry {
  std::string mnemonic;
  std::uint16_t opcode = 0;
  Effect effect;
  std::vector<std::string> constituents;
};

struct Manifest {
  std::uint16_t opcode_count = 0;
  std::vector<ManifestEntry> supers;
};

Manifest build_manifest(const IsaTable& isa, const Catalog& catalog);
std::string emit_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);

/// Empty result means the manifest agrees with the descriptors.
std::vector<std::string> verify_manifest(const Manifest& manifest, const IsaTable& isa);

/// File name -> contents, for every generated artifact.
using GeneratedFiles = std::map<std::string, std::string>;

GeneratedFiles generate(const IsaTable& isa, const Catalog& catalog);

/// Writes each file under `dir`, leaving files with identical contents
/// untouched so downstream builds are not invalidated.
void write_outputs(const GeneratedFiles& files, const std::filesystem::path& dir);

/// Reads, validates and generates; the `stage` subcommand entry point.
GeneratedFiles run_stage(const std::filesystem::path& isa_path,
                         const std::filesystem::path& catalog_path,
                         const std::filesystem::path& out_dir);

}  // namespace mlq::stage
