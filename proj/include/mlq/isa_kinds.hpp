// Vocabulary shared by the staging generator and the runtime opcode catalog.
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace mlq {

enum class Tier : std::uint8_t { Generic, Prof, Inca, Nama, Super };

/// Kind of one operand-stack entry as declared in the instruction descriptors.
/// Boxed kinds occupy one Ref slot; raw kinds hold machine words; `Argc` stands
/// for "operand-many boxed values" (CALL_FUNCTION, BUILD_LIST).
enum class StackKind : std::uint8_t {
  Any,
  Int,
  Float,
  Complex,
  Str,
  Bool,
  List,
  ListInt,
  ListFloat,
  RawInt,
  RawFloat,
  RawComplex,
  RawBool,
  BorrowedListInt,
  BorrowedListFloat,
  Argc,
};

/// What an instruction does to control flow or locals, as far as the
/// abstract walker and the rewriting passes need to know.
enum class Role : std::uint8_t {
  Plain,
  LoadLocal,
  StoreLocal,
  StoreKeep,
  LoadConst,
  Jump,
  CondJump,
  Return,
  Call,
  BuildList,
  Pad,
  Super,
};

inline constexpr int slot_width(StackKind k) { return k == StackKind::RawComplex ? 2 : 1; }

inline constexpr bool is_raw(StackKind k) {
  switch (k) {
    case StackKind::RawInt:
    case StackKind::RawFloat:
    case StackKind::RawComplex:
    case StackKind::RawBool:
    case StackKind::BorrowedListInt:
    case StackKind::BorrowedListFloat:
      return true;
    default:
      return false;
  }
}

inline constexpr std::string_view kind_token(StackKind k) {
  switch (k) {
    case StackKind::Any: return "any";
    case StackKind::Int: return "int";
    case StackKind::Float: return "float";
    case StackKind::Complex: return "complex";
    case StackKind::Str: return "str";
    case StackKind::Bool: return "bool";
    case StackKind::List: return "list";
    case StackKind::ListInt: return "list[int]";
    case StackKind::ListFloat: return "list[float]";
    case StackKind::RawInt: return "$int";
    case StackKind::RawFloat: return "$float";
    case StackKind::RawComplex: return "$complex";
    case StackKind::RawBool: return "$bool";
    case StackKind::BorrowedListInt: return "&list[int]";
    case StackKind::BorrowedListFloat: return "&list[float]";
    case StackKind::Argc: return "argc";
  }
  return "?";
}

inline std::optional<StackKind> parse_kind_token(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(StackKind::Argc); ++i) {
    auto k = static_cast<StackKind>(i);
    if (kind_token(k) == s) return k;
  }
  return std::nullopt;
}

inline constexpr std::string_view tier_name(Tier t) {
  switch (t) {
    case Tier::Generic: return "GENERIC";
    case Tier::Prof: return "PROF";
    case Tier::Inca: return "INCA";
    case Tier::Nama: return "NAMA";
    case Tier::Super: return "SUPER";
  }
  return "?";
}

inline constexpr char tier_tag(Tier t) {
  switch (t) {
    case Tier::Generic: return 'G';
    case Tier::Prof: return 'P';
    case Tier::Inca: return 'I';
    case Tier::Nama: return 'N';
    case Tier::Super: return 'S';
  }
  return '?';
}

inline std::optional<Tier> parse_tier(std::string_view s) {
  for (Tier t : {Tier::Generic, Tier::Prof, Tier::Inca, Tier::Nama, Tier::Super})
    if (tier_name(t) == s) return t;
  return std::nullopt;
}

inline constexpr std::string_view role_name(Role r) {
  switch (r) {
    case Role::Plain: return "Plain";
    case Role::LoadLocal: return "LoadLocal";
    case Role::StoreLocal: return "StoreLocal";
    case Role::StoreKeep: return "StoreKeep";
    case Role::LoadConst: return "LoadConst";
    case Role::Jump: return "Jump";
    case Role::CondJump: return "CondJump";
    case Role::Return: return "Return";
    case Role::Call: return "Call";
    case Role::BuildList: return "BuildList";
    case Role::Pad: return "Pad";
    case Role::Super: return "Super";
  }
  return "Plain";
}

}  // namespace mlq
