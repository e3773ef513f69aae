// Interpreter configuration, event counters and the run entry points.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlq/isa.hpp"
#include "mlq/object.hpp"

namespace mlq {

enum class Dispatch : std::uint8_t { Switch, Threaded };

enum class DeoptReason : std::uint8_t { LocalKind, ListKind, IntOverflow, ZeroDiv, IndexBounds };
inline constexpr std::size_t kDeoptReasons = 5;
std::string_view deopt_reason_name(DeoptReason r);

struct DeoptStress {
  double probability = 0.01;
  std::uint64_t seed = 0;
};

struct VmConfig {
  Dispatch dispatch = Dispatch::Switch;
  int opt = 2;  // 0: generic only, 1: + inline caches, 2: + unboxed regions
  bool super = true;
  std::uint32_t threshold = 100;
  int dequicken_limit = 2;  // re-specializations before a site goes generic for good
  int deopt_limit = 3;      // deopts before a region's pcs are blacklisted
  int depth_limit = 1000;
  bool trace = false;
  bool tagged = false;          // slot-tag checking debug interpreter
  bool attribute_time = false;  // time native builtins
  std::optional<DeoptStress> stress;
};

std::string config_name(const VmConfig& cfg);
// Parses names such as "switch-o0" or "threaded-o2-super".
std::optional<VmConfig> parse_config_name(std::string_view name);

struct EventCounters {
  std::uint64_t dispatches = 0;
  std::uint64_t guard_checks = 0;
  std::uint64_t guard_failures = 0;
  std::uint64_t rewrites_l1 = 0;
  std::uint64_t rewrites_l2 = 0;
  std::uint64_t deopts = 0;
  std::array<std::uint64_t, kDeoptReasons> deopts_by_reason{};
  std::uint64_t unbox_cache_fills = 0;
  std::uint64_t native_calls = 0;
  double native_time = 0.0;  // seconds
  double total_time = 0.0;   // seconds
  std::vector<std::uint64_t> histogram = std::vector<std::uint64_t>(kOpcodeCount, 0);

  std::string format() const;  // key=value lines
};

/// Compiled functions plus "__main__", sharing one object store.
struct Program {
  explicit Program(ObjStore& s) : store(&s) {}
  Program(const Program&) = delete;
  Program& operator=(const Program&) = delete;
  ~Program();

  ObjStore* store;
  std::vector<std::unique_ptr<CodeObject>> codes;

  CodeObject* find(std::string_view name) const;
  std::size_t max_frame_slots() const;
};

struct RunResult {
  bool ok = true;
  Ref result;
  std::string result_repr;
  ErrorKind error_kind = ErrorKind::TypeMismatch;
  std::string error_message;
  std::string output;
  std::string trace;
  EventCounters counters;

  // Everything a guest can observe.
  std::string observable() const;
};

/// Runs `entry` with owned argument references.
RunResult run(Program& program, std::string_view entry, std::vector<Value*> args, const VmConfig& cfg);

/// Compile, run and tear down in a private object store.
struct Outcome {
  RunResult run;
  std::int64_t live_after = 0;  // objects alive after full teardown
};
Outcome run_source(std::string_view source, const VmConfig& cfg, std::string_view entry = "__main__",
                   const std::vector<std::int64_t>& int_args = {});

// Builtin function table; entries have static storage duration.
const std::vector<NativeData>& builtins();
const NativeData* find_builtin(std::string_view name);

}  // namespace mlq
