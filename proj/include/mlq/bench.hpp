// Benchmark suite runner with Amdahl-style interpreter-fraction attribution.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlq/vm.hpp"

namespace mlq::bench {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class OutputMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchSpec {
  std::string name;
  std::filesystem::path file;
  std::int64_t param = 0;  // passed to main(n)
  std::uint64_t digest = 0;
  int runs = 10;
  int warmup = 1;
};

/// `<dir>/suite.txt`: header `mlq-bench v1`, then `name|file|param|digest|runs|warmup`.
std::vector<BenchSpec> load_suite(const std::filesystem::path& dir);
std::vector<BenchSpec> parse_suite(std::string_view text, const std::filesystem::path& dir);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// 1/(1-f); f = 1 gives kUnbounded.
double max_speedup(double f);
/// actual/max; kUnbounded max gives 0.
double efficiency(double actual, double max);
inline bool anomaly(double eff) { return eff > 1.0; }
inline constexpr double kMinorPotential = 1.2;

struct Sample {
  std::string observable;
  double seconds = 0.0;
  EventCounters counters;
};

/// One run of `main(param)` from a fresh compile.
Sample run_once(const std::string& source, std::int64_t param, const VmConfig& cfg);

struct Measurement {
  std::vector<double> samples;
  double median_s = 0.0;
  EventCounters counters;  // from the last timed run
};

Measurement measure(const std::string& source, const BenchSpec& spec, const VmConfig& cfg, int runs, int warmup);

struct Attribution {
  double total_s = 0.0;
  double native_s = 0.0;
  double f = 1.0;
};

/// Separate opt-0 run with native-call timing.
Attribution attribute(const std::string& source, std::int64_t param);

struct Row {
  std::string benchmark;
  std::string config;
  double median_s = 0.0;
  double speedup_vs_baseline = 1.0;
  double f = 1.0;
  double max_speedup = kUnbounded;
  double efficiency = 0.0;
  bool anomaly = false;
  std::uint64_t dispatches = 0;
  std::uint64_t deopts = 0;
  std::uint64_t guard_failures = 0;

  bool operator==(const Row&) const = default;
};

struct Options {
  std::vector<std::string> configs = {"switch-o0", "threaded-o0", "switch-o1", "switch-o2", "switch-o2-super",
                                      "threaded-o2-super"};
  int runs = -1;    // -1: per-benchmark default
  int warmup = -1;
  int jobs = 1;
};

/// Rows for one benchmark, one per config; the first config is the baseline.
/// Throws OutputMismatch when any config's output digest differs.
std::vector<Row> run_benchmark(const BenchSpec& spec, const Options& opts);
std::vector<Row> run_suite(const std::vector<BenchSpec>& suite, const Options& opts, std::ostream* log,
                           std::vector<std::string>* failures);

std::string emit_csv(const std::vector<Row>& rows);
std::vector<Row> parse_csv(std::string_view text);
std::string summary(const std::vector<Row>& rows);
std::string plot_data(const std::vector<Row>& rows);

std::string format_double(double v);

}  // namespace mlq::bench
