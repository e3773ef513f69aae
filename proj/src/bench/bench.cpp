#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "mlq/bench.hpp"

namespace mlq::bench {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  for (;;) {
    const std::size_t e = s.find(sep, b);
    out.push_back(s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    if (e == std::string_view::npos) return out;
    b = e + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_num(std::string_view s, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument(std::string("bad ") + what + ": " + std::string(s));
  return v;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<BenchSpec> parse_suite(std::string_view text, const std::filesystem::path& dir) {
  std::vector<BenchSpec> out;
  bool header = false;
  int lineno = 0;
  for (std::string_view line : split(text, '\n')) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "mlq-bench v1") throw std::invalid_argument("suite: expected 'mlq-bench v1' header");
      header = true;
      continue;
    }
    const auto f = split(line, '|');
    if (f.size() != 6) throw std::invalid_argument("suite line " + std::to_string(lineno) + ": expected 6 fields");
    BenchSpec b;
    b.name = std::string(trim(f[0]));
    b.file = dir / std::string(trim(f[1]));
    b.param = parse_num<std::int64_t>(trim(f[2]), "param");
    const std::string_view d = trim(f[3]);
    std::uint64_t dig = 0;
    auto [p, ec] = std::from_chars(d.data(), d.data() + d.size(), dig, 16);
    if (ec != std::errc{} || p != d.data() + d.size()) throw std::invalid_argument("suite: bad digest " + std::string(d));
    b.digest = dig;
    b.runs = parse_num<int>(trim(f[4]), "runs");
    b.warmup = parse_num<int>(trim(f[5]), "warmup");
    out.push_back(std::move(b));
  }
  if (!header) throw std::invalid_argument("suite: missing 'mlq-bench v1' header");
  return out;
}

std::vector<BenchSpec> load_suite(const std::filesystem::path& dir) {
  return parse_suite(read_file(dir / "suite.txt"), dir);
}

double max_speedup(double f) {
  if (!(f >= 0.0 && f <= 1.0)) throw DomainError("interpreter fraction outside [0,1]");
  if (f == 1.0) return kUnbounded;
  // 12 significant digits: f is measured, and 1 - 0.9 is not 0.1 in binary.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", 1.0 / (1.0 - f));
  return std::strtod(buf, nullptr);
}

double efficiency(double actual, double max) {
  if (!(max > 0.0)) throw DomainError("maximum speedup must be positive");
  if (actual < 0.0) throw DomainError("speedup must be non-negative");
  if (std::isinf(max)) return 0.0;
  return actual / max;
}

Sample run_once(const std::string& source, std::int64_t param, const VmConfig& cfg) {
  Outcome o = run_source(source, cfg, "main", {param});
  Sample s;
  s.observable = o.run.observable();
  s.seconds = o.run.counters.total_time;
  s.counters = o.run.counters;
  return s;
}

Measurement measure(const std::string& source, const BenchSpec& spec, const VmConfig& cfg, int runs, int warmup) {
  Measurement m;
  for (int i = 0; i < warmup; ++i) {
    const Sample s = run_once(source, spec.param, cfg);
    if (fnv1a64(s.observable) != spec.digest)
      throw OutputMismatch(spec.name + ": output digest " + hex64(fnv1a64(s.observable)) + " under " +
                           config_name(cfg) + ", expected " + hex64(spec.digest));
  }
  for (int i = 0; i < std::max(runs, 1); ++i) {
    const Sample s = run_once(source, spec.param, cfg);
    if (fnv1a64(s.observable) != spec.digest)
      throw OutputMismatch(spec.name + ": output digest " + hex64(fnv1a64(s.observable)) + " under " +
                           config_name(cfg) + ", expected " + hex64(spec.digest));
    m.samples.push_back(s.seconds);
    m.counters = s.counters;
  }
  m.median_s = median(m.samples);
  return m;
}

Attribution attribute(const std::string& source, std::int64_t param) {
  VmConfig cfg;
  cfg.opt = 0;
  cfg.super = false;
  cfg.attribute_time = true;
  const Sample s = run_once(source, param, cfg);
  Attribution a;
  a.total_s = s.counters.total_time;
  a.native_s = s.counters.native_time;
  a.f = a.total_s > 0.0 ? std::clamp(1.0 - a.native_s / a.total_s, 0.0, 1.0) : 1.0;
  return a;
}

std::vector<Row> run_benchmark(const BenchSpec& spec, const Options& opts) {
  const std::string source = read_file(spec.file);
  const int runs = opts.runs >= 0 ? opts.runs : spec.runs;
  const int warmup = opts.warmup >= 0 ? opts.warmup : spec.warmup;
  const Attribution a = attribute(source, spec.param);
  const double maxs = max_speedup(a.f);
  std::vector<Row> rows;
  double baseline = 0.0;
  for (const auto& name : opts.configs) {
    auto cfg = parse_config_name(name);
    if (!cfg) throw std::invalid_argument("unknown config '" + name + "'");
    const Measurement m = measure(source, spec, *cfg, runs, warmup);
    Row r;
    r.benchmark = spec.name;
    r.config = name;
    r.median_s = m.median_s;
    if (rows.empty()) baseline = m.median_s;
    r.speedup_vs_baseline = m.median_s > 0.0 ? baseline / m.median_s : 1.0;
    r.f = a.f;
    r.max_speedup = maxs;
    r.efficiency = efficiency(r.speedup_vs_baseline, maxs);
    r.anomaly = anomaly(r.efficiency);
    r.dispatches = m.counters.dispatches;
    r.deopts = m.counters.deopts;
    r.guard_failures = m.counters.guard_failures;
    rows.push_back(r);
  }
  return rows;
}

std::vector<Row> run_suite(const std::vector<BenchSpec>& suite, const Options& opts, std::ostream* log,
                           std::vector<std::string>* failures) {
  std::vector<std::vector<Row>> per(suite.size());
  std::vector<std::string> errs(suite.size());
  std::mutex mu;
  auto work = [&](std::size_t i) {
    try {
      per[i] = run_benchmark(suite[i], opts);
    } catch (const std::exception& e) {
      errs[i] = e.what();
    }
    if (log) {
      std::lock_guard<std::mutex> g(mu);
      *log << (errs[i].empty() ? "done " : "FAILED ") << suite[i].name << (errs[i].empty() ? "" : ": " + errs[i])
           << '\n';
    }
  };
  if (opts.jobs <= 1) {
    for (std::size_t i = 0; i < suite.size(); ++i) work(i);
  } else {
    // One benchmark per worker; each run owns its store and machine.
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (int j = 0; j < opts.jobs; ++j)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> g(mu);
            if (next >= suite.size()) return;
            i = next++;
          }
          work(i);
        }
      });
    for (auto& t : pool) t.join();
  }
  std::vector<Row> rows;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    if (!errs[i].empty() && failures) failures->push_back(errs[i]);
    rows.insert(rows.end(), per[i].begin(), per[i].end());
  }
  return rows;
}

std::string format_double(double v) {
  if (std::isinf(v)) return "unbounded";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

double parse_double(std::string_view s) {
  if (s == "unbounded") return kUnbounded;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("bad number in CSV: " + std::string(s));
  return v;
}

constexpr std::string_view kCsvHeader =
    "benchmark,config,median_s,speedup_vs_baseline,f,max_speedup,efficiency,anomaly,dispatches,deopts,guard_failures";

}  // namespace

std::string emit_csv(const std::vector<Row>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const Row& r : rows) {
    out += r.benchmark + ',' + r.config + ',' + format_double(r.median_s) + ',' + format_double(r.speedup_vs_baseline) +
           ',' + format_double(r.f) + ',' + format_double(r.max_speedup) + ',' + format_double(r.efficiency) + ',' +
           (r.anomaly ? "1" : "0") + ',' + std::to_string(r.dispatches) + ',' + std::to_string(r.deopts) + ',' +
           std::to_string(r.guard_failures) + '\n';
  }
  return out;
}

std::vector<Row> parse_csv(std::string_view text) {
  std::vector<Row> rows;
  bool header = false;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (line != kCsvHeader) throw std::invalid_argument("CSV: unexpected header");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 11) throw std::invalid_argument("CSV: expected 11 columns");
    Row r;
    r.benchmark = std::string(f[0]);
    r.config = std::string(f[1]);
    r.median_s = parse_double(f[2]);
    r.speedup_vs_baseline = parse_double(f[3]);
    r.f = parse_double(f[4]);
    r.max_speedup = parse_double(f[5]);
    r.efficiency = parse_double(f[6]);
    r.anomaly = f[7] == "1";
    r.dispatches = parse_num<std::uint64_t>(f[8], "dispatches");
    r.deopts = parse_num<std::uint64_t>(f[9], "deopts");
    r.guard_failures = parse_num<std::uint64_t>(f[10], "guard_failures");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summary(const std::vector<Row>& rows) {
  std::map<std::string, std::vector<const Row*>> by;
  std::vector<std::string> order;
  for (const Row& r : rows) {
    if (!by.count(r.benchmark)) order.push_back(r.benchmark);
    by[r.benchmark].push_back(&r);
  }
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const double ma = by[a].front()->max_speedup, mb = by[b].front()->max_speedup;
    if (ma != mb) return ma > mb;
    return a < b;
  });
  std::ostringstream os;
  char buf[160];
  for (const auto& name : order) {
    const Row& first = *by[name].front();
    std::snprintf(buf, sizeof buf, "%s: f=%.4f max_speedup=%s", name.c_str(), first.f,
                  format_double(first.max_speedup).c_str());
    os << buf;
    if (first.max_speedup < kMinorPotential) os << " interpreter-minor";
    os << '\n';
    for (const Row* r : by[name]) {
      std::snprintf(buf, sizeof buf, "  %-20s median=%.6fs speedup=%.3f efficiency=%.4f dispatches=%llu deopts=%llu%s",
                    r->config.c_str(), r->median_s, r->speedup_vs_baseline, r->efficiency,
                    static_cast<unsigned long long>(r->dispatches), static_cast<unsigned long long>(r->deopts),
                    r->anomaly ? " ANOMALY(efficiency>1)" : "");
      os << buf << '\n';
    }
  }
  return os.str();
}

std::string plot_data(const std::vector<Row>& rows) {
  std::string out = "benchmark,config,speedup,limit\n";
  for (const Row& r : rows)
    out += r.benchmark + ',' + r.config + ',' + format_double(r.speedup_vs_baseline) + ',' +
           format_double(r.max_speedup) + '\n';
  return out;
}

}  // namespace mlq::bench
