// mlq: run, disassemble and benchmark mlq-script programs.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mlq/bench.hpp"
#include "mlq/frontend.hpp"
#include "mlq/stage.hpp"
#include "mlq/vm.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunFlags {
  std::string file;
  std::string dispatch = "switch";
  int opt = 2;
  std::string super = "on";
  std::uint32_t threshold = 100;
  bool trace = false;
  std::string stress;
  bool counters = false;
  std::string emit;
  bool tagged = false;
  std::optional<std::int64_t> main_arg;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("file", f.file, "source file")->required();
  cmd->add_option("--dispatch", f.dispatch, "switch or threaded")->check(CLI::IsMember({"switch", "threaded"}));
  cmd->add_option("--opt", f.opt, "optimization level")->check(CLI::Range(0, 2));
  cmd->add_option("--super", f.super, "superinstructions")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--threshold", f.threshold, "back-edge count that triggers unboxing");
  cmd->add_flag("--trace-quickening", f.trace, "print each rewrite to stderr");
  cmd->add_option("--deopt-stress", f.stress, "P,SEED: fail unboxed guards with probability P");
  cmd->add_flag("--counters", f.counters, "print event counters to stderr");
  cmd->add_flag("--tagged", f.tagged, "check slot tags on every dispatch");
  cmd->add_option("--main", f.main_arg, "call main(N) after the module body and print its observable result");
}

mlq::VmConfig make_config(const RunFlags& f) {
  mlq::VmConfig cfg;
  cfg.dispatch = f.dispatch == "threaded" ? mlq::Dispatch::Threaded : mlq::Dispatch::Switch;
  cfg.opt = f.opt;
  cfg.super = f.super == "on";
  cfg.threshold = f.threshold;
  cfg.trace = f.trace;
  cfg.tagged = f.tagged;
  if (!f.stress.empty()) {
    const auto comma = f.stress.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("--deopt-stress", "expected P,SEED");
    mlq::DeoptStress s;
    s.probability = std::stod(f.stress.substr(0, comma));
    s.seed = std::stoull(f.stress.substr(comma + 1));
    if (!(s.probability >= 0.0 && s.probability <= 1.0))
      throw CLI::ValidationError("--deopt-stress", "P must be in [0,1]");
    cfg.stress = s;
  }
  return cfg;
}

void print_code(const mlq::Program& prog, bool regions) {
  const bool many = prog.codes.size() > 1;
  for (const auto& c : prog.codes) {
    if (many) std::cout << "== " << c->name << " ==\n";
    std::cout << mlq::disassemble(*c, {.regions = regions}) << "\n";
  }
}

// Runs __main__; optionally dumps the (possibly rewritten) code afterwards.
int run_program(const RunFlags& f, bool disasm_after) {
  const mlq::VmConfig cfg = make_config(f);
  const std::string src = read_file(f.file);
  mlq::ObjStore store;
  int status = 0;
  {
    auto prog = mlq::frontend::compile_source(src, store);
    if (f.emit == "bytecode") {
      print_code(*prog, false);
      return 0;
    }
    mlq::RunResult r = mlq::run(*prog, "__main__", {}, cfg);
    if (r.ok && f.main_arg) {
      std::string out = std::move(r.output);
      r = mlq::run(*prog, "main", {store.make_int(*f.main_arg)}, cfg);
      r.output = out + r.output;
    }
    if (!disasm_after) std::cout << (f.main_arg ? r.observable() : r.output);
    std::cout.flush();
    if (f.trace) std::cerr << r.trace;
    if (!r.ok && !f.main_arg) {
      std::cerr << "error " << mlq::error_kind_name(r.error_kind) << ": " << r.error_message << "\n";
      status = 1;
    }
    if (!r.ok) status = 1;
    if (f.counters) std::cerr << r.counters.format();
    r.result = mlq::Ref();
    if (disasm_after) print_code(*prog, true);
  }
  const std::int64_t live = store.finish();
  if (live != 0) {
    std::cerr << "internal: " << live << " objects leaked\n";
    status = 2;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlq: multi-level quickening interpreter for mlq-script"};
  app.require_subcommand(1);

  RunFlags runf;
  auto* run = app.add_subcommand("run", "run a program");
  add_run_flags(run, runf);
  run->add_option("--emit", runf.emit, "print compiled code instead of running")->check(CLI::IsMember({"bytecode"}));

  RunFlags disf;
  bool show_regions = false;
  auto* dis = app.add_subcommand("disasm", "disassemble a program");
  add_run_flags(dis, disf);
  dis->add_flag("--regions", show_regions, "run first, then show tiers and unboxed regions");

  std::string suite_dir = "bench", configs, csv;
  int runs = -1, warmup = -1, jobs = 1;
  bool plot = false;
  auto* bench = app.add_subcommand("bench", "run the benchmark suite");
  bench->add_option("--suite", suite_dir, "suite directory containing suite.txt");
  bench->add_option("--configs", configs, "comma-separated config names; the first is the baseline");
  bench->add_option("--runs", runs, "timed runs per config")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", warmup, "untimed runs per config")->check(CLI::NonNegativeNumber);
  bench->add_option("--jobs", jobs, "benchmarks measured in parallel")->check(CLI::PositiveNumber);
  bench->add_option("--csv", csv, "write results as CSV");
  bench->add_flag("--plot-data", plot, "print benchmark,config,speedup,limit lines");

  std::string isa, catalog, out;
  auto* stage = app.add_subcommand("stage", "generate handlers from instruction descriptors");
  stage->add_option("--isa", isa, "instruction descriptor file")->required();
  stage->add_option("--catalog", catalog, "superinstruction catalog file")->required();
  stage->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_program(runf, false);
    if (*dis) {
      if (!show_regions) {
        disf.emit = "bytecode";
        return run_program(disf, false);
      }
      return run_program(disf, true);
    }
    if (*bench) {
      mlq::bench::Options opts;
      if (!configs.empty()) {
        opts.configs.clear();
        std::stringstream ss(configs);
        for (std::string c; std::getline(ss, c, ',');)
          if (!c.empty()) opts.configs.push_back(c);
      }
      opts.runs = runs;
      opts.warmup = warmup;
      opts.jobs = jobs;
      const auto suite = mlq::bench::load_suite(suite_dir);
      std::vector<std::string> failures;
      const auto rows = mlq::bench::run_suite(suite, opts, &std::cerr, &failures);
      std::cout << mlq::bench::summary(rows);
      if (plot) std::cout << mlq::bench::plot_data(rows);
      if (!csv.empty()) {
        std::ofstream o(csv, std::ios::binary);
        o << mlq::bench::emit_csv(rows);
        if (!o) throw std::runtime_error("cannot write " + csv);
      }
      for (const auto& e : failures) std::cerr << "error: " << e << "\n";
      return failures.empty() ? 0 : 1;
    }
    if (*stage) {
      auto files = mlq::stage::run_stage(isa, catalog, out);
      std::cout << "staged " << files.size() << " files into " << out << "\n";
      return 0;
    }
  } catch (const mlq::frontend::CompileError& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
