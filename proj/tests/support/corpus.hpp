// Shared program corpus and configuration grid for differential tests.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlq/vm.hpp"

namespace mlq::testing {

struct CorpusProgram {
  std::string name;
  std::string source;
  std::string entry = "__main__";
  std::vector<std::int64_t> args;
};

/// The shipped benchmark suite at the given fraction of its frozen params
/// (integer params scale; recursive ones keep theirs).
std::vector<CorpusProgram> bench_corpus(const std::string& root, bool full_scale);
std::vector<CorpusProgram> random_corpus(int count, std::uint64_t first_seed = 1);

/// {switch, threaded} x {opt 0, 1, 2} x {super on, off}.
std::vector<VmConfig> config_grid();

std::string read_text(const std::string& path);

}  // namespace mlq::testing
