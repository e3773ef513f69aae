// Build-time staging tool: mlq-stage --isa <file> --catalog <file> --out <dir>
#include <iostream>

#include "CLI11.hpp"
#include "mlq/stage.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mlq-stage: generate interpreter handlers from instruction descriptors"};
  std::string isa, catalog, out;
  app.add_option("--isa", isa, "instruction descriptor file")->required();
  app.add_option("--catalog", catalog, "superinstruction catalog file")->required();
  app.add_option("--out", out, "output directory")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    auto files = mlq::stage::run_stage(isa, catalog, out);
    std::cout << "staged " << files.size() << " files into " << out << "\n";
  } catch (const mlq::stage::StageError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
