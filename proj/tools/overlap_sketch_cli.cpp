#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "cli_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  overlap_sketch::cli::Environment env;
  if (const char* s = std::getenv("OVERLAP_SKETCH_SEED")) env.seed = s;
  return overlap_sketch::cli::dispatch(args, std::cout, std::cerr, env);
}
