#include <iostream>
#include <string>
#include <vector>

#include "usdot_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return usdot::cli::run_cli(args, std::cout, std::cerr);
}
