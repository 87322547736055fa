#include <iostream>
#include <string>
#include <vector>

#include "holonomy/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return holonomy::cli::run_command(args, std::cout, std::cerr);
}
