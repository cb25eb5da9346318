#include <iostream>
#include <string>
#include <vector>

#include "smacal_cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return smacal::cli::run(args, std::cout, std::cerr);
}
