#include <iostream>
#include <string>
#include <vector>

#include "etongue/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return etongue::run_cli(args, std::cout, std::cerr);
}
