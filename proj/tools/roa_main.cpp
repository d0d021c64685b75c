#include <iostream>

#include "roa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return roa::cli::run(args, std::cout, std::cerr);
}
