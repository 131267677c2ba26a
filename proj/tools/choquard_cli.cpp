#include <iostream>

#include "choquard/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return choquard::cli::run(args, std::cout, std::cerr);
}
