#include <iostream>

#include "atgrpo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return atgrpo::run_cli(args, std::cout, std::cerr);
}
