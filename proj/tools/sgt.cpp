#include <iostream>
#include <string>
#include <vector>

#include "sgt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sgt::run_cli(args, std::cout, std::cerr);
}
