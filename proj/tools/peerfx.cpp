#include <iostream>
#include <string>
#include <vector>

#include "peerfx/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return peerfx::run_cli(args, std::cout, std::cerr);
}
