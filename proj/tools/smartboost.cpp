#include <iostream>
#include <string>
#include <vector>

#include "smartboost/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return smartboost::run_cli(args, std::cout, std::cerr);
}
