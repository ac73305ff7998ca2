#include <iostream>
#include <string>
#include <vector>

#include "j6/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return j6::cli::main(args, std::cout, std::cerr);
}
