#include <iostream>
#include <string>
#include <vector>

#include "docnade/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return docnade::cli::run(args, std::cout, std::cerr);
}
