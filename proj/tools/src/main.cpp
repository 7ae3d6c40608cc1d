#include "concpd/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return concpd::cli::run(argc, argv, std::cout, std::cerr);
}
