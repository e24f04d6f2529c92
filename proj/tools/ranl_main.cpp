#include <iostream>

#include "ranl/cli.hpp"

int main(int argc, char** argv) {
  return ranl::run_command(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
