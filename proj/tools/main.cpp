#include <iostream>

#include "mb2d/cli.hpp"

int main(int argc, char** argv) {
  return mb2d::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
