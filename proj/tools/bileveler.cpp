#include <iostream>

#include "bileveler/cli.hpp"

int main(int argc, char** argv) {
  return bileveler::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
