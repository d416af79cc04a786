#include <iostream>
#include <string>
#include <vector>

#include "lowlight/cli.hpp"

int main(int argc, char** argv) {
  return lowlight::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
