#include <iostream>

#include "ck/cli.hpp"

int main(int argc, char** argv) {
  return ck::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
