#include <iostream>

#include "ltcar/cli.hpp"

int main(int argc, char** argv) {
  return ltcar::app::run_cli(argc, argv, std::cout, std::cerr);
}
