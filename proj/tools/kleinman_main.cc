#include <iostream>

#include "kleinman/cli.h"

int main(int argc, char** argv) {
  return kleinman::run_cli(argc, argv, std::cout, std::cerr);
}
