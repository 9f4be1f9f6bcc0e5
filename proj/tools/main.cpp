#include <iostream>

#include "tvarch/cli.hpp"

int main(int argc, char** argv) { return tvarch::run_cli(argc, argv, std::cout, std::cerr); }
