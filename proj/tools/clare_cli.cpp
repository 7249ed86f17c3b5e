#include "clare/harness/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return clare::harness::run_cli(argc, argv, std::cout, std::cerr); }
