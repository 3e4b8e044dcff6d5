#include <iostream>

#include "sliceplan/cli.hpp"

int main(int argc, char** argv) { return sliceplan::run_cli(argc, argv, std::cout, std::cerr); }
