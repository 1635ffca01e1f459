#include <iostream>

#include "gfmdc/cli.hpp"

int main(int argc, char** argv) { return gfmdc::run_cli(argc, argv, std::cout, std::cerr); }
