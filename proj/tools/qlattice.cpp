#include <iostream>

#include "qlattice/cli.hpp"

int main(int argc, char** argv) { return qlattice::cli::run(argc, argv, std::cout, std::cerr); }
