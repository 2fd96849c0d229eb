#include <iostream>

#include "gridsolve/cli.hpp"

int main(int argc, char** argv) { return gridsolve::cli::run(argc, argv, std::cout, std::cerr); }
