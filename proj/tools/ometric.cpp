#include <iostream>

#include "ometric/cli.hpp"

int main(int argc, char** argv) { return ometric::cli::run(argc, argv, std::cout, std::cerr); }
