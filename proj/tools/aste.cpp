#include <iostream>

#include "aste/cli/cli.hpp"

int main(int argc, char** argv) { return aste::cli::run(argc, argv, std::cout, std::cerr); }
