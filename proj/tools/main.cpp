#include "nnmon/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return nnmon::cli::run(argc, argv, std::cout, std::cerr); }
