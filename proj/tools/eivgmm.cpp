#include <iostream>

#include "eivgmm/cli.hpp"

int main(int argc, char** argv) { return eivgmm::cli::run(argc, argv, std::cout, std::cerr); }
