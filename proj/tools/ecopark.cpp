#include <iostream>

#include "ecopark/cli.hpp"

int main(int argc, char** argv) { return ecopark::cli::run(argc, argv, std::cout, std::cerr); }
