#include <iostream>

#include "srd/cli.hpp"

int main(int argc, char** argv) { return srd::cli::main(argc, argv, std::cout, std::cerr); }
