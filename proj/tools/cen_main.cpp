#include <iostream>

#include "cen/cli.hpp"

int main(int argc, char** argv) { return cen::cli::run(argc, argv, std::cout, std::cerr); }
