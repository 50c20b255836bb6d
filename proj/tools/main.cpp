#include <iostream>

#include "isoprnu/cli.hpp"

int main(int argc, char** argv) { return isoprnu::run_cli(argc, argv, std::cout, std::cerr); }
