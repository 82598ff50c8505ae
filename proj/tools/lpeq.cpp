#include <iostream>

#include "lpeq/cli.hpp"

int main(int argc, char** argv) { return lpeq::run_cli(argc, argv, std::cout, std::cerr); }
