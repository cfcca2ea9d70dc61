#include <iostream>

#include "mixfree/cli.hpp"

int main(int argc, char** argv) { return mixfree::run_cli(argc, argv, std::cout, std::cerr); }
