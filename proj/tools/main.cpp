#include <iostream>

#include "stratalloc/cli.hpp"

int main(int argc, char** argv) { return stratalloc::run_cli(argc, argv, std::cout, std::cerr); }
