#include <iostream>

#include "ringlock/cli.hpp"

int main(int argc, char** argv) { return ringlock::run_cli(argc, argv, std::cout, std::cerr); }
