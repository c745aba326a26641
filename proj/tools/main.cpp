#include <iostream>

#include "dnas/cli.hpp"

int main(int argc, char** argv) { return dnas::run_cli(argc, argv, std::cout, std::cerr); }
