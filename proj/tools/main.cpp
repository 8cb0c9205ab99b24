#include <iostream>

#include "diffverify/cli.hpp"

int main(int argc, char** argv) { return diffverify::run_cli(argc, argv, std::cout, std::cerr); }
